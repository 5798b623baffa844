#include "crsynth/data/toy.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "crsynth/core/rng.hpp"
#include "crsynth/data/raster_io.hpp"

namespace crsynth::data {

namespace fs = std::filesystem;

namespace {

// Bilinearly interpolated value-noise octave from a coarse random grid.
Tensor noise_octave(int64_t size, int64_t grid, Rng& rng) {
  Tensor g(Shape{grid + 1, grid + 1});
  for (int64_t i = 0; i < g.numel(); ++i) g[i] = rng.uniform();
  Tensor out(Shape{size, size});
  for (int64_t y = 0; y < size; ++y) {
    double fy = static_cast<double>(y) / static_cast<double>(size) * static_cast<double>(grid);
    int64_t y0 = static_cast<int64_t>(fy);
    double wy = fy - static_cast<double>(y0);
    for (int64_t x = 0; x < size; ++x) {
      double fx = static_cast<double>(x) / static_cast<double>(size) * static_cast<double>(grid);
      int64_t x0 = static_cast<int64_t>(fx);
      double wx = fx - static_cast<double>(x0);
      double v = (1 - wy) * ((1 - wx) * g.at({y0, x0}) + wx * g.at({y0, x0 + 1})) +
                 wy * ((1 - wx) * g.at({y0 + 1, x0}) + wx * g.at({y0 + 1, x0 + 1}));
      out.at({y, x}) = v;
    }
  }
  return out;
}

Tensor fractal_noise(int64_t size, Rng& rng) {
  Tensor acc(Shape{size, size});
  double amp = 1.0, total = 0.0;
  for (int64_t grid : {4, 8, 16}) {
    Tensor oct = noise_octave(size, std::min(grid, size), rng);
    for (int64_t i = 0; i < acc.numel(); ++i) acc[i] += amp * oct[i];
    total += amp;
    amp *= 0.5;
  }
  double lo = acc[0], hi = acc[0];
  for (int64_t i = 0; i < acc.numel(); ++i) {
    lo = std::min(lo, acc[i]);
    hi = std::max(hi, acc[i]);
  }
  double span = hi - lo;
  for (int64_t i = 0; i < acc.numel(); ++i) acc[i] = span > 0 ? (acc[i] - lo) / span : 0.5;
  (void)total;
  return acc;
}

struct Field {
  double cx, cy, hw, hh, angle;
  double tint[3];
};

bool inside_field(const Field& f, double x, double y) {
  double dx = x - f.cx, dy = y - f.cy;
  double c = std::cos(f.angle), s = std::sin(f.angle);
  double u = c * dx + s * dy;
  double v = -s * dx + c * dy;
  return std::fabs(u) <= f.hw && std::fabs(v) <= f.hh;
}

// Clipped-dB structural SAR response: edge magnitude + local roughness with
// multiplicative gamma speckle (shape 4).
Tensor simulate_sar(const Tensor& optical, const Tensor& terrain, Rng& rng) {
  int64_t h = optical.shape()[1], w = optical.shape()[2];
  Tensor gray(Shape{h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      gray.at({y, x}) = (optical.at({0, y, x}) + optical.at({1, y, x}) + optical.at({2, y, x})) / 3.0;
    }
  }
  auto at = [&](int64_t y, int64_t x) {
    y = std::clamp<int64_t>(y, 0, h - 1);
    x = std::clamp<int64_t>(x, 0, w - 1);
    return gray.at({y, x});
  };
  Tensor sar(Shape{2, h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      double gx = 0.5 * (at(y, x + 1) - at(y, x - 1));
      double gy = 0.5 * (at(y + 1, x) - at(y - 1, x));
      double edge = std::sqrt(gx * gx + gy * gy);
      double mean = 0.0, var = 0.0;
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dx = -1; dx <= 1; ++dx) mean += at(y + dy, x + dx);
      }
      mean /= 9.0;
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dx = -1; dx <= 1; ++dx) {
          double d = at(y + dy, x + dx) - mean;
          var += d * d;
        }
      }
      var /= 9.0;
      double rough = terrain.at({y, x});
      double vv = 0.08 + 3.0 * edge + 4.0 * var + 0.15 * rough;
      double vh = 0.05 + 1.8 * edge + 2.0 * var + 0.25 * (1.0 - rough);
      double speckle_vv = rng.gamma(4.0) / 4.0;
      double speckle_vh = rng.gamma(4.0) / 4.0;
      auto to_db = [](double v) { return std::clamp(10.0 * std::log10(std::max(v, 1e-3)), -25.0, 0.0); };
      sar.at({0, y, x}) = to_db(vv * speckle_vv);
      sar.at({1, y, x}) = to_db(vh * speckle_vh);
    }
  }
  return sar;
}

}  // namespace

SceneInstance generate_toy_scene(uint64_t seed, int64_t size, double cloud_fraction_target,
                                 int64_t required_divisor) {
  if (size <= 0 || size % required_divisor != 0) {
    throw ConfigError("toy scene: size " + std::to_string(size) + " is not divisible by " +
                      std::to_string(required_divisor));
  }
  if (cloud_fraction_target < 0.0 || cloud_fraction_target > 0.95) {
    throw ConfigError("toy scene: cloud fraction target must be in [0, 0.95]");
  }
  Rng rng(seed);

  // Land cover: terrain palette, field rectangles, roads.
  Tensor terrain = fractal_noise(size, rng);
  Tensor moisture = fractal_noise(size, rng);
  Tensor ref(Shape{3, size, size});
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      double t = terrain.at({y, x});
      double m = moisture.at({y, x});
      ref.at({0, y, x}) = 0.18 + 0.30 * t - 0.10 * m;
      ref.at({1, y, x}) = 0.25 + 0.35 * t + 0.10 * m;
      ref.at({2, y, x}) = 0.12 + 0.18 * (1.0 - m);
    }
  }

  int64_t n_fields = rng.uniform_int(3, 8);
  std::vector<Field> fields;
  for (int64_t i = 0; i < n_fields; ++i) {
    Field f;
    f.cx = rng.uniform(0.1, 0.9) * static_cast<double>(size);
    f.cy = rng.uniform(0.1, 0.9) * static_cast<double>(size);
    f.hw = rng.uniform(0.05, 0.2) * static_cast<double>(size);
    f.hh = rng.uniform(0.05, 0.2) * static_cast<double>(size);
    f.angle = rng.uniform(0.0, M_PI);
    for (double& c : f.tint) c = rng.uniform(-0.22, 0.22);
    fields.push_back(f);
    for (int64_t y = 0; y < size; ++y) {
      for (int64_t x = 0; x < size; ++x) {
        if (inside_field(f, static_cast<double>(x), static_cast<double>(y))) {
          for (int64_t ch = 0; ch < 3; ++ch) {
            ref.at({ch, y, x}) = 0.6 * ref.at({ch, y, x}) + 0.4 * (0.45 + f.tint[ch]);
          }
        }
      }
    }
  }

  int64_t n_roads = rng.uniform_int(1, 3);
  for (int64_t r = 0; r < n_roads; ++r) {
    double y = rng.uniform(0.1, 0.9) * static_cast<double>(size);
    double dir = rng.uniform(-0.4, 0.4);
    for (int64_t x = 0; x < size; ++x) {
      y += dir + rng.uniform(-0.3, 0.3);
      int64_t yi = std::clamp<int64_t>(static_cast<int64_t>(y), 1, size - 2);
      for (int64_t dy = 0; dy < 2; ++dy) {
        for (int64_t ch = 0; ch < 3; ++ch) ref.at({ch, yi + dy, x}) = 0.15;
      }
    }
  }
  for (int64_t i = 0; i < ref.numel(); ++i) ref[i] = std::clamp(ref[i], 0.0, 1.0);

  // Temporal perturbation for the time-1 optical view.
  double gain = 1.0 + rng.uniform(-0.08, 0.08);
  double shift = rng.uniform(-0.04, 0.04);
  Tensor t1_clear(Shape{3, size, size});
  for (int64_t i = 0; i < ref.numel(); ++i) t1_clear[i] = std::clamp(ref[i] * gain + shift, 0.0, 1.0);
  for (const auto& f : fields) {
    double drift = rng.uniform(-0.12, 0.12);
    for (int64_t y = 0; y < size; ++y) {
      for (int64_t x = 0; x < size; ++x) {
        if (inside_field(f, static_cast<double>(x), static_cast<double>(y))) {
          for (int64_t ch = 0; ch < 3; ++ch) {
            t1_clear.at({ch, y, x}) = std::clamp(t1_clear.at({ch, y, x}) + drift, 0.0, 1.0);
          }
        }
      }
    }
  }

  // Cloud layer: threshold a smooth field at the order statistic hitting the
  // requested fraction.
  Tensor cloud_noise = fractal_noise(size, rng);
  Tensor mask_t1(Shape{size, size});
  double achieved = 0.0;
  if (cloud_fraction_target > 0.0) {
    std::vector<double> sorted(cloud_noise.vec());
    std::sort(sorted.begin(), sorted.end());
    int64_t n = static_cast<int64_t>(sorted.size());
    int64_t k = std::clamp<int64_t>(static_cast<int64_t>(std::llround((1.0 - cloud_fraction_target) *
                                                                       static_cast<double>(n))),
                                    0, n - 1);
    double threshold = sorted[static_cast<size_t>(k)];
    int64_t cloudy = 0;
    for (int64_t i = 0; i < n; ++i) {
      bool c = cloud_noise[i] > threshold;
      mask_t1[i] = c ? 1.0 : 0.0;
      cloudy += c;
    }
    achieved = static_cast<double>(cloudy) / static_cast<double>(n);
    if (std::fabs(achieved - cloud_fraction_target) > 0.05) {
      throw DataError("toy scene: threshold search achieved cloud fraction " + std::to_string(achieved) +
                      ", target " + std::to_string(cloud_fraction_target));
    }
  }

  Tensor s2_t1(Shape{3, size, size});
  for (int64_t y = 0; y < size; ++y) {
    for (int64_t x = 0; x < size; ++x) {
      double m = mask_t1.at({y, x});
      for (int64_t ch = 0; ch < 3; ++ch) {
        double clear = t1_clear.at({ch, y, x});
        s2_t1.at({ch, y, x}) = clear + m * (0.95 - clear) * 0.9;
      }
    }
  }

  SceneInstance inst;
  inst.tile_id = "toy_" + std::to_string(seed);
  inst.s2_t2_ref = std::move(ref);
  inst.s2_t1 = std::move(s2_t1);
  inst.cloud_mask_t1 = std::move(mask_t1);
  inst.cloud_mask_t2 = Tensor(Shape{size, size});
  // SAR sees through clouds: both responses derive from the clear scenes.
  inst.s1_t1 = simulate_sar(t1_clear, terrain, rng);
  inst.s1_t2 = simulate_sar(inst.s2_t2_ref, terrain, rng);

  double lon = rng.uniform(kStudyArea.lon_min, kStudyArea.lon_max - 0.05);
  double lat = rng.uniform(kStudyArea.lat_min, kStudyArea.lat_max - 0.05);
  inst.geo = {lon, lat, lon + 0.05, lat + 0.05};
  int64_t day = rng.uniform_int(1, 24);
  auto date = [](int64_t d) {
    char buf[16];
    snprintf(buf, sizeof(buf), "2021-07-%02d", static_cast<int>(d));
    return std::string(buf);
  };
  inst.date_t1 = date(day);
  inst.date_t2 = date(day + 6);  // 6-day revisit cadence

  inst.validate();
  return inst;
}

std::string write_toy_corpus(const ToyCorpusSpec& spec) {
  if (spec.count < 1) throw ConfigError("toy corpus: count must be >= 1");
  if (spec.val_count + spec.test_count >= spec.count) {
    throw ConfigError("toy corpus: val+test counts leave no training tiles");
  }
  fs::create_directories(spec.root);

  TileManifest manifest;
  manifest.root = spec.root;
  Rng seeder(spec.master_seed);
  for (int64_t i = 0; i < spec.count; ++i) {
    uint64_t scene_seed = seeder.next_u64();
    SceneInstance inst = generate_toy_scene(scene_seed, spec.size, spec.cloud_fraction_target, spec.required_divisor);
    inst.tile_id = "toy_" + std::to_string(i);

    std::string rel_dir = "tiles/" + inst.tile_id;
    fs::create_directories(fs::path(spec.root) / rel_dir);
    auto write = [&](const std::string& key, const Tensor& t, const std::string& range, const std::string& date) {
      RasterMeta meta;
      meta.shape = t.shape();
      meta.range = range;
      meta.geo = inst.geo;
      meta.date = date;
      write_raster((fs::path(spec.root) / rel_dir / key).string(), t, meta);
    };
    write("s1_t1", inst.s1_t1, "db", inst.date_t1);
    write("s1_t2", inst.s1_t2, "db", inst.date_t2);
    write("s2_t1", inst.s2_t1, "unit", inst.date_t1);
    write("s2_t2_ref", inst.s2_t2_ref, "unit", inst.date_t2);
    write("cloud_mask_t1", inst.cloud_mask_t1, "mask", inst.date_t1);
    write("cloud_mask_t2", inst.cloud_mask_t2, "mask", inst.date_t2);

    ManifestEntry e;
    e.tile_id = inst.tile_id;
    for (const auto& key : kRasterKeys) e.paths[key] = rel_dir + "/" + key;
    if (i >= spec.count - spec.test_count) {
      e.split = "test";
    } else if (i >= spec.count - spec.test_count - spec.val_count) {
      e.split = "val";
    } else {
      e.split = "train";
    }
    e.cloud_t1 = cloud_fraction(inst.cloud_mask_t1);
    e.cloud_t2 = cloud_fraction(inst.cloud_mask_t2);
    e.date_t1 = inst.date_t1;
    e.date_t2 = inst.date_t2;
    manifest.entries.push_back(std::move(e));
  }
  std::string manifest_path = (fs::path(spec.root) / "manifest.jsonl").string();
  save_manifest(manifest_path, manifest);
  return corpus_hash(manifest_path);
}

std::string corpus_hash(const std::string& manifest_path) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const char* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 0x100000001b3ull;
    }
  };
  auto feed_file = [&](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("corpus_hash: cannot open " + path);
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
      feed(buf, static_cast<size_t>(in.gcount()));
      if (!in) break;
    }
  };
  feed_file(manifest_path);
  TileManifest m = load_manifest(manifest_path);
  for (const auto& e : m.entries) {
    for (const auto& key : kRasterKeys) {
      feed_file((fs::path(m.root) / (e.paths.at(key) + ".bin")).string());
    }
  }
  char out[32];
  snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

}  // namespace crsynth::data
