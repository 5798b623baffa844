#include "crsynth/data/scene.hpp"

#include <algorithm>

namespace crsynth::data {

Tensor normalize(const Tensor& tile, const NormalizationSpec& spec) {
  spec.validate();
  Tensor out(tile.shape());
  for (int64_t i = 0; i < tile.numel(); ++i) out[i] = spec.apply(tile[i]);
  return out;
}

Tensor denormalize(const Tensor& tile, const NormalizationSpec& spec) {
  spec.validate();
  Tensor out(tile.shape());
  for (int64_t i = 0; i < tile.numel(); ++i) out[i] = spec.invert(tile[i]);
  return out;
}

double cloud_fraction(const Tensor& mask) {
  if (mask.numel() == 0) throw DataError("cloud_fraction: empty mask");
  double sum = 0.0;
  for (int64_t i = 0; i < mask.numel(); ++i) {
    double v = mask[i];
    if (v != 0.0 && v != 1.0) {
      throw DataError("cloud_fraction: mask contains non-binary value " + std::to_string(v));
    }
    sum += v;
  }
  return sum / static_cast<double>(mask.numel());
}

void SceneInstance::validate() const {
  if (tile_id.empty()) throw DataError("SceneInstance: empty tile_id");
  auto check = [&](const Tensor& t, int64_t channels, const char* name) {
    if (t.rank() != 3 || t.shape()[0] != channels) {
      throw DataError("SceneInstance " + tile_id + ": raster " + name + " must be (" + std::to_string(channels) +
                      ",H,W), got " + shape_str(t.shape()));
    }
    if (!t.all_finite()) throw DataError("SceneInstance " + tile_id + ": raster " + name + " contains NaN/Inf");
  };
  check(s1_t1, 2, "s1_t1");
  check(s1_t2, 2, "s1_t2");
  check(s2_t1, 3, "s2_t1");
  check(s2_t2_ref, 3, "s2_t2_ref");
  int64_t h = s1_t1.shape()[1], w = s1_t1.shape()[2];
  for (auto [t, name] : {std::pair{&s1_t2, "s1_t2"}, std::pair{&s2_t1, "s2_t1"}, std::pair{&s2_t2_ref, "s2_t2_ref"}}) {
    if (t->shape()[1] != h || t->shape()[2] != w) {
      throw DataError("SceneInstance " + tile_id + ": raster " + name + " extent mismatch");
    }
  }
  for (auto [m, name] : {std::pair{&cloud_mask_t1, "cloud_mask_t1"}, std::pair{&cloud_mask_t2, "cloud_mask_t2"}}) {
    if (m->rank() != 2 || m->shape()[0] != h || m->shape()[1] != w) {
      throw DataError("SceneInstance " + tile_id + ": mask " + name + " extent mismatch");
    }
  }
  if (cloud_fraction(cloud_mask_t2) >= 0.05) {
    throw DataError("SceneInstance " + tile_id + ": reference cloud fraction " +
                    std::to_string(cloud_fraction(cloud_mask_t2)) + " violates the <5% rule");
  }
  if (!(date_t1 < date_t2)) {
    throw DataError("SceneInstance " + tile_id + ": timestamps not ordered (" + date_t1 + " !< " + date_t2 + ")");
  }
  if (!geo.inside(kStudyArea)) {
    throw DataError("SceneInstance " + tile_id + ": geo box outside the dataset bounds");
  }
}

CompositeResult make_composite(const std::vector<Tensor>& tiles, const std::vector<Tensor>& cloud_masks) {
  if (tiles.empty()) throw DataError("make_composite: empty tile list");
  if (tiles.size() != cloud_masks.size()) throw DataError("make_composite: tile/mask count mismatch");
  const Shape& s = tiles[0].shape();
  if (s.size() != 3) throw DataError("make_composite: tiles must be (C,H,W)");
  for (const auto& t : tiles) {
    if (!same_shape(t.shape(), s)) throw DataError("make_composite: tiles are not co-registered");
  }
  int64_t c = s[0], h = s[1], w = s[2];
  for (const auto& m : cloud_masks) {
    if (m.rank() != 2 || m.shape()[0] != h || m.shape()[1] != w) {
      throw DataError("make_composite: mask extent mismatch");
    }
  }

  CompositeResult out;
  out.composite = Tensor(Shape{c, h, w});
  out.validity = Tensor(Shape{h, w});
  std::vector<double> obs;
  obs.reserve(tiles.size());
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      bool any = false;
      for (int64_t ch = 0; ch < c; ++ch) {
        obs.clear();
        for (size_t k = 0; k < tiles.size(); ++k) {
          if (cloud_masks[k].at({y, x}) == 0.0) obs.push_back(tiles[k].at({ch, y, x}));
        }
        if (obs.empty()) continue;
        any = true;
        std::sort(obs.begin(), obs.end());
        size_t n = obs.size();
        double med = n % 2 == 1 ? obs[n / 2] : 0.5 * (obs[n / 2 - 1] + obs[n / 2]);
        out.composite.at({ch, y, x}) = med;
      }
      out.validity.at({y, x}) = any ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace crsynth::data
