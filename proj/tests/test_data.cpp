#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "crsynth/data/iterator.hpp"
#include "crsynth/data/raster_io.hpp"
#include "crsynth/data/toy.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace crsynth;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("crsynth_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool scenes_equal(const data::SceneInstance& a, const data::SceneInstance& b) {
  return bitwise_equal(a.s1_t1, b.s1_t1) && bitwise_equal(a.s1_t2, b.s1_t2) && bitwise_equal(a.s2_t1, b.s2_t1) &&
         bitwise_equal(a.s2_t2_ref, b.s2_t2_ref) && bitwise_equal(a.cloud_mask_t1, b.cloud_mask_t1) &&
         bitwise_equal(a.cloud_mask_t2, b.cloud_mask_t2) && a.date_t1 == b.date_t1 && a.date_t2 == b.date_t2 &&
         a.geo.lon_min == b.geo.lon_min && a.geo.lat_min == b.geo.lat_min;
}

}  // namespace

TEST_CASE("normalization specs invert exactly") {
  data::NormalizationSpec optical{2.0, -1.0};
  CHECK(optical.apply(0.0) == -1.0);
  CHECK(optical.apply(1.0) == 1.0);

  data::NormalizationSpec sar{0.08, 1.0};
  CHECK(sar.apply(-25.0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sar.apply(0.0) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(301);
  Tensor t = rand_unit({3, 8, 8}, rng);
  Tensor round = data::denormalize(data::normalize(t, optical), optical);
  CHECK(max_abs_diff(round, t) < 1e-6);

  Tensor zeros({3, 4, 4});
  Tensor offs = data::normalize(zeros, optical);
  for (int64_t i = 0; i < offs.numel(); ++i) CHECK(offs[i] == -1.0);

  data::NormalizationSpec bad{0.0, 0.0};
  CHECK_THROWS_AS(data::normalize(t, bad), ConfigError);
}

TEST_CASE("cloud fraction on binary masks") {
  Tensor clear({8, 8});
  CHECK(data::cloud_fraction(clear) == 0.0);
  Tensor full({8, 8}, 1.0);
  CHECK(data::cloud_fraction(full) == 1.0);
  Tensor quarter({8, 8});
  for (int64_t i = 0; i < 16; ++i) quarter[i] = 1.0;
  CHECK(data::cloud_fraction(quarter) == doctest::Approx(0.25));
  Tensor invalid({2, 2}, 0.5);
  CHECK_THROWS_AS(data::cloud_fraction(invalid), DataError);
}

TEST_CASE("composite: median over cloud-free observations") {
  Tensor t1({1, 2, 2}, {0.2, 0.5, 0.1, 0.9});
  Tensor t2({1, 2, 2}, {0.4, 0.6, 0.2, 0.8});
  Tensor t3({1, 2, 2}, {0.9, 0.4, 0.3, 0.7});
  Tensor clear({2, 2});

  SUBCASE("single cloud-free tile is returned unchanged") {
    auto res = data::make_composite({t1}, {clear});
    CHECK(bitwise_equal(res.composite, t1));
    for (int64_t i = 0; i < 4; ++i) CHECK(res.validity[i] == 1.0);
  }

  SUBCASE("median of three and permutation invariance") {
    auto res = data::make_composite({t1, t2, t3}, {clear, clear, clear});
    CHECK(res.composite[0] == doctest::Approx(0.4));  // median(0.2, 0.4, 0.9)
    auto res2 = data::make_composite({t3, t1, t2}, {clear, clear, clear});
    CHECK(bitwise_equal(res.composite, res2.composite));
  }

  SUBCASE("pixel cloud-free in exactly one tile takes that value") {
    Tensor m1({2, 2}, {1, 0, 0, 0});
    Tensor m2({2, 2}, {1, 0, 0, 0});
    Tensor m3({2, 2}, {0, 0, 0, 0});
    auto res = data::make_composite({t1, t2, t3}, {m1, m2, m3});
    CHECK(res.composite[0] == doctest::Approx(0.9));  // only t3 clear at (0,0)
    CHECK(res.validity[0] == 1.0);
  }

  SUBCASE("pixel with zero cloud-free observations is flagged invalid") {
    Tensor all_cloud({2, 2}, {1, 0, 0, 0});
    auto res = data::make_composite({t1}, {all_cloud});
    CHECK(res.validity[0] == 0.0);
    CHECK(res.validity[1] == 1.0);
  }

  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(data::make_composite({}, {}), DataError);
  }
}

TEST_CASE("toy scenes are deterministic and hit the cloud target") {
  auto a = data::generate_toy_scene(42, 64, 0.3);
  auto b = data::generate_toy_scene(42, 64, 0.3);
  CHECK(scenes_equal(a, b));

  double frac = data::cloud_fraction(a.cloud_mask_t1);
  CHECK(frac >= 0.25);
  CHECK(frac <= 0.35);

  auto clear = data::generate_toy_scene(43, 64, 0.0);
  CHECK(data::cloud_fraction(clear.cloud_mask_t1) == 0.0);

  CHECK_THROWS_AS(data::generate_toy_scene(1, 66, 0.3), ConfigError);
  CHECK_THROWS_AS(data::generate_toy_scene(1, 64, 0.99), ConfigError);

  // SAR stays in the clipped dB range
  for (int64_t i = 0; i < a.s1_t1.numel(); ++i) {
    CHECK(a.s1_t1[i] >= -25.0);
    CHECK(a.s1_t1[i] <= 0.0);
  }
}

TEST_CASE("toy corpus: stable hash, manifest round trip, loadable instances") {
  data::ToyCorpusSpec spec;
  spec.count = 5;
  spec.size = 64;
  spec.master_seed = 7;
  spec.root = fresh_dir("corpus_a");
  std::string hash_a = data::write_toy_corpus(spec);

  spec.root = fresh_dir("corpus_b");
  std::string hash_b = data::write_toy_corpus(spec);
  CHECK(hash_a == hash_b);

  auto manifest = data::load_manifest(spec.root + "/manifest.jsonl");
  CHECK(manifest.entries.size() == 5);
  CHECK(manifest.split_entries("train").size() == 3);
  CHECK(manifest.split_entries("val").size() == 1);
  CHECK(manifest.split_entries("test").size() == 1);

  // save -> load -> save round-trips byte-identically
  std::string copy_path = spec.root + "/manifest_copy.jsonl";
  data::save_manifest(copy_path, manifest);
  CHECK(slurp(copy_path) == slurp(spec.root + "/manifest.jsonl"));

  // instances load and validate
  auto inst = data::load_instance(manifest, manifest.entries[0]);
  CHECK(inst.tile_id == "toy_0");
  CHECK(inst.s2_t2_ref.shape() == Shape{3, 64, 64});
}

TEST_CASE("manifest validation failures") {
  std::string dir = fresh_dir("manifest_bad");

  SUBCASE("empty manifest is valid with zero instances") {
    std::ofstream(dir + "/m.jsonl").close();
    auto m = data::load_manifest(dir + "/m.jsonl");
    CHECK(m.entries.empty());
  }

  SUBCASE("duplicate tile ids are rejected by name") {
    data::ToyCorpusSpec spec;
    spec.count = 3;
    spec.root = dir;
    data::write_toy_corpus(spec);
    std::string text = slurp(dir + "/manifest.jsonl");
    std::string first_line = text.substr(0, text.find('\n') + 1);
    std::ofstream(dir + "/manifest.jsonl", std::ios::app) << first_line;
    CHECK_THROWS_WITH_AS(data::load_manifest(dir + "/manifest.jsonl"), doctest::Contains("toy_0"), DataError);
  }

  SUBCASE("dangling raster path is rejected") {
    data::ToyCorpusSpec spec;
    spec.count = 3;
    spec.root = dir;
    data::write_toy_corpus(spec);
    fs::remove(fs::path(dir) / "tiles/toy_1/s1_t2.bin");
    CHECK_THROWS_WITH_AS(data::load_manifest(dir + "/manifest.jsonl"), doctest::Contains("toy_1"), DataError);
  }
}

TEST_CASE("loading rejects a reference that violates the 5% cloud rule") {
  data::ToyCorpusSpec spec;
  spec.count = 3;
  spec.root = fresh_dir("cloudy_ref");
  data::write_toy_corpus(spec);
  auto manifest = data::load_manifest(spec.root + "/manifest.jsonl");

  // overwrite the t2 mask with an all-cloud raster
  std::string stem = spec.root + "/tiles/toy_0/cloud_mask_t2";
  auto raster = data::read_raster(stem);
  for (int64_t i = 0; i < raster.data.numel(); ++i) raster.data[i] = 1.0;
  data::write_raster(stem, raster.data, raster.meta);
  CHECK_THROWS_WITH_AS(data::load_instance(manifest, manifest.entries[0]), doctest::Contains("5%"), DataError);
}

TEST_CASE("dataset iterator: batching, determinism, seed sensitivity") {
  data::ToyCorpusSpec spec;
  spec.count = 10;
  spec.size = 64;
  spec.val_count = 0;
  spec.test_count = 0;
  spec.root = fresh_dir("corpus_iter");
  data::write_toy_corpus(spec);
  auto manifest = data::load_manifest(spec.root + "/manifest.jsonl");

  data::DatasetIterator it(manifest, "train", 8, 123);
  CHECK(it.batches_per_epoch() == 2);
  auto b1 = it.next();
  auto b2 = it.next();
  auto b3 = it.next();
  REQUIRE(b1.has_value());
  REQUIRE(b2.has_value());
  CHECK_FALSE(b3.has_value());
  CHECK(b1->size() == 8);
  CHECK(b2->size() == 2);
  CHECK(b1->s1_t1.shape() == Shape{8, 2, 64, 64});
  // signed range after normalization
  for (int64_t i = 0; i < b1->s2_t1.numel(); ++i) {
    CHECK(b1->s2_t1[i] >= -1.0);
    CHECK(b1->s2_t1[i] <= 1.0);
  }

  // identical seed -> identical order
  data::DatasetIterator it2(manifest, "train", 8, 123);
  auto c1 = it2.next();
  CHECK(c1->tile_ids == b1->tile_ids);
  CHECK(bitwise_equal(c1->s1_t1, b1->s1_t1));

  // different seeds give a different order at least once over 20 trials
  int distinct = 0;
  for (uint64_t s = 0; s < 20; ++s) {
    data::DatasetIterator alt(manifest, "train", 8, 200 + s);
    auto d1 = alt.next();
    if (d1->tile_ids != b1->tile_ids) ++distinct;
  }
  CHECK(distinct > 0);

  CHECK_THROWS_AS(data::DatasetIterator(manifest, "val", 4, 1), DataError);
}
