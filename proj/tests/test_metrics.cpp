#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "crsynth/metrics/report.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace crsynth;
using namespace testutil;

TEST_CASE("psnr landmarks and cap") {
  Rng rng(201);
  Tensor x = rand_unit({3, 16, 16}, rng);
  CHECK(metrics::psnr(x, x) == metrics::kPsnrCap);

  Tensor ref({1, 4, 4});
  Tensor gen({1, 4, 4}, 0.1);  // MSE exactly 0.01
  CHECK(metrics::psnr(gen, ref) == doctest::Approx(20.0).epsilon(1e-12));

  Tensor one({1, 4, 4}, 1.0);  // MSE exactly 1
  CHECK(metrics::psnr(one, ref) == doctest::Approx(0.0));

  Tensor bad({1, 4, 5});
  CHECK_THROWS_AS(metrics::psnr(gen, bad), ShapeError);
}

TEST_CASE("psnr strictly decreases with noise amplitude") {
  Rng rng(202);
  Tensor ref = rand_unit({3, 32, 32}, rng);
  double prev = metrics::kPsnrCap + 1;
  for (double amp : {0.01, 0.05, 0.1}) {
    Tensor noisy = ref;
    Rng nrng(203);
    for (int64_t i = 0; i < noisy.numel(); ++i) noisy[i] += amp * (2.0 * nrng.uniform() - 1.0);
    double v = metrics::psnr(noisy, ref);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim identity, symmetry, and constant-shift closed form") {
  Rng rng(204);
  Tensor a = rand_unit({1, 16, 16}, rng);
  Tensor b = rand_unit({1, 16, 16}, rng);
  CHECK(metrics::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(metrics::ssim(a, b) == doctest::Approx(metrics::ssim(b, a)).epsilon(1e-6));

  double c = 0.25, shift = 0.5;
  Tensor ca({1, 16, 16}, c);
  Tensor cb({1, 16, 16}, c + shift);
  const double C1 = 1e-4;
  double lum = (2.0 * c * (c + shift) + C1) / (c * c + (c + shift) * (c + shift) + C1);
  CHECK(metrics::ssim(ca, cb) == doctest::Approx(lum).epsilon(1e-6));

  Tensor tiny({1, 8, 8}, c);
  CHECK_THROWS_AS(metrics::ssim(tiny, tiny), ShapeError);
  CHECK_THROWS_AS(metrics::ms_ssim(tiny, tiny), ShapeError);
}

TEST_CASE("ms-ssim identity and symmetry over random pairs") {
  Rng rng(205);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = rand_unit({1, 32, 32}, rng);
    Tensor b = rand_unit({1, 32, 32}, rng);
    if (trial == 0) CHECK(metrics::ms_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(metrics::ms_ssim(a, b) == doctest::Approx(metrics::ms_ssim(b, a)).epsilon(1e-6));
  }
}

TEST_CASE("mae and rmse landmarks") {
  Tensor ref({1, 2, 4});
  Tensor same = ref;
  CHECK(metrics::mae(same, ref) == 0.0);
  CHECK(metrics::rmse(same, ref) == 0.0);

  Tensor off({1, 2, 4}, 0.1);
  CHECK(metrics::mae(off, ref) == doctest::Approx(0.1));
  CHECK(metrics::rmse(off, ref) == doctest::Approx(0.1));

  Tensor half({1, 2, 4});
  for (int64_t i = 0; i < 4; ++i) half[i] = 0.2;  // half the pixels off by 0.2
  CHECK(metrics::mae(half, ref) == doctest::Approx(0.1));
  CHECK(metrics::rmse(half, ref) == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
}

TEST_CASE("fid: identity, symmetry, and non-negativity") {
  Rng rng(206);
  Tensor a = randn({20, 6}, rng);
  Tensor b = randn({25, 6}, rng);
  CHECK(metrics::fid(a, a) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(metrics::fid(a, b) == doctest::Approx(metrics::fid(b, a)).epsilon(1e-6));
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x = randn({10, 4}, rng);
    Tensor y = randn({12, 4}, rng);
    CHECK(metrics::fid(x, y) >= 0.0);
  }
  Tensor wrong({10, 5});
  CHECK_THROWS_AS(metrics::fid(a, wrong), ShapeError);
}

TEST_CASE("fid mean-shift Monte Carlo oracle") {
  Rng rng(207);
  const int64_t n = 10000, d = 8;
  Tensor a(Shape{n, d});
  Tensor b(Shape{n, d});
  const double shift = 0.5;  // ||mean difference||^2 = 8 * 0.25 = 2
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      a.at({i, j}) = rng.normal();
      b.at({i, j}) = rng.normal() + shift;
    }
  }
  double expected = shift * shift * static_cast<double>(d);
  double got = metrics::fid(a, b);
  CHECK(std::fabs(got - expected) / expected < 0.05);
}

TEST_CASE("feature embedder is deterministic") {
  Rng rng(208);
  Tensor img = rand_unit({3, 32, 32}, rng);
  metrics::FeatureEmbedder e1(5, 3, 16);
  metrics::FeatureEmbedder e2(5, 3, 16);
  auto f1 = e1.embed(img);
  auto f2 = e2.embed(img);
  REQUIRE(f1.size() == 16);
  for (size_t i = 0; i < f1.size(); ++i) CHECK(f1[i] == f2[i]);
}

TEST_CASE("evaluate: identical corpus hits every cap") {
  Rng rng(209);
  metrics::FeatureEmbedder emb(5, 3, 8);
  std::vector<metrics::EvalPair> pairs;
  for (int i = 0; i < 4; ++i) {
    Tensor img = rand_unit({3, 16, 16}, rng);
    pairs.push_back({"tile_" + std::to_string(i), img, img});
  }
  auto report = metrics::evaluate_pairs(pairs, emb, "self");
  CHECK(report.mean_psnr == metrics::kPsnrCap);
  CHECK(report.mean_ssim == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(report.mean_mae == 0.0);
  CHECK(report.mean_rmse == 0.0);
  CHECK(report.fid == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(report.per_tile.size() == 4);
  CHECK(report.per_tile[0].tile_id == "tile_0");

  // deterministic rendering
  CHECK(metrics::report_csv(report) == metrics::report_csv(report));
}

TEST_CASE("evaluate: single-tile corpus exercises the regularized path") {
  Rng rng(210);
  metrics::FeatureEmbedder emb(5, 3, 8);
  Tensor img = rand_unit({3, 16, 16}, rng);
  Tensor pred = img;
  pred[0] += 0.01;
  auto report = metrics::evaluate_pairs({{"only", pred, img}}, emb, "single");
  CHECK(report.per_tile.size() == 1);
  CHECK(std::isfinite(report.fid));
  CHECK(report.fid >= 0.0);
}

TEST_CASE("text table renders the reported reference footnote") {
  metrics::MetricReport r;
  r.model_name = "toy-run";
  r.per_tile.push_back({"t0", 20.0, 0.5, 0.6, 0.1, 0.12});
  r.finalize();
  std::string table = metrics::report_table({r});
  CHECK(table.find("toy-run") != std::string::npos);
  CHECK(table.find("26.978") != std::string::npos);
  CHECK(table.find("72.789") != std::string::npos);
  CHECK(table.find("reported") != std::string::npos);
}
