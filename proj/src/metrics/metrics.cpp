#include "crsynth/metrics/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "crsynth/loss/ssim.hpp"

namespace crsynth::metrics {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* who) {
  if (!same_shape(a.shape(), b.shape())) {
    throw ShapeError(std::string(who) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

Tensor as_nchw(const Tensor& t) {
  if (t.rank() == 4) return t;
  if (t.rank() == 3) return t.reshaped({1, t.shape()[0], t.shape()[1], t.shape()[2]});
  throw ShapeError("metrics: expected (C,H,W) or (N,C,H,W), got " + shape_str(t.shape()));
}

double mse(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.numel());
}

}  // namespace

double psnr(const Tensor& gen, const Tensor& ref) {
  check_same(gen, ref, "psnr");
  double m = mse(gen, ref);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double ssim(const Tensor& gen, const Tensor& ref) {
  check_same(gen, ref, "ssim");
  ag::NoGradGuard ng;
  loss::SsimOptions opt;
  return loss::ssim_mean(ag::Variable::constant(as_nchw(gen)), ag::Variable::constant(as_nchw(ref)), opt)
      .value()
      .item();
}

double ms_ssim(const Tensor& gen, const Tensor& ref) {
  check_same(gen, ref, "ms_ssim");
  Tensor g = as_nchw(gen);
  loss::SsimOptions opt;
  if (std::min(g.shape()[2], g.shape()[3]) < opt.window) {
    throw ShapeError("ms_ssim: window " + std::to_string(opt.window) + " larger than image extent");
  }
  ag::NoGradGuard ng;
  return loss::ms_ssim_value(ag::Variable::constant(g), ag::Variable::constant(as_nchw(ref)), opt).value.value().item();
}

double mae(const Tensor& gen, const Tensor& ref) {
  check_same(gen, ref, "mae");
  double acc = 0.0;
  for (int64_t i = 0; i < gen.numel(); ++i) acc += std::fabs(gen[i] - ref[i]);
  return acc / static_cast<double>(gen.numel());
}

double rmse(const Tensor& gen, const Tensor& ref) {
  check_same(gen, ref, "rmse");
  return std::sqrt(mse(gen, ref));
}

double fid(const Tensor& features_a, const Tensor& features_b) {
  if (features_a.rank() != 2 || features_b.rank() != 2) throw ShapeError("fid: feature sets must be (n, dim)");
  int64_t d = features_a.shape()[1];
  if (features_b.shape()[1] != d) {
    throw ShapeError("fid: feature dimension mismatch, " + std::to_string(d) + " vs " +
                     std::to_string(features_b.shape()[1]));
  }
  using Mat = Eigen::MatrixXd;
  auto stats = [d](const Tensor& f) {
    int64_t n = f.shape()[0];
    if (n < 2) throw ShapeError("fid: need at least 2 samples per set");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(f.data(), n, d);
    Eigen::VectorXd mu = X.colwise().mean();
    Mat centered = X.rowwise() - mu.transpose();
    Mat cov = centered.transpose() * centered / static_cast<double>(n - 1);
    if (n <= d) cov += 1e-6 * Mat::Identity(d, d);  // small-sample regularization
    return std::pair<Eigen::VectorXd, Mat>{mu, cov};
  };
  auto [mu_a, cov_a] = stats(features_a);
  auto [mu_b, cov_b] = stats(features_b);

  Eigen::SelfAdjointEigenSolver<Mat> es_a(cov_a);
  Eigen::VectorXd ev_a = es_a.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Mat sqrt_a = es_a.eigenvectors() * ev_a.asDiagonal() * es_a.eigenvectors().transpose();

  Mat inner = sqrt_a * cov_b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());  // symmetrized product
  Eigen::SelfAdjointEigenSolver<Mat> es_m(inner);
  double tr_sqrt = es_m.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  double dist = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, dist);
}

FeatureEmbedder::FeatureEmbedder(uint64_t seed, int64_t in_channels, int64_t out_dim)
    : in_channels_(in_channels), out_dim_(out_dim) {
  Rng rng(seed);
  int64_t in_ch = in_channels;
  for (int64_t w : {8, 16, 32}) {
    Tensor weight(Shape{w, in_ch, 3, 3});
    double std = std::sqrt(2.0 / static_cast<double>(in_ch * 9));
    for (int64_t i = 0; i < weight.numel(); ++i) weight[i] = std * rng.normal();
    conv_weights_.push_back(std::move(weight));
    in_ch = w;
  }
  proj_ = Tensor(Shape{out_dim, in_ch});
  double std = std::sqrt(1.0 / static_cast<double>(in_ch));
  for (int64_t i = 0; i < proj_.numel(); ++i) proj_[i] = std * rng.normal();
}

std::vector<double> FeatureEmbedder::embed(const Tensor& image_chw) const {
  if (image_chw.rank() != 3 || image_chw.shape()[0] != in_channels_) {
    throw ShapeError("FeatureEmbedder: expected (" + std::to_string(in_channels_) + ",H,W), got " +
                     shape_str(image_chw.shape()));
  }
  ag::NoGradGuard ng;
  namespace O = ag::ops;
  ag::Variable h = ag::Variable::constant(
      image_chw.reshaped({1, image_chw.shape()[0], image_chw.shape()[1], image_chw.shape()[2]}));
  for (const auto& w : conv_weights_) {
    h = O::mish(O::conv2d(h, ag::Variable::constant(w), 2, 1));
  }
  ag::Variable pooled = O::mean_axes(h, {2, 3}, false);  // (1, C)
  ag::Variable feat = O::matmul(pooled, O::permute(ag::Variable::constant(proj_), {1, 0}));
  std::vector<double> out(static_cast<size_t>(out_dim_));
  for (int64_t i = 0; i < out_dim_; ++i) out[static_cast<size_t>(i)] = feat.value()[i];
  return out;
}

Tensor FeatureEmbedder::embed_all(const std::vector<Tensor>& images) const {
  Tensor out(Shape{static_cast<int64_t>(images.size()), out_dim_});
  for (size_t i = 0; i < images.size(); ++i) {
    auto f = embed(images[i]);
    for (int64_t j = 0; j < out_dim_; ++j) out.at({static_cast<int64_t>(i), j}) = f[static_cast<size_t>(j)];
  }
  return out;
}

}  // namespace crsynth::metrics
