#include "crsynth/nn/spectral_norm.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace crsynth::nn {

namespace O = ag::ops;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void ensure_state(const Tensor& w2d, SpectralState& state) {
  int64_t rows = w2d.shape()[0];
  int64_t cols = w2d.shape()[1];
  if (state.initialized && state.u.numel() == rows && state.v.numel() == cols) return;
  // Deterministic start vector derived from the matrix geometry.
  Rng rng(0x5EC7A11Full ^ (static_cast<uint64_t>(rows) << 20) ^ static_cast<uint64_t>(cols));
  state.u = Tensor({rows});
  state.v = Tensor({cols});
  for (int64_t i = 0; i < rows; ++i) state.u[i] = rng.normal();
  Eigen::Map<Eigen::VectorXd> u(state.u.data(), rows);
  double n = u.norm();
  if (n > 0) u /= n;
  state.initialized = true;
}

}  // namespace

double spectral_power_iteration(const Tensor& w2d, int iters, SpectralState& state, double eps) {
  if (w2d.rank() != 2) throw ShapeError("spectral_power_iteration: weight must be rank 2");
  if (w2d.shape()[0] < 1 || w2d.shape()[1] < 1) throw ShapeError("spectral_power_iteration: empty matrix");
  if (iters < 1) throw ConfigError("spectral_power_iteration: iters must be >= 1");
  ensure_state(w2d, state);

  int64_t rows = w2d.shape()[0];
  int64_t cols = w2d.shape()[1];
  Eigen::Map<const RowMat> W(w2d.data(), rows, cols);
  Eigen::Map<Eigen::VectorXd> u(state.u.data(), rows);
  Eigen::Map<Eigen::VectorXd> v(state.v.data(), cols);
  for (int i = 0; i < iters; ++i) {
    Eigen::VectorXd vt = W.transpose() * u;
    double nv = vt.norm();
    if (nv > eps) vt /= nv;
    v = vt;
    Eigen::VectorXd ut = W * v;
    double nu = ut.norm();
    if (nu > eps) ut /= nu;
    u = ut;
  }
  return u.dot(W * v);
}

Tensor spectral_normalize(const Tensor& w2d, int iters, SpectralState& state, double eps) {
  double sigma = spectral_power_iteration(w2d, iters, state, eps);
  Tensor out = w2d;
  double denom = std::fmax(sigma, eps);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] /= denom;
  return out;
}

ag::Variable spectral_normalize_var(const ag::Variable& w, const SpectralState& state, double eps) {
  const Shape& s = w.value().shape();
  int64_t rows = s[0];
  int64_t cols = w.numel() / rows;
  ag::Variable w2d = O::reshape(w, {rows, cols});
  ag::Variable u = ag::Variable::constant(state.u);
  ag::Variable v = ag::Variable::constant(state.v);
  ag::Variable sigma = O::dot(u, O::matvec(w2d, v));
  return O::reshape(O::div(w2d, O::clamp_min(sigma, eps)), s);
}

SNConv2d::SNConv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int stride, int pad, Rng& rng, int power_iters)
    : in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      power_iters_(power_iters),
      weight_(register_parameter("weight", he_normal({out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel, rng))),
      bias_(register_parameter("bias", Tensor::zeros({out_ch}))),
      u_(register_buffer("sn_u", Tensor::zeros({out_ch}))),
      v_(register_buffer("sn_v", Tensor::zeros({in_ch * kernel * kernel}))) {}

ag::Variable SNConv2d::forward(const ag::Variable& x) {
  if (x.value().shape()[1] != in_ch_) {
    throw ConfigError("SNConv2d: input " + shape_str(x.value().shape()) + " does not provide " +
                      std::to_string(in_ch_) + " channels");
  }
  // State vectors live in checkpointable buffers; a zero u marks "never run".
  double unorm = 0.0;
  for (int64_t i = 0; i < u_.numel(); ++i) unorm += u_[i] * u_[i];
  bool have_state = unorm > 0.0;

  SpectralState state{u_, v_, have_state};
  if (is_training() || !have_state) {
    Tensor w2d = weight_.value().reshaped({out_ch_, in_ch_ * kernel_ * kernel_});
    spectral_power_iteration(w2d, power_iters_, state);
    u_ = state.u;
    v_ = state.v;
  }
  ag::Variable w_norm = spectral_normalize_var(weight_, state);
  ag::Variable y = O::conv2d(x, w_norm, stride_, pad_);
  return O::add(y, O::reshape(bias_, {1, out_ch_, 1, 1}));
}

}  // namespace crsynth::nn
