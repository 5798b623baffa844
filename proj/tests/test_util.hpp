#pragma once

#include <cmath>
#include <functional>

#include "crsynth/autograd/ops.hpp"
#include "crsynth/autograd/variable.hpp"
#include "crsynth/core/rng.hpp"
#include "crsynth/core/tensor.hpp"

namespace testutil {

using crsynth::Rng;
using crsynth::Shape;
using crsynth::Tensor;
namespace ag = crsynth::ag;

inline Tensor randn(Shape s, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(s));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

inline Tensor rand_unit(Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!crsynth::same_shape(a.shape(), b.shape())) return false;
  for (int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

struct GradCheck {
  int checked = 0;
  double max_rel = 0.0;
  bool ok = true;
};

// Central finite differences on randomly probed coordinates of `leaves`
// against analytic gradients of the scalar produced by `make_loss`.
// `make_loss` must rebuild its graph from the leaves' current values.
inline GradCheck gradcheck_probes(const std::function<ag::Variable()>& make_loss, std::vector<ag::Variable> leaves,
                                  int probes, Rng& rng, double tol = 1e-3) {
  GradCheck res;
  ag::Variable loss = make_loss();
  auto grads = ag::grad(loss, leaves);
  for (int p = 0; p < probes; ++p) {
    size_t li = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(leaves.size()) - 1));
    int64_t ei = rng.uniform_int(0, leaves[li].numel() - 1);
    double analytic = grads[li].defined() ? grads[li].value()[ei] : 0.0;

    double* slot = &leaves[li].mutable_value()[ei];
    double orig = *slot;
    double h = 1e-5 * std::max(1.0, std::fabs(orig));
    double fp, fm;
    {
      crsynth::ag::NoGradGuard ng;
      *slot = orig + h;
      fp = make_loss().value().item();
      *slot = orig - h;
      fm = make_loss().value().item();
      *slot = orig;
    }
    double numeric = (fp - fm) / (2.0 * h);
    double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    double rel = std::fabs(analytic - numeric) / denom;
    if (std::fabs(analytic) < 1e-12 && std::fabs(numeric) < 1e-10) rel = 0.0;
    res.max_rel = std::max(res.max_rel, rel);
    if (rel > tol) res.ok = false;
    ++res.checked;
  }
  return res;
}

}  // namespace testutil
