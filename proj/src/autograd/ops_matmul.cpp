#include <Eigen/Dense>

#include "crsynth/autograd/ops.hpp"

namespace crsynth::ag::ops {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;
}  // namespace

Variable matmul(const Variable& a, const Variable& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2) throw ShapeError("matmul: expects rank-2 operands");
  if (av.shape()[1] != bv.shape()[0]) {
    throw ShapeError("matmul: inner dims differ, " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  int64_t m = av.shape()[0], k = av.shape()[1], n = bv.shape()[1];
  Tensor out(Shape{m, n});
  MMap C(out.data(), m, n);
  C.noalias() = CMap(av.data(), m, k) * CMap(bv.data(), k, n);
  return make_node("matmul", std::move(out), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     Variable ga = matmul(gy, permute(in[1], {1, 0}));
                     Variable gb = matmul(permute(in[0], {1, 0}), gy);
                     return std::vector<Variable>{ga, gb};
                   });
}

Variable bmm(const Variable& a, const Variable& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3) throw ShapeError("bmm: expects rank-3 operands");
  if (av.shape()[0] != bv.shape()[0] || av.shape()[2] != bv.shape()[1]) {
    throw ShapeError("bmm: incompatible shapes " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  }
  int64_t B = av.shape()[0], m = av.shape()[1], k = av.shape()[2], n = bv.shape()[2];
  Tensor out(Shape{B, m, n});
  for (int64_t i = 0; i < B; ++i) {
    MMap C(out.data() + i * m * n, m, n);
    C.noalias() = CMap(av.data() + i * m * k, m, k) * CMap(bv.data() + i * k * n, k, n);
  }
  return make_node("bmm", std::move(out), {a, b},
                   [](const Variable& gy, const std::vector<Variable>& in, const Variable&) {
                     Variable ga = bmm(gy, permute(in[1], {0, 2, 1}));
                     Variable gb = bmm(permute(in[0], {0, 2, 1}), gy);
                     return std::vector<Variable>{ga, gb};
                   });
}

Variable matvec(const Variable& m, const Variable& v) {
  const Tensor& mv = m.value();
  if (mv.rank() != 2 || v.value().rank() != 1) throw ShapeError("matvec: expects (r,c) and (c)");
  Variable col = reshape(v, Shape{v.numel(), 1});
  return reshape(matmul(m, col), Shape{mv.shape()[0]});
}

}  // namespace crsynth::ag::ops
