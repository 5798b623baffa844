#include "crsynth/core/tensor.hpp"

#include <cmath>
#include <sstream>

namespace crsynth {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return s.empty() ? 0 : n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ")";
  return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (static_cast<int64_t>(data_.size()) != shape_numel(shape_)) {
    throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
  }
}

int64_t Tensor::dim(int i) const {
  int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) throw ShapeError("dim index out of range for shape " + shape_str(shape_));
  return shape_[static_cast<size_t>(i)];
}

int64_t Tensor::offset(const std::vector<int64_t>& idx) const {
  if (idx.size() != shape_.size()) throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
  int64_t off = 0;
  int64_t stride = 1;
  for (int i = rank() - 1; i >= 0; --i) {
    off += idx[static_cast<size_t>(i)] * stride;
    stride *= shape_[static_cast<size_t>(i)];
  }
  return off;
}

Tensor Tensor::reshaped(Shape s) const {
  if (shape_numel(s) != numel()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
  }
  Tensor out;
  out.shape_ = std::move(s);
  out.data_ = data_;
  return out;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() requires a single-element tensor, got " + shape_str(shape_));
  return data_[0];
}

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) {
    st[static_cast<size_t>(i)] = st[static_cast<size_t>(i + 1)] * s[static_cast<size_t>(i + 1)];
  }
  return st;
}

}  // namespace crsynth
