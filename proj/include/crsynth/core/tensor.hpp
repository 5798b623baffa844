#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace crsynth {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

/// Raised when tensor shapes violate an operation's contract.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a configuration value is invalid or inconsistent.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed manifests, rasters, or corpus layout problems.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major (contiguous) double tensor. Value semantics; all graph
// bookkeeping lives in the autograd layer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}
  Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor ones(Shape s) { return Tensor(std::move(s), 1.0); }
  static Tensor full(Shape s, double v) { return Tensor(std::move(s), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const;  // negative indices allowed
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool defined() const { return !shape_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Flat offset of a multi-index, row-major.
  int64_t offset(const std::vector<int64_t>& idx) const;
  double at(const std::vector<int64_t>& idx) const { return data_[static_cast<size_t>(offset(idx))]; }
  double& at(const std::vector<int64_t>& idx) { return data_[static_cast<size_t>(offset(idx))]; }

  Tensor reshaped(Shape s) const;

  bool all_finite() const;
  double item() const;  // single-element tensors only

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Row-major strides for a shape.
std::vector<int64_t> row_major_strides(const Shape& s);

}  // namespace crsynth
