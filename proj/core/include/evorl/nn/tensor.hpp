#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evorl::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Every tensor in the library is rank 2;
/// a scalar is 1x1 and a vector is 1xn (row) or nx1 (column).
class Tensor {
 public:
  using Shape = std::array<std::size_t, 2>;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::span<const double> values);
  static Tensor row(std::initializer_list<double> values);
  static Tensor column(std::span<const double> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  Shape shape() const noexcept { return {rows_, cols_}; }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<const double> row_view(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row_view(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// Scalar value of a 1x1 tensor.
  double item() const;

  void fill(double v);
  void set_zero() { fill(0.0); }
  bool all_finite() const noexcept;

  double sum() const noexcept;
  double squared_norm() const noexcept;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  std::string shape_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

bool operator==(const Tensor& a, const Tensor& b);

/// out = a * b (matrix product).
Tensor matmul(const Tensor& a, const Tensor& b);
/// out = a * b^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// out = a^T * b.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// x * w + b with b broadcast across rows.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows);
Tensor concat_cols(std::span<const Tensor* const> parts);

void require_shape(const Tensor& t, std::size_t rows, std::size_t cols, const char* what);

}  // namespace evorl::nn
