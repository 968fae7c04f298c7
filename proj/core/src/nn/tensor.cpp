#include "evorl/nn/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <sstream>

namespace evorl::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t) { return MapC(t.data(), t.rows(), t.cols()); }
Map view(Tensor& t) { return Map(t.data(), t.rows(), t.cols()); }

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::row(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::column(std::span<const double> values) {
  return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data));
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string());
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw ShapeError("+= shape mismatch " + shape_string() + " vs " + other.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (!same_shape(other)) throw ShapeError("-= shape mismatch " + shape_string() + " vs " + other.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[' << rows_ << 'x' << cols_ << ']';
  return os.str();
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch " + a.shape_string() + " * " + b.shape_string());
  }
  Tensor out(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt shape mismatch " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  Tensor out(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn shape mismatch " + a.shape_string() + "^T * " + b.shape_string());
  }
  Tensor out(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("affine shape mismatch x" + x.shape_string() + " w" + w.shape_string() +
                     " b" + b.shape_string());
  }
  Tensor out(x.rows(), w.cols());
  auto o = view(out);
  o.noalias() = view(x) * view(w);
  o.rowwise() += view(b).row(0);
  return out;
}

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows) {
  Tensor out(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) throw ShapeError("select_rows index out of range");
    auto src = t.row_view(rows[i]);
    std::copy(src.begin(), src.end(), out.row_view(i).begin());
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const std::size_t r = parts[0]->rows();
  std::size_t c = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != r) throw ShapeError("concat_cols row mismatch");
    c += p->cols();
  }
  Tensor out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double* dst = out.data() + i * c;
    for (const Tensor* p : parts) {
      auto src = p->row_view(i);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

void require_shape(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(rows) + "x" +
                     std::to_string(cols) + "], got " + t.shape_string());
  }
}

}  // namespace evorl::nn
