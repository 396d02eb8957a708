#include "fairsin/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>
#include <malloc.h>

#include "fairsin/error.hpp"

namespace fairsin {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::gather_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows_) throw ShapeError("gather_rows: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[r] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
  }
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "sub");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) { return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())}; }
Map view(Matrix& m) { return {m.data().data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())}; }

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimension mismatch " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  if (c.size() != 0) view(c).noalias() = view(a) * view(b);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  if (c.size() != 0) view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix c(a.rows(), b.rows());
  if (c.size() != 0) view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat: row mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  Matrix c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = c.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), dst.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                           std::vector<std::size_t> indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      offsets_(std::move(offsets)),
      indices_(std::move(indices)),
      values_(std::move(values)) {
  if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 || offsets_.back() != indices_.size() ||
      indices_.size() != values_.size()) {
    throw ShapeError("SparseMatrix: inconsistent CSR arrays");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1]) throw ShapeError("SparseMatrix: offsets not monotone");
  }
  for (std::size_t c : indices_) {
    if (c >= cols_) throw ShapeError("SparseMatrix: column index out of range");
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> indices;
  std::vector<double> values;
  indices.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (t.row >= rows || t.col >= cols) throw ShapeError("from_triplets: index out of range");
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    indices.push_back(t.col);
    values.push_back(t.value);
    ++offsets[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  return SparseMatrix(n, n, std::move(offsets), std::move(indices), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({indices_[k], r, values_[k]});
  return from_triplets(cols_, rows_, std::move(t));
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) d(r, indices_[k]) += values_[k];
  return d;
}

Matrix spmm(const SparseMatrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("spmm: inner dimension mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " + shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  const auto& off = a.offsets();
  const auto& idx = a.indices();
  const auto& val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.data().data() + i * n;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const double w = val[k];
      const double* brow = b.data().data() + idx[k] * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += w * brow[j];
    }
  }
  return c;
}

Matrix spmm_tn(const SparseMatrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("spmm_tn: row mismatch " + std::to_string(a.rows()) + " vs " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  const auto& off = a.offsets();
  const auto& idx = a.indices();
  const auto& val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* brow = b.data().data() + i * n;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const double w = val[k];
      double* crow = c.data().data() + idx[k] * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += w * brow[j];
    }
  }
  return c;
}

void retain_freed_memory() {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
}

}  // namespace fairsin
