#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fairsin {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  // Rows selected by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> idx) const;
  Matrix transpose() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

// C = A * B.
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T * B, without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A * B^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Column-wise concatenation [A | B].
Matrix hconcat(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices within each row are sorted.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
               std::vector<std::size_t> indices, std::vector<double> values);

  // Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return indices_.size(); }

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<std::size_t>& indices() const { return indices_; }
  const std::vector<double>& values() const { return values_; }

  SparseMatrix transpose() const;
  Matrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

// Keeps freed buffers in the process heap instead of returning them to the
// OS. Training allocates the same large matrices every step, and re-faulting
// fresh pages otherwise dominates small graphs. Call once at startup.
void retain_freed_memory();

// Sparse-dense product A * B. Serial, fixed reduction order.
Matrix spmm(const SparseMatrix& a, const Matrix& b);
// A^T * B for sparse A, without building the transpose.
Matrix spmm_tn(const SparseMatrix& a, const Matrix& b);

}  // namespace fairsin
