// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace iim::linalg {

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const { return data_; }

  DenseMatrix transposed() const;
  std::vector<double> multiply(std::span<const double> x) const;
  DenseMatrix multiply(const DenseMatrix& other) const;
  double norm_inf() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Householder QR with column pivoting, A P = Q R. Pivot ties go to the
/// smallest column index. The numerical rank counts pivots larger than
/// `rank_tolerance` times the first pivot.
class PivotedQR {
 public:
  explicit PivotedQR(const DenseMatrix& a, double rank_tolerance = 1e-10);

  std::size_t rank() const { return rank_; }
  std::size_t rows() const { return qr_.rows(); }
  std::size_t cols() const { return qr_.cols(); }
  const std::vector<std::size_t>& permutation() const { return perm_; }

  /// Basic least-squares solution of min |A x - b|; entries beyond the rank
  /// are set to zero.
  std::vector<double> solve(std::span<const double> b) const;

  /// Returns w with w . b == v . solve(b) for every b, i.e. w = pinv(A)^T v.
  /// One triangular solve and one application of Q.
  std::vector<double> pinv_transpose_apply(std::span<const double> v) const;

  void apply_qt(std::span<double> b) const;
  void apply_q(std::span<double> b) const;

 private:
  DenseMatrix qr_;  // R in the upper triangle, Householder vectors below
  std::vector<double> tau_;
  std::vector<std::size_t> perm_;
  std::size_t rank_ = 0;
};

struct LeastSquaresResult {
  DenseMatrix x;
  std::size_t rank = 0;
};

/// Column-wise least squares min |A X - B| via pivoted QR (pivot threshold
/// 1e-10 relative). Rank deficiency is reported, not thrown.
LeastSquaresResult lsq_solve_pivoted(const DenseMatrix& a, const DenseMatrix& b);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Throws Error(Singular) when a pivot falls below 1e-14 |A|_inf.
  explicit LuFactorization(DenseMatrix a);

  std::size_t size() const { return lu_.rows(); }
  void solve_in_place(std::span<double> b) const;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> pivots_;
};

std::vector<double> lu_solve(const DenseMatrix& a, std::span<const double> b);

/// Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.
/// Throws Error(NoConvergence) after 100 m sweeps without deflation.
std::vector<std::complex<double>> hessenberg_eigs(const DenseMatrix& h);

/// Compressed sparse row matrix.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_index;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }
  void multiply(std::span<const double> x, std::span<double> y) const;
  DenseMatrix to_dense() const;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);

}  // namespace iim::linalg
