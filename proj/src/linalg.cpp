// SPDX-License-Identifier: Apache-2.0
#include "iim/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "iim/error.hpp"

namespace iim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MultipleCrossings: return "MULTIPLE_CROSSINGS";
    case ErrorCode::InsufficientPoints: return "INSUFFICIENT_POINTS";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::SingularWallStencil: return "SINGULAR_WALL_STENCIL";
    case ErrorCode::SingularInterfaceSystem: return "SINGULAR_INTERFACE_SYSTEM";
    case ErrorCode::UnsupportedOrder: return "UNSUPPORTED_ORDER";
    case ErrorCode::TooLarge: return "TOO_LARGE";
    case ErrorCode::Breakdown: return "BREAKDOWN";
    case ErrorCode::BadResolution: return "BAD_RESOLUTION";
    case ErrorCode::ZeroDiagonal: return "ZERO_DIAGONAL";
    case ErrorCode::Singular: return "SINGULAR";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::MaxIterations: return "MAX_ITERATIONS";
    case ErrorCode::Stagnation: return "STAGNATION";
    case ErrorCode::Incompatible: return "INCOMPATIBLE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace iim

namespace iim::linalg {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  assert(x.size() == cols_);
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  assert(cols_ == other.rows_);
  DenseMatrix c(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < other.cols_; ++j) c(i, j) += a * other(k, j);
    }
  return c;
}

double DenseMatrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Pivoted QR

PivotedQR::PivotedQR(const DenseMatrix& a, double rank_tolerance)
    : qr_(a), tau_(std::min(a.rows(), a.cols()), 0.0), perm_(a.cols()) {
  const std::size_t m = qr_.rows();
  const std::size_t n = qr_.cols();
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  const std::size_t steps = std::min(m, n);

  for (std::size_t k = 0; k < steps; ++k) {
    // Column norms are recomputed exactly; the matrices are small.
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += qr_(i, j) * qr_(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(qr_(i, k), qr_(i, best));
      std::swap(perm_[k], perm_[best]);
    }

    const double norm = std::sqrt(best_norm);
    if (norm == 0.0) {
      tau_[k] = 0.0;
      continue;
    }
    const double alpha = qr_(k, k) > 0.0 ? -norm : norm;
    // v = x - alpha e1, normalised so v[0] = 1
    const double v0 = qr_(k, k) - alpha;
    for (std::size_t i = k + 1; i < m; ++i) qr_(i, k) /= v0;
    tau_[k] = -v0 / alpha;
    qr_(k, k) = alpha;

    for (std::size_t j = k + 1; j < n; ++j) {
      double s = qr_(k, j);
      for (std::size_t i = k + 1; i < m; ++i) s += qr_(i, k) * qr_(i, j);
      s *= tau_[k];
      qr_(k, j) -= s;
      for (std::size_t i = k + 1; i < m; ++i) qr_(i, j) -= s * qr_(i, k);
    }
  }

  const double lead = steps > 0 ? std::abs(qr_(0, 0)) : 0.0;
  rank_ = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    if (lead > 0.0 && std::abs(qr_(k, k)) > rank_tolerance * lead)
      ++rank_;
    else
      break;
  }
}

void PivotedQR::apply_qt(std::span<double> b) const {
  const std::size_t m = qr_.rows();
  assert(b.size() == m);
  for (std::size_t k = 0; k < tau_.size(); ++k) {
    if (tau_[k] == 0.0) continue;
    double s = b[k];
    for (std::size_t i = k + 1; i < m; ++i) s += qr_(i, k) * b[i];
    s *= tau_[k];
    b[k] -= s;
    for (std::size_t i = k + 1; i < m; ++i) b[i] -= s * qr_(i, k);
  }
}

void PivotedQR::apply_q(std::span<double> b) const {
  const std::size_t m = qr_.rows();
  assert(b.size() == m);
  for (std::size_t kk = tau_.size(); kk-- > 0;) {
    if (tau_[kk] == 0.0) continue;
    double s = b[kk];
    for (std::size_t i = kk + 1; i < m; ++i) s += qr_(i, kk) * b[i];
    s *= tau_[kk];
    b[kk] -= s;
    for (std::size_t i = kk + 1; i < m; ++i) b[i] -= s * qr_(i, kk);
  }
}

std::vector<double> PivotedQR::solve(std::span<const double> b) const {
  std::vector<double> c(b.begin(), b.end());
  apply_qt(c);
  std::vector<double> z(cols(), 0.0);
  for (std::size_t kk = rank_; kk-- > 0;) {
    double s = c[kk];
    for (std::size_t j = kk + 1; j < rank_; ++j) s -= qr_(kk, j) * z[j];
    z[kk] = s / qr_(kk, kk);
  }
  std::vector<double> x(cols(), 0.0);
  for (std::size_t k = 0; k < cols(); ++k) x[perm_[k]] = z[k];
  return x;
}

std::vector<double> PivotedQR::pinv_transpose_apply(std::span<const double> v) const {
  assert(v.size() == cols());
  // solve(b) = P R^{-1} [Q^T b]_r, so the weights are Q [R^{-T} P^T v; 0].
  std::vector<double> t(rows(), 0.0);
  for (std::size_t k = 0; k < rank_; ++k) {
    double s = v[perm_[k]];
    for (std::size_t i = 0; i < k; ++i) s -= qr_(i, k) * t[i];
    t[k] = s / qr_(k, k);
  }
  apply_q(t);
  return t;
}

LeastSquaresResult lsq_solve_pivoted(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() < a.cols())
    throw Error(ErrorCode::InvalidArgument, "least squares requires rows >= cols");
  if (b.rows() != a.rows()) throw Error(ErrorCode::InvalidArgument, "row count mismatch");
  PivotedQR qr(a);
  LeastSquaresResult out{DenseMatrix(a.cols(), b.cols()), qr.rank()};
  std::vector<double> col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    const auto x = qr.solve(col);
    for (std::size_t i = 0; i < a.cols(); ++i) out.x(i, j) = x[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// LU

LuFactorization::LuFactorization(DenseMatrix a) : lu_(std::move(a)), pivots_(lu_.rows()) {
  const std::size_t n = lu_.rows();
  if (lu_.cols() != n) throw Error(ErrorCode::InvalidArgument, "LU requires a square matrix");
  const double scale = lu_.norm_inf();
  const double tiny = 1e-14 * scale;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    }
    if (!(best > tiny) || scale == 0.0)
      throw Error(ErrorCode::Singular, "pivot below tolerance at column " + std::to_string(k));
    pivots_[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
    const double inv = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu_(i, k) * inv;
      lu_(i, k) = l;
      if (l == 0.0) continue;
      auto ri = lu_.row(i);
      auto rk = lu_.row(k);
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

void LuFactorization::solve_in_place(std::span<double> b) const {
  const std::size_t n = lu_.rows();
  assert(b.size() == n);
  for (std::size_t k = 0; k < n; ++k) std::swap(b[k], b[pivots_[k]]);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * b[j];
    b[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * b[j];
    b[i] = s / lu_(i, i);
  }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

std::vector<double> lu_solve(const DenseMatrix& a, std::span<const double> b) {
  return LuFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------
// Hessenberg eigenvalues (Francis double shift, after the classic hqr scheme)

std::vector<std::complex<double>> hessenberg_eigs(const DenseMatrix& hin) {
  const int n = static_cast<int>(hin.rows());
  if (hin.cols() != hin.rows()) throw Error(ErrorCode::InvalidArgument, "square matrix required");
  std::vector<std::complex<double>> eig(n);
  if (n == 0) return eig;
  DenseMatrix a = hin;
  auto h = [&a](int i, int j) -> double& { return a(i, j); };

  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(h(i, j));

  int nn = n - 1;
  double t = 0.0;
  int total_its = 0;
  const int max_total = 100 * n;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 1; --l) {
        const double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        const double ref = s == 0.0 ? anorm : s;
        if (std::abs(h(l, l - 1)) <= std::numeric_limits<double>::epsilon() * ref) {
          h(l, l - 1) = 0.0;
          break;
        }
      }
      const double x = h(nn, nn);
      if (l == nn) {
        eig[nn] = {x + t, 0.0};
        --nn;
      } else {
        const double y = h(nn - 1, nn - 1);
        const double w = h(nn, nn - 1) * h(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          const double z = std::sqrt(std::abs(q));
          const double xx = x + t;
          if (q >= 0.0) {
            const double zz = p + std::copysign(z, p);
            eig[nn - 1] = eig[nn] = {xx + zz, 0.0};
            if (zz != 0.0) eig[nn] = {xx - w / zz, 0.0};
          } else {
            eig[nn - 1] = {xx + p, z};
            eig[nn] = {xx + p, -z};
          }
          nn -= 2;
        } else {
          if (total_its >= max_total)
            throw Error(ErrorCode::NoConvergence, "Hessenberg QR did not converge");
          double xs = x, ys = y, ws = w;
          if (its == 10 || its == 20) {
            // exceptional shift
            t += xs;
            for (int i = 0; i <= nn; ++i) h(i, i) -= xs;
            const double s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
            xs = ys = 0.75 * s;
            ws = -0.4375 * s * s;
          }
          ++its;
          ++total_its;
          int m = nn - 2;
          double p = 0, q = 0, r = 0, z = 0;
          for (; m >= l; --m) {
            z = h(m, m);
            r = xs - z;
            const double s = ys - z;
            p = (r * s - ws) / h(m + 1, m) + h(m, m + 1);
            q = h(m + 1, m + 1) - z - r - s;
            r = h(m + 2, m + 1);
            const double sc = std::abs(p) + std::abs(q) + std::abs(r);
            p /= sc;
            q /= sc;
            r /= sc;
            if (m == l) break;
            const double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v =
                std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) + std::abs(h(m + 1, m + 1)));
            if (u <= std::numeric_limits<double>::epsilon() * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            h(i + 2, i) = 0.0;
            if (i != m) h(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            double scale = 0.0;
            if (k != m) {
              p = h(k, k - 1);
              q = h(k + 1, k - 1);
              r = k != nn - 1 ? h(k + 2, k - 1) : 0.0;
              scale = std::abs(p) + std::abs(q) + std::abs(r);
              if (scale != 0.0) {
                p /= scale;
                q /= scale;
                r /= scale;
              }
            }
            const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) h(k, k - 1) = -h(k, k - 1);
            } else {
              h(k, k - 1) = -s * scale;
            }
            p += s;
            const double xr = p / s;
            const double yr = q / s;
            const double zr = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              double pp = h(k, j) + q * h(k + 1, j);
              if (k != nn - 1) {
                pp += r * h(k + 2, j);
                h(k + 2, j) -= pp * zr;
              }
              h(k + 1, j) -= pp * yr;
              h(k, j) -= pp * xr;
            }
            const int mmin = std::min(nn, k + 3);
            for (int i = l; i <= mmin; ++i) {
              double pp = xr * h(i, k) + yr * h(i, k + 1);
              if (k != nn - 1) {
                pp += zr * h(i, k + 2);
                h(i, k + 2) -= pp * r;
              }
              h(i, k + 1) -= pp * q;
              h(i, k) -= pp;
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return eig;
}

// ---------------------------------------------------------------------------

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  assert(x.size() == cols && y.size() == rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += values[p] * x[col_index[p]];
    y[i] = s;
  }
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d(i, col_index[p]) += values[p];
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

}  // namespace iim::linalg
