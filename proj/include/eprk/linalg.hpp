#pragma once

// Small dense linear algebra, templated on the scalar so the same routines
// serve the MPFR verification code and the double-precision integrators.
// Sizes here never exceed a few hundred entries; clarity wins over blocking.

#include "eprk/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace eprk {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::vector<T> column(std::size_t j) const {
    std::vector<T> v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  void set_column(std::size_t j, const std::vector<T>& v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  // Row-major flattening, the vec() used for linear-independence checks.
  const std::vector<T>& flat() const { return data_; }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Matrix& operator*=(const T& a) {
    for (auto& x : data_) x *= a;
    return *this;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<Real>;

template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) {
  return a += b;
}
template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) {
  return a -= b;
}
template <class T>
Matrix<T> operator*(const T& s, Matrix<T> a) {
  return a *= s;
}

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw InputError("matrix product: shape mismatch");
  Matrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
    }
  return c;
}

template <class T>
std::vector<T> operator*(const Matrix<T>& a, const std::vector<T>& x) {
  if (a.cols() != x.size()) throw InputError("matrix-vector product: shape mismatch");
  std::vector<T> y(a.rows(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

template <class T>
T dot(const std::vector<T>& x, const std::vector<T>& y) {
  T s(0);
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

template <class T>
T norm2(const std::vector<T>& x) {
  using std::sqrt;
  return sqrt(dot(x, x));
}

template <class T>
T max_abs(const std::vector<T>& x) {
  using std::abs;
  T m(0);
  for (const auto& v : x) m = std::max<T>(m, abs(v));
  return m;
}

template <class T>
T max_abs(const Matrix<T>& a) {
  return max_abs(a.flat());
}

template <class T>
T frobenius_norm(const Matrix<T>& a) {
  return norm2(a.flat());
}

// Rank-one matrix x y^T.
template <class T>
Matrix<T> outer(const std::vector<T>& x, const std::vector<T>& y) {
  Matrix<T> m(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
  return m;
}

// Relative rounding unit of the scalar type at the current precision.
template <class T>
T unit_roundoff() {
  if constexpr (std::is_floating_point_v<T>)
    return std::numeric_limits<T>::epsilon();
  else
    return pow10_neg(static_cast<int>(current_precision_digits()));
}

// Gaussian elimination with partial pivoting. Throws on an exactly singular
// pivot; callers judge conditioning from the residual.
template <class T>
std::vector<T> lu_solve(Matrix<T> a, std::vector<T> b) {
  using std::abs;
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw InputError("lu_solve: shape mismatch");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (abs(a(i, k)) > abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0) throw InputError("lu_solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      T f = a(i, k) / a(k, k);
      if (f == 0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = n; i-- > 0;) {
    T s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

// A * P = Q * R with Householder reflections and greedy column pivoting.
// perm[j] is the original index of the column moved to position j.
template <class T>
struct PivotedQR {
  Matrix<T> r;
  std::vector<std::size_t> perm;
};

template <class T>
PivotedQR<T> pivoted_qr(Matrix<T> a) {
  using std::abs;
  using std::sqrt;
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const std::size_t steps = std::min(m, n);
  for (std::size_t j = 0; j < steps; ++j) {
    std::size_t best = j;
    T best_norm(-1);
    for (std::size_t c = j; c < n; ++c) {
      T s(0);
      for (std::size_t i = j; i < m; ++i) s += a(i, c) * a(i, c);
      if (s > best_norm) {
        best_norm = s;
        best = c;
      }
    }
    if (best != j) {
      for (std::size_t i = 0; i < m; ++i) std::swap(a(i, j), a(i, best));
      std::swap(perm[j], perm[best]);
    }
    T norm = sqrt(best_norm);
    if (norm == 0) continue;
    T alpha = a(j, j) > 0 ? T(-norm) : norm;
    std::vector<T> v(m - j);
    for (std::size_t i = j; i < m; ++i) v[i - j] = a(i, j);
    v[0] -= alpha;
    T vv = dot(v, v);
    if (vv == 0) continue;
    for (std::size_t c = j; c < n; ++c) {
      T s(0);
      for (std::size_t i = j; i < m; ++i) s += v[i - j] * a(i, c);
      s = 2 * s / vv;
      for (std::size_t i = j; i < m; ++i) a(i, c) -= s * v[i - j];
    }
    a(j, j) = alpha;
    for (std::size_t i = j + 1; i < m; ++i) a(i, j) = T(0);
  }
  return {std::move(a), std::move(perm)};
}

// Modified Gram-Schmidt, applied twice; columns that collapse below the
// roundoff level are dropped.
template <class T>
Matrix<T> orthonormal_columns(const Matrix<T>& a) {
  using std::sqrt;
  std::vector<std::vector<T>> kept;
  T scale = max_abs(a);
  T drop = scale * unit_roundoff<T>() * T(1000);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    auto v = a.column(j);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : kept) {
        T d = dot(q, v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * q[i];
      }
    T nv = norm2(v);
    if (nv <= drop) continue;
    for (auto& x : v) x /= nv;
    kept.push_back(std::move(v));
  }
  Matrix<T> q(a.rows(), kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) q.set_column(j, kept[j]);
  return q;
}

template <class T>
struct NullSpace {
  std::size_t rank = 0;
  bool ambiguous = false;
  // |R_jj| / |R_00| along the pivoted diagonal.
  std::vector<T> pivot_ratios;
  // Orthonormal columns spanning the numerical kernel.
  Matrix<T> basis;
};

// Numerical rank from the pivoted QR diagonal: a pivot counts when its ratio
// to the leading pivot exceeds rel_tol. Ratios within two decades of rel_tol
// mark the decision as ambiguous.
template <class T>
NullSpace<T> null_space(const Matrix<T>& a, const T& rel_tol) {
  using std::abs;
  const std::size_t n = a.cols();
  auto qr = pivoted_qr(a);
  const std::size_t steps = std::min(a.rows(), n);
  NullSpace<T> out;
  T lead = steps > 0 ? abs(qr.r(0, 0)) : T(0);
  std::size_t rank = 0;
  bool below = false;
  for (std::size_t j = 0; j < steps; ++j) {
    T ratio = lead == 0 ? T(0) : T(abs(qr.r(j, j)) / lead);
    out.pivot_ratios.push_back(ratio);
    if (ratio >= rel_tol / 100 && ratio <= rel_tol * 100) out.ambiguous = true;
    if (!below && ratio > rel_tol)
      ++rank;
    else
      below = true;
  }
  out.rank = rank;

  const std::size_t free = n - rank;
  Matrix<T> k(n, free);
  for (std::size_t t = 0; t < free; ++t) {
    // Back-substitute R11 x = -R12 e_t.
    std::vector<T> x(rank);
    for (std::size_t i = rank; i-- > 0;) {
      T s = -qr.r(i, rank + t);
      for (std::size_t j = i + 1; j < rank; ++j) s -= qr.r(i, j) * x[j];
      x[i] = s / qr.r(i, i);
    }
    for (std::size_t i = 0; i < rank; ++i) k(qr.perm[i], t) = x[i];
    k(qr.perm[rank + t], t) = T(1);
  }
  out.basis = orthonormal_columns(k);
  return out;
}

template <class T>
struct Svd {
  Matrix<T> u;        // rows x p
  std::vector<T> s;   // p singular values, descending
  Matrix<T> v;        // cols x p
};

// One-sided Jacobi (Hestenes). p = min(rows, cols).
template <class T>
Svd<T> svd(const Matrix<T>& a) {
  using std::abs;
  using std::sqrt;
  if (a.rows() < a.cols()) {
    auto t = svd(a.transpose());
    return {std::move(t.v), std::move(t.s), std::move(t.u)};
  }
  const std::size_t m = a.rows(), n = a.cols();
  Matrix<T> u = a;
  Matrix<T> v = Matrix<T>::identity(n);
  const T eps = unit_roundoff<T>();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        T alpha(0), beta(0), gamma(0);
        for (std::size_t i = 0; i < m; ++i) {
          alpha += u(i, p) * u(i, p);
          beta += u(i, q) * u(i, q);
          gamma += u(i, p) * u(i, q);
        }
        if (gamma == 0 || abs(gamma) <= eps * sqrt(alpha * beta)) continue;
        rotated = true;
        T zeta = (beta - alpha) / (2 * gamma);
        T t = (zeta >= 0 ? T(1) : T(-1)) / (abs(zeta) + sqrt(1 + zeta * zeta));
        T c = 1 / sqrt(1 + t * t);
        T s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          T up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - s * uq;
          u(i, q) = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          T vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    if (!rotated) break;
  }
  std::vector<T> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    sv[j] = norm2(u.column(j));
    if (sv[j] != 0)
      for (std::size_t i = 0; i < m; ++i) u(i, j) /= sv[j];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
  Svd<T> out{Matrix<T>(m, n), std::vector<T>(n), Matrix<T>(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.s[j] = sv[order[j]];
    out.u.set_column(j, u.column(order[j]));
    out.v.set_column(j, v.column(order[j]));
  }
  return out;
}

// Number of singular values above rel_tol times the largest one.
template <class T>
std::size_t numerical_rank(const Matrix<T>& a, const T& rel_tol) {
  auto d = svd(a);
  if (d.s.empty() || d.s[0] == 0) return 0;
  std::size_t r = 0;
  for (const auto& x : d.s)
    if (x > rel_tol * d.s[0]) ++r;
  return r;
}

// Least-squares distance of x from the column span of an orthonormal basis,
// relative to |x|.
template <class T>
T relative_distance_from_span(const Matrix<T>& q, const std::vector<T>& x) {
  auto r = x;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    auto col = q.column(j);
    T d = dot(col, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d * col[i];
  }
  T nx = norm2(x);
  return nx == 0 ? norm2(r) : T(norm2(r) / nx);
}

}  // namespace eprk
