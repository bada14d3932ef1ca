#pragma once

// Small fixed-capacity complex vectors and matrices for per-bin spatial
// statistics. Storage is inline (no heap) so covariance banks stay contiguous.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>

#include "npmwf/error.hpp"

namespace npmwf {

inline constexpr std::size_t kMaxChannels = 8;

namespace detail {
inline void check_dim(std::size_t dim) {
  if (dim == 0 || dim > kMaxChannels) {
    throw Error(ErrorCode::InvalidArgument,
                "dimension " + std::to_string(dim) + " outside [1, " +
                    std::to_string(kMaxChannels) + "]");
  }
}
}  // namespace detail

template <typename T>
class BasicCVector {
 public:
  using value_type = std::complex<T>;

  BasicCVector() = default;
  explicit BasicCVector(std::size_t dim) : dim_(dim) { detail::check_dim(dim); }
  BasicCVector(std::initializer_list<value_type> values) : dim_(values.size()) {
    detail::check_dim(dim_);
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t dim() const noexcept { return dim_; }

  value_type& operator[](std::size_t i) noexcept { return data_[i]; }
  const value_type& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<value_type> values() noexcept { return {data_.data(), dim_}; }
  std::span<const value_type> values() const noexcept { return {data_.data(), dim_}; }

  T squared_norm() const noexcept {
    T acc{};
    for (std::size_t i = 0; i < dim_; ++i) acc += std::norm(data_[i]);
    return acc;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.begin() + dim_, [](const value_type& v) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
  }

  friend bool operator==(const BasicCVector& a, const BasicCVector& b) {
    return a.dim_ == b.dim_ && std::equal(a.data_.begin(), a.data_.begin() + a.dim_, b.data_.begin());
  }

 private:
  std::size_t dim_ = 0;
  std::array<value_type, kMaxChannels> data_{};
};

/// Row-major M x M complex matrix with M <= kMaxChannels.
template <typename T>
class BasicCMatrix {
 public:
  using value_type = std::complex<T>;

  BasicCMatrix() = default;
  explicit BasicCMatrix(std::size_t dim) : dim_(dim) { detail::check_dim(dim); }
  BasicCMatrix(std::initializer_list<std::initializer_list<value_type>> rows) : dim_(rows.size()) {
    detail::check_dim(dim_);
    std::size_t r = 0;
    for (const auto& row : rows) {
      if (row.size() != dim_) throw Error(ErrorCode::ShapeMismatch, "matrix literal is not square");
      std::size_t c = 0;
      for (const auto& v : row) (*this)(r, c++) = v;
      ++r;
    }
  }

  static BasicCMatrix identity(std::size_t dim) { return scaled_identity(dim, T{1}); }

  static BasicCMatrix scaled_identity(std::size_t dim, T scale) {
    BasicCMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = scale;
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }

  value_type& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * kMaxChannels + c]; }
  const value_type& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * kMaxChannels + c];
  }

  value_type trace() const noexcept {
    value_type acc{};
    for (std::size_t i = 0; i < dim_; ++i) acc += (*this)(i, i);
    return acc;
  }

  BasicCMatrix conj_transpose() const {
    BasicCMatrix out(dim_);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) out(r, c) = std::conj((*this)(c, r));
    return out;
  }

  /// Replaces the matrix by (A + A^H) / 2.
  void make_hermitian() noexcept {
    for (std::size_t r = 0; r < dim_; ++r) {
      (*this)(r, r) = value_type((*this)(r, r).real(), T{0});
      for (std::size_t c = r + 1; c < dim_; ++c) {
        const value_type avg = T{0.5} * ((*this)(r, c) + std::conj((*this)(c, r)));
        (*this)(r, c) = avg;
        (*this)(c, r) = std::conj(avg);
      }
    }
  }

  BasicCVector<T> column(std::size_t c) const {
    BasicCVector<T> out(dim_);
    for (std::size_t r = 0; r < dim_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  T max_abs() const noexcept {
    T best{};
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) best = std::max(best, std::abs((*this)(r, c)));
    return best;
  }

  T frobenius_norm() const noexcept {
    T acc{};
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) acc += std::norm((*this)(r, c));
    return std::sqrt(acc);
  }

  bool all_finite() const noexcept {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) {
        const auto& v = (*this)(r, c);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
      }
    return true;
  }

  BasicCMatrix& operator+=(const BasicCMatrix& other) noexcept {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) (*this)(r, c) += other(r, c);
    return *this;
  }

  BasicCMatrix& operator-=(const BasicCMatrix& other) noexcept {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) (*this)(r, c) -= other(r, c);
    return *this;
  }

  BasicCMatrix& operator*=(T scale) noexcept {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) (*this)(r, c) *= scale;
    return *this;
  }

  friend BasicCMatrix operator+(BasicCMatrix a, const BasicCMatrix& b) { return a += b; }
  friend BasicCMatrix operator-(BasicCMatrix a, const BasicCMatrix& b) { return a -= b; }
  friend BasicCMatrix operator*(T s, BasicCMatrix a) { return a *= s; }
  friend BasicCMatrix operator*(BasicCMatrix a, T s) { return a *= s; }

  friend bool operator==(const BasicCMatrix& a, const BasicCMatrix& b) {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t r = 0; r < a.dim_; ++r)
      for (std::size_t c = 0; c < a.dim_; ++c)
        if (a(r, c) != b(r, c)) return false;
    return true;
  }

 private:
  std::size_t dim_ = 0;
  std::array<value_type, kMaxChannels * kMaxChannels> data_{};
};

using Complex = std::complex<double>;
using CVector = BasicCVector<double>;
using CMatrix = BasicCMatrix<double>;

/// v * v^H. Exactly Hermitian: the lower triangle is written as the
/// conjugate of the upper one.
template <typename T>
BasicCMatrix<T> herm_outer(const BasicCVector<T>& v) {
  const std::size_t m = v.dim();
  BasicCMatrix<T> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    out(r, r) = std::complex<T>(std::norm(v[r]), T{0});
    for (std::size_t c = r + 1; c < m; ++c) {
      const auto entry = v[r] * std::conj(v[c]);
      out(r, c) = entry;
      out(c, r) = std::conj(entry);
    }
  }
  return out;
}

template <typename T>
BasicCMatrix<T> matmul(const BasicCMatrix<T>& a, const BasicCMatrix<T>& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::ShapeMismatch, "matmul: dimension mismatch");
  const std::size_t m = a.dim();
  BasicCMatrix<T> out(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < m; ++k) {
      const auto lhs = a(r, k);
      for (std::size_t c = 0; c < m; ++c) out(r, c) += lhs * b(k, c);
    }
  }
  return out;
}

template <typename T>
BasicCVector<T> matvec(const BasicCMatrix<T>& a, const BasicCVector<T>& x) {
  if (a.dim() != x.dim()) throw Error(ErrorCode::ShapeMismatch, "matvec: dimension mismatch");
  BasicCVector<T> out(a.dim());
  for (std::size_t r = 0; r < a.dim(); ++r) {
    std::complex<T> acc{};
    for (std::size_t c = 0; c < a.dim(); ++c) acc += a(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

/// Conjugated inner product a^H b.
template <typename T>
std::complex<T> inner(const BasicCVector<T>& a, const BasicCVector<T>& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::ShapeMismatch, "inner: dimension mismatch");
  std::complex<T> acc{};
  for (std::size_t i = 0; i < a.dim(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline constexpr double kAbsoluteLoading = 1e-12;
inline constexpr double kPivotThreshold = 1e-14;

/// Amount added to the diagonal: loading * (Re trace(m) / M + kAbsoluteLoading).
/// A loading of zero leaves the matrix untouched.
template <typename T>
T diagonal_load(const BasicCMatrix<T>& m, T loading) {
  return loading * (m.trace().real() / static_cast<T>(m.dim()) + static_cast<T>(kAbsoluteLoading));
}

template <typename T>
BasicCMatrix<T> loaded_matrix(const BasicCMatrix<T>& m, T loading) {
  BasicCMatrix<T> out = m;
  const T load = diagonal_load(m, loading);
  for (std::size_t i = 0; i < m.dim(); ++i) out(i, i) += load;
  return out;
}

/// Gauss-Jordan inversion with partial pivoting. Returns nullopt when a pivot
/// falls below kPivotThreshold times the largest initial row norm.
template <typename T>
std::optional<BasicCMatrix<T>> try_invert(const BasicCMatrix<T>& a) {
  const std::size_t m = a.dim();
  BasicCMatrix<T> work = a;
  BasicCMatrix<T> inv = BasicCMatrix<T>::identity(m);

  T max_row_norm{};
  for (std::size_t r = 0; r < m; ++r) {
    T acc{};
    for (std::size_t c = 0; c < m; ++c) acc += std::norm(work(r, c));
    max_row_norm = std::max(max_row_norm, std::sqrt(acc));
  }
  const T threshold = static_cast<T>(kPivotThreshold) * max_row_norm;
  if (!(max_row_norm > T{0}) || !std::isfinite(max_row_norm)) return std::nullopt;

  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    T best = std::abs(work(col, col));
    for (std::size_t r = col + 1; r < m; ++r) {
      const T cand = std::abs(work(r, col));
      if (cand > best) {
        best = cand;
        pivot = r;
      }
    }
    if (!(best >= threshold) || best == T{0}) return std::nullopt;
    if (pivot != col) {
      for (std::size_t c = 0; c < m; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const std::complex<T> scale = T{1} / work(col, col);
    for (std::size_t c = 0; c < m; ++c) {
      work(col, c) *= scale;
      inv(col, c) *= scale;
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const std::complex<T> factor = work(r, col);
      if (factor == std::complex<T>{}) continue;
      for (std::size_t c = 0; c < m; ++c) {
        work(r, c) -= factor * work(col, c);
        inv(r, c) -= factor * inv(col, c);
      }
    }
  }
  return inv;
}

template <typename T>
std::optional<BasicCMatrix<T>> try_regularized_inverse(const BasicCMatrix<T>& m, T loading) {
  return try_invert(loaded_matrix(m, loading));
}

/// Inverse of m + diagonal_load(m, loading) * I.
/// Throws SingularMatrix when the loaded matrix is numerically singular.
template <typename T>
BasicCMatrix<T> regularized_inverse(const BasicCMatrix<T>& m, T loading) {
  if (loading < T{0}) throw Error(ErrorCode::InvalidArgument, "negative diagonal loading");
  auto inv = try_regularized_inverse(m, loading);
  if (!inv) throw Error(ErrorCode::SingularMatrix, "loaded matrix is numerically singular");
  return *inv;
}

}  // namespace npmwf
