#pragma once

// Parameterized multichannel Wiener filter:
//   gamma = inv(Phi_nn) Phi_ss
//   h     = gamma[:, ref] / (beta + Re trace(gamma))
// beta = 0 gives MVDR, beta = 1 gives the MWF.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "npmwf/error.hpp"
#include "npmwf/linalg.hpp"

namespace npmwf {

enum class FilterStatus { Ok, SingularMatrix, DegenerateDenominator };

inline constexpr double kMinDenominator = 1e-12;

struct FilterResult {
  FilterStatus status = FilterStatus::Ok;
  CVector h;

  bool ok() const noexcept { return status == FilterStatus::Ok; }
};

/// Non-throwing variant used on the per-bin hot path.
inline FilterResult try_compute_filter(const CMatrix& phi_nn, const CMatrix& phi_ss, double beta,
                                       std::size_t ref_channel, double loading) {
  const std::size_t m = phi_nn.dim();
  const auto inv = try_regularized_inverse(phi_nn, loading);
  if (!inv) return {FilterStatus::SingularMatrix, {}};

  // Only column `ref` and the trace of gamma are needed.
  CVector column(m);
  Complex trace{};
  for (std::size_t r = 0; r < m; ++r) {
    Complex col_acc{};
    for (std::size_t k = 0; k < m; ++k) {
      col_acc += (*inv)(r, k) * phi_ss(k, ref_channel);
      trace += (*inv)(r, k) * phi_ss(k, r);
    }
    column[r] = col_acc;
  }
  const double denominator = beta + trace.real();
  if (!(std::abs(denominator) >= kMinDenominator) || !std::isfinite(denominator)) {
    return {FilterStatus::DegenerateDenominator, {}};
  }
  for (std::size_t r = 0; r < m; ++r) column[r] /= denominator;
  if (!column.all_finite()) return {FilterStatus::DegenerateDenominator, {}};
  return {FilterStatus::Ok, column};
}

inline CVector compute_filter(const CMatrix& phi_nn, const CMatrix& phi_ss, double beta, std::size_t ref_channel,
                              double loading) {
  if (phi_nn.dim() != phi_ss.dim()) throw Error(ErrorCode::ShapeMismatch, "covariance dimensions differ");
  if (ref_channel >= phi_nn.dim()) throw Error(ErrorCode::InvalidArgument, "reference channel out of range");
  if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
  if (!(loading >= 0.0)) throw Error(ErrorCode::InvalidArgument, "loading must be >= 0");
  auto result = try_compute_filter(phi_nn, phi_ss, beta, ref_channel, loading);
  switch (result.status) {
    case FilterStatus::Ok: return result.h;
    case FilterStatus::SingularMatrix:
      throw Error(ErrorCode::SingularMatrix, "noise covariance is numerically singular");
    case FilterStatus::DegenerateDenominator:
      throw Error(ErrorCode::DegenerateDenominator, "beta + trace(gamma) vanishes");
  }
  return {};
}

/// Filter output h^H y.
inline Complex apply_filter(const CVector& h, const CVector& y) { return inner(h, y); }

/// Per-bin filters with hold-last-valid semantics.
class FilterBank {
 public:
  FilterBank(std::size_t channels, std::size_t bins) : filters_(bins, CVector(channels)), valid_(bins, false) {}

  std::size_t bins() const noexcept { return filters_.size(); }
  const CVector& filter(std::size_t bin) const noexcept { return filters_[bin]; }
  bool has_valid(std::size_t bin) const noexcept { return valid_[bin]; }

  /// Installs a fresh filter on success; otherwise keeps the previous one
  /// (zero before any success). Returns whether the bin was refreshed.
  bool update(std::size_t bin, const FilterResult& result) {
    if (!result.ok()) return false;
    filters_[bin] = result.h;
    valid_[bin] = true;
    return true;
  }

  void set(std::size_t bin, const CVector& h) {
    filters_[bin] = h;
    valid_[bin] = true;
  }

 private:
  std::vector<CVector> filters_;
  std::vector<bool> valid_;
};

}  // namespace npmwf
