#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "npmwf/error.hpp"

namespace npmwf {

inline constexpr double kMetricCapDb = 100.0;

namespace metric_detail {

inline void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "reference has " + std::to_string(a.size()) + " samples, estimate " + std::to_string(b.size()));
  }
}

/// 10 log10(num / den) clamped to [-cap, cap]; handles zero terms.
inline double capped_ratio_db(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kMetricCapDb : -kMetricCapDb;
  if (num <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

}  // namespace metric_detail

/// 10 log10(|s|^2 / |s - s_hat|^2), capped at +-100 dB.
inline double snr_db(std::span<const double> reference, std::span<const double> estimate) {
  metric_detail::check_lengths(reference, estimate);
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    signal += reference[i] * reference[i];
    const double e = reference[i] - estimate[i];
    error += e * e;
  }
  return metric_detail::capped_ratio_db(signal, error);
}

/// Scale-invariant SDR after removing the mean of both signals.
inline double si_sdr_db(std::span<const double> reference, std::span<const double> estimate) {
  metric_detail::check_lengths(reference, estimate);
  const std::size_t n = reference.size();
  if (n == 0) throw Error(ErrorCode::ZeroReference, "empty reference");
  const double mean_s = std::accumulate(reference.begin(), reference.end(), 0.0) / static_cast<double>(n);
  const double mean_e = std::accumulate(estimate.begin(), estimate.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  double es = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = reference[i] - mean_s;
    ss += s * s;
    es += (estimate[i] - mean_e) * s;
  }
  if (ss <= 0.0) throw Error(ErrorCode::ZeroReference, "reference has zero energy");
  const double a = es / ss;
  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = a * (reference[i] - mean_s);
    const double r = (estimate[i] - mean_e) - t;
    target += t * t;
    residual += r * r;
  }
  return metric_detail::capped_ratio_db(target, residual);
}

struct MetricsEntry {
  double snr_db = 0.0;
  double si_sdr_db = 0.0;
};

struct MetricsReport {
  std::vector<MetricsEntry> files;

  MetricsEntry mean() const {
    MetricsEntry m;
    if (files.empty()) return m;
    for (const auto& f : files) {
      m.snr_db += f.snr_db;
      m.si_sdr_db += f.si_sdr_db;
    }
    m.snr_db /= static_cast<double>(files.size());
    m.si_sdr_db /= static_cast<double>(files.size());
    return m;
  }
};

inline MetricsEntry evaluate(std::span<const double> reference, std::span<const double> estimate) {
  return {snr_db(reference, estimate), si_sdr_db(reference, estimate)};
}

}  // namespace npmwf
