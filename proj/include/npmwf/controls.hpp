#pragma once

// Per-frame filter controls: speech presence probability, PMWF distortion
// weight beta, and covariance smoothing factors alpha_ss / alpha_nn.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npmwf/error.hpp"

namespace npmwf {

enum class BetaMode { Fixed, FreqDependent, SppDriven };
enum class AlphaMode { CumulativeMean, Fixed, FreqDependent, SppDriven };

inline BetaMode parse_beta_mode(std::string_view s) {
  if (s == "fixed") return BetaMode::Fixed;
  if (s == "freq") return BetaMode::FreqDependent;
  if (s == "spp") return BetaMode::SppDriven;
  throw Error(ErrorCode::InvalidConfig, "unknown beta_mode '" + std::string(s) + "'");
}

inline AlphaMode parse_alpha_mode(std::string_view s) {
  if (s == "cum_mean") return AlphaMode::CumulativeMean;
  if (s == "fixed") return AlphaMode::Fixed;
  if (s == "freq") return AlphaMode::FreqDependent;
  if (s == "spp") return AlphaMode::SppDriven;
  throw Error(ErrorCode::InvalidConfig, "unknown alpha_mode '" + std::string(s) + "'");
}

constexpr std::string_view to_string(BetaMode m) {
  switch (m) {
    case BetaMode::Fixed: return "fixed";
    case BetaMode::FreqDependent: return "freq";
    case BetaMode::SppDriven: return "spp";
  }
  return "?";
}

constexpr std::string_view to_string(AlphaMode m) {
  switch (m) {
    case AlphaMode::CumulativeMean: return "cum_mean";
    case AlphaMode::Fixed: return "fixed";
    case AlphaMode::FreqDependent: return "freq";
    case AlphaMode::SppDriven: return "spp";
  }
  return "?";
}

/// Learned per-frequency control vectors (all of length F).
struct ControlVectors {
  std::vector<double> p_a;
  std::vector<double> p_b;
  std::vector<double> beta0;
  std::vector<double> alpha0_ss;
  std::vector<double> alpha0_nn;

  static ControlVectors zeros(std::size_t bins) {
    const std::vector<double> z(bins, 0.0);
    return {z, z, z, z, z};
  }

  std::size_t bins() const noexcept { return p_a.size(); }

  void validate() const {
    const std::size_t f = p_a.size();
    if (f == 0 || p_b.size() != f || beta0.size() != f || alpha0_ss.size() != f || alpha0_nn.size() != f) {
      throw Error(ErrorCode::ShapeMismatch, "control vectors must share one non-zero length");
    }
    for (const auto* v : {&p_a, &p_b, &beta0, &alpha0_ss, &alpha0_nn}) {
      if (!std::all_of(v->begin(), v->end(), [](double x) { return std::isfinite(x); })) {
        throw Error(ErrorCode::InvalidArgument, "control vectors must be finite");
      }
    }
  }

  /// beta0 must stay non-negative so that beta + trace(gamma) > 0.
  void clamp_beta0() {
    for (auto& b : beta0) b = std::max(b, 0.0);
  }
};

struct ControlParams {
  ControlVectors vectors;
  BetaMode beta_mode = BetaMode::SppDriven;
  double beta_value = 0.0;
  AlphaMode alpha_mode = AlphaMode::FreqDependent;
  double alpha_value = 0.1;

  std::size_t bins() const noexcept { return vectors.bins(); }

  void validate() const {
    vectors.validate();
    if (!(beta_value >= 0.0) || !std::isfinite(beta_value)) {
      throw Error(ErrorCode::InvalidConfig, "fixed beta must be finite and >= 0");
    }
    if (alpha_mode == AlphaMode::Fixed && !(alpha_value > 0.0 && alpha_value < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "fixed alpha must lie in (0, 1)");
    }
  }
};

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace detail {
inline void check_bins(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw Error(ErrorCode::BinCountMismatch,
                std::string(what) + ": expected " + std::to_string(expected) + " bins, got " + std::to_string(got));
  }
}
}  // namespace detail

/// p[w] = sigmoid(p_a[w] * |G[t, w, ref]| + p_b[w]).
inline std::vector<double> estimate_spp(const ControlParams& params, std::span<const double> g_ref_mag) {
  detail::check_bins(params.bins(), g_ref_mag.size(), "estimate_spp");
  std::vector<double> spp(g_ref_mag.size());
  for (std::size_t w = 0; w < spp.size(); ++w) {
    spp[w] = sigmoid(params.vectors.p_a[w] * g_ref_mag[w] + params.vectors.p_b[w]);
  }
  return spp;
}

inline std::vector<double> compute_beta(const ControlParams& params, std::span<const double> spp,
                                        std::size_t /*frame_index*/) {
  detail::check_bins(params.bins(), spp.size(), "compute_beta");
  std::vector<double> beta(spp.size());
  for (std::size_t w = 0; w < beta.size(); ++w) {
    switch (params.beta_mode) {
      case BetaMode::Fixed: beta[w] = params.beta_value; break;
      case BetaMode::FreqDependent: beta[w] = params.vectors.beta0[w]; break;
      case BetaMode::SppDriven: beta[w] = params.vectors.beta0[w] * (1.0 - spp[w]); break;
    }
    beta[w] = std::max(beta[w], 0.0);
  }
  return beta;
}

struct SmoothingFactors {
  std::vector<double> ss;
  std::vector<double> nn;
};

/// `frame_index` is the 1-based index of the frame about to be accumulated;
/// cumulative-mean mode uses 1/t so that the recursion is a running average.
inline SmoothingFactors compute_alphas(const ControlParams& params, std::span<const double> spp,
                                       std::size_t frame_index) {
  detail::check_bins(params.bins(), spp.size(), "compute_alphas");
  const std::size_t f = spp.size();
  SmoothingFactors out{std::vector<double>(f), std::vector<double>(f)};
  for (std::size_t w = 0; w < f; ++w) {
    double ss = 0.0;
    double nn = 0.0;
    switch (params.alpha_mode) {
      case AlphaMode::CumulativeMean: {
        if (frame_index == 0) throw Error(ErrorCode::InvalidArgument, "cumulative mean needs frame_index >= 1");
        ss = nn = 1.0 / static_cast<double>(frame_index);
        break;
      }
      case AlphaMode::Fixed: ss = nn = params.alpha_value; break;
      case AlphaMode::FreqDependent:
        ss = sigmoid(params.vectors.alpha0_ss[w]);
        nn = sigmoid(params.vectors.alpha0_nn[w]);
        break;
      case AlphaMode::SppDriven:
        ss = sigmoid(params.vectors.alpha0_ss[w]) * spp[w];
        nn = sigmoid(params.vectors.alpha0_nn[w]) * (1.0 - spp[w]);
        break;
    }
    out.ss[w] = std::clamp(ss, 0.0, 1.0);
    out.nn[w] = std::clamp(nn, 0.0, 1.0);
  }
  return out;
}

}  // namespace npmwf
