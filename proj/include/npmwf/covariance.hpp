#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"
#include "npmwf/linalg.hpp"

namespace npmwf {

/// Speech and noise spatial covariance per frequency bin.
struct CovarianceState {
  std::size_t channels = 0;
  std::vector<CMatrix> phi_ss;
  std::vector<CMatrix> phi_nn;
  std::size_t frame_count = 0;

  std::size_t bins() const noexcept { return phi_ss.size(); }
};

inline CovarianceState init_covariance(std::size_t channels, std::size_t bins, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  CovarianceState state;
  state.channels = channels;
  state.phi_ss.assign(bins, CMatrix::scaled_identity(channels, epsilon));
  state.phi_nn = state.phi_ss;
  return state;
}

/// phi <- (1 - alpha) phi + alpha x x^H, followed by Hermitian symmetrisation.
inline void smooth_into(CMatrix& phi, const CVector& x, double alpha) {
  const std::size_t m = phi.dim();
  const double keep = 1.0 - alpha;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      phi(r, c) = keep * phi(r, c) + alpha * (x[r] * std::conj(x[c]));
    }
  }
  phi.make_hermitian();
}

inline void update_covariance_bin(CovarianceState& state, std::size_t bin, const CVector& s_hat, const CVector& n_hat,
                                  double alpha_ss, double alpha_nn) {
  smooth_into(state.phi_ss[bin], s_hat, alpha_ss);
  smooth_into(state.phi_nn[bin], n_hat, alpha_nn);
}

/// Advances every bin by one frame. The noise recursion blends with the
/// previous noise covariance.
inline void update_covariance(CovarianceState& state, const SpectralFrame& s_hat, const SpectralFrame& n_hat,
                              std::span<const double> alpha_ss, std::span<const double> alpha_nn) {
  const std::size_t f = state.bins();
  if (s_hat.channels() != state.channels || n_hat.channels() != state.channels) {
    throw Error(ErrorCode::ChannelMismatch, "covariance update channel count");
  }
  if (s_hat.bins() != f || n_hat.bins() != f || alpha_ss.size() != f || alpha_nn.size() != f) {
    throw Error(ErrorCode::BinCountMismatch, "covariance update expects " + std::to_string(f) + " bins");
  }
  for (std::size_t w = 0; w < f; ++w) {
    update_covariance_bin(state, w, s_hat.at_bin(w), n_hat.at_bin(w), alpha_ss[w], alpha_nn[w]);
  }
  ++state.frame_count;
}

}  // namespace npmwf
