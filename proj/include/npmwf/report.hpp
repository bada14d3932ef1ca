#pragma once

// Analytic complexity accounting and learned-parameter export.
//
// Counting convention:
//   * Neural layers are counted in real multiply-accumulates (1 MAC each):
//     a dense C_out x C_in product is C_out*C_in MACs; biases are free; a GRU
//     cell step costs 3*h*(in + h) matrix MACs plus 3*h elementwise gate
//     MACs; PReLU, sigmoid and tanh are not counted.
//   * Applying the real mask to the complex spatial output costs 2 MACs per
//     channel and bin; the SPP/beta evaluation costs 2 per bin.
//   * The per-bin beamformer linear algebra is counted in complex
//     multiply-accumulate units: mask application M, two covariance outer
//     products 2*M^2, inversion M^3, gamma products 2*M^3, filtering M.
//     `mmacs` counts each complex unit once; `real_arith_mmacs` expands each
//     into 4 real MACs.
//   * Rates use frame_rate = sample_rate / hop. The STFT itself is excluded.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "npmwf/controls.hpp"
#include "npmwf/error.hpp"
#include "npmwf/masknet.hpp"
#include "npmwf/stft.hpp"

namespace npmwf {

struct ComplexityItem {
  std::string name;
  std::size_t params = 0;
  double real_macs_per_frame = 0.0;
  double complex_ops_per_frame = 0.0;
};

struct ComplexityReport {
  std::vector<ComplexityItem> items;
  double frame_rate = 0.0;

  std::size_t total_params() const {
    std::size_t p = 0;
    for (const auto& i : items) p += i.params;
    return p;
  }

  double real_macs_per_frame() const {
    double m = 0.0;
    for (const auto& i : items) m += i.real_macs_per_frame;
    return m;
  }

  double complex_ops_per_frame() const {
    double m = 0.0;
    for (const auto& i : items) m += i.complex_ops_per_frame;
    return m;
  }

  double mmacs() const { return (real_macs_per_frame() + complex_ops_per_frame()) * frame_rate / 1e6; }
  double real_arith_mmacs() const {
    return (real_macs_per_frame() + 4.0 * complex_ops_per_frame()) * frame_rate / 1e6;
  }
};

inline ComplexityReport complexity_report(const Hyperparameters& hp, const StftConfig& stft = {}) {
  hp.validate();
  ComplexityReport r;
  r.frame_rate = stft.frame_rate();
  const double f = static_cast<double>(hp.bins);
  const std::size_t c = hp.feature_channels();

  for (std::size_t l = 0; l < hp.spatial_layers; ++l) {
    const std::size_t out = (l + 1 == hp.spatial_layers) ? c + 1 : c;
    r.items.push_back({"spatial." + std::to_string(l), hp.bins * out * c + out, f * static_cast<double>(out * c), 0.0});
  }
  r.items.push_back({"encoder", hp.hidden * hp.bins + hp.hidden, static_cast<double>(hp.hidden * hp.bins), 0.0});
  const std::size_t hs = hp.split_size();
  const std::size_t cell_params = 3 * hs * hs * 2 + 3 * hs;
  const double cell_macs = static_cast<double>(3 * hs * (hs + hs) + 3 * hs);
  for (std::size_t l = 0; l < hp.temporal_layers; ++l) {
    r.items.push_back({"gru." + std::to_string(l), hp.splits * cell_params,
                       static_cast<double>(hp.splits) * cell_macs, 0.0});
  }
  r.items.push_back({"decoder", hp.bins * hp.hidden + hp.bins, static_cast<double>(hp.bins * hp.hidden), 0.0});
  r.items.push_back({"mask_combine", 0, 2.0 * static_cast<double>(hp.channels) * f, 0.0});
  r.items.push_back({"controls", 5 * hp.bins, 2.0 * f, 0.0});

  const double m = static_cast<double>(hp.channels);
  r.items.push_back({"pmwf.separate", 0, 0.0, f * m});
  r.items.push_back({"pmwf.covariance", 0, 0.0, f * 2.0 * m * m});
  r.items.push_back({"pmwf.inverse", 0, 0.0, f * m * m * m});
  r.items.push_back({"pmwf.gamma", 0, 0.0, f * 2.0 * m * m * m});
  r.items.push_back({"pmwf.apply", 0, 0.0, f * m});
  return r;
}

inline ComplexityReport complexity_report(const ModelWeights& w, const StftConfig& stft = {}) {
  return complexity_report(w.hparams, stft);
}

/// Per-bin learned controls as CSV:
/// frequency_bin,alpha_ss,alpha_nn,beta0,p_a,p_b (alphas after the sigmoid).
inline std::string params_csv(const ControlVectors& c) {
  std::string out = "frequency_bin,alpha_ss,alpha_nn,beta0,p_a,p_b\n";
  char line[256];
  for (std::size_t w = 0; w < c.bins(); ++w) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", w, sigmoid(c.alpha0_ss[w]),
                  sigmoid(c.alpha0_nn[w]), c.beta0[w], c.p_a[w], c.p_b[w]);
    out += line;
  }
  return out;
}

inline void dump_params(const ControlVectors& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create '" + path.string() + "'");
  out << params_csv(c);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

}  // namespace npmwf
