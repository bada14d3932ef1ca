#pragma once

// Frame-streaming enhancement engine. Per hop:
//   analyze -> mask -> split into speech/noise estimates -> controls
//   -> covariance update -> PMWF per bin -> filter mixture -> synthesize.
// The filter at frame t uses statistics that already include frame t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "npmwf/controls.hpp"
#include "npmwf/covariance.hpp"
#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"
#include "npmwf/masknet.hpp"
#include "npmwf/pmwf.hpp"
#include "npmwf/stft.hpp"

namespace npmwf {

/// Y = S_hat + N_hat with S_hat = G * Y elementwise.
inline std::pair<SpectralFrame, SpectralFrame> separate(const MaskTensor& g, const SpectralFrame& y) {
  if (!g.same_shape(y)) throw Error(ErrorCode::ShapeMismatch, "mask and frame shapes differ");
  SpectralFrame s_hat(y.channels(), y.bins());
  SpectralFrame n_hat(y.channels(), y.bins());
  const auto gv = g.values();
  const auto yv = y.values();
  auto sv = s_hat.values();
  auto nv = n_hat.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    sv[i] = gv[i] * yv[i];
    nv[i] = yv[i] - sv[i];
  }
  return {std::move(s_hat), std::move(n_hat)};
}

struct OracleMaskOptions {
  double floor = 1e-8;
  double max_magnitude = 10.0;
};

/// G = S / Y per channel and bin; zero where |Y| < floor, and (if `clip`)
/// magnitude limited to max_magnitude.
inline MaskTensor oracle_mask(const SpectralFrame& y, const SpectralFrame& s_ref, const OracleMaskOptions& opts = {},
                              bool clip = true) {
  if (!y.same_shape(s_ref)) throw Error(ErrorCode::ShapeMismatch, "oracle mask: reference shape differs");
  MaskTensor g(y.channels(), y.bins());
  const auto yv = y.values();
  const auto sv = s_ref.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (std::abs(yv[i]) < opts.floor) {
      gv[i] = 0.0;
      continue;
    }
    Complex ratio = sv[i] / yv[i];
    const double mag = std::abs(ratio);
    if (clip && mag > opts.max_magnitude) ratio *= opts.max_magnitude / mag;
    gv[i] = ratio;
  }
  return g;
}

/// A mask for signal separation plus the magnitude that drives the SPP.
struct MaskEstimate {
  MaskTensor mask;
  std::vector<double> spp_magnitude;
};

class MaskProvider {
 public:
  virtual ~MaskProvider() = default;
  virtual bool needs_reference() const { return false; }
  virtual MaskEstimate estimate(const SpectralFrame& y, const SpectralFrame* clean_ref) = 0;
  virtual void reset() {}
};

inline std::vector<double> channel_magnitude(const ComplexGrid& g, std::size_t ch) {
  std::vector<double> out(g.bins());
  for (std::size_t f = 0; f < g.bins(); ++f) out[f] = std::abs(g(ch, f));
  return out;
}

class NeuralMaskProvider final : public MaskProvider {
 public:
  NeuralMaskProvider(std::shared_ptr<const ModelWeights> weights, std::size_t ref_channel)
      : weights_(std::move(weights)), state_(RecurrentState::zeros(weights_->hparams)), ref_channel_(ref_channel) {}

  MaskEstimate estimate(const SpectralFrame& y, const SpectralFrame*) override {
    MaskTensor g = mask_forward(*weights_, state_, y);
    auto mag = channel_magnitude(g, ref_channel_);
    return {std::move(g), std::move(mag)};
  }

  void reset() override { state_.reset(); }

 private:
  std::shared_ptr<const ModelWeights> weights_;
  RecurrentState state_;
  std::size_t ref_channel_;
};

class IdentityMaskProvider final : public MaskProvider {
 public:
  MaskEstimate estimate(const SpectralFrame& y, const SpectralFrame*) override {
    MaskTensor g(y.channels(), y.bins());
    g.fill(1.0);
    return {std::move(g), std::vector<double>(y.bins(), 1.0)};
  }
};

/// Needs the aligned clean multichannel reference. The SPP input is the
/// unclipped reference-channel ratio; only the separation mask is clipped.
class OracleMaskProvider final : public MaskProvider {
 public:
  OracleMaskProvider(std::size_t ref_channel, OracleMaskOptions opts) : ref_channel_(ref_channel), opts_(opts) {}

  bool needs_reference() const override { return true; }

  MaskEstimate estimate(const SpectralFrame& y, const SpectralFrame* clean_ref) override {
    if (clean_ref == nullptr) throw Error(ErrorCode::InvalidConfig, "oracle mask provider needs a clean reference");
    MaskTensor raw = oracle_mask(y, *clean_ref, opts_, false);
    auto mag = channel_magnitude(raw, ref_channel_);
    return {oracle_mask(y, *clean_ref, opts_, true), std::move(mag)};
  }

 private:
  std::size_t ref_channel_;
  OracleMaskOptions opts_;
};

/// Replays precomputed masks stored as NPW1 tensors "mask.real" and
/// "mask.imag" of shape [T, M, F]. Past the last stored frame the final mask
/// is repeated.
class FileMaskProvider final : public MaskProvider {
 public:
  FileMaskProvider(const TensorMap& tensors, std::size_t ref_channel) : ref_channel_(ref_channel) {
    const Tensor& re = require_tensor(tensors, "mask.real");
    if (re.dims.size() != 3 || re.dims[0] == 0) throw Error(ErrorCode::ShapeMismatch, "mask.real must be [T, M, F]");
    const Tensor& im = require_tensor(tensors, "mask.imag", re.dims);
    const std::size_t t = re.dims[0], m = re.dims[1], f = re.dims[2];
    for (std::size_t i = 0; i < t; ++i) {
      MaskTensor g(m, f);
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t b = 0; b < f; ++b) {
          const std::size_t idx = (i * m + k) * f + b;
          g(k, b) = Complex(re.data[idx], im.data[idx]);
        }
      frames_.push_back(std::move(g));
    }
  }

  std::size_t frame_count() const noexcept { return frames_.size(); }

  MaskEstimate estimate(const SpectralFrame& y, const SpectralFrame*) override {
    const MaskTensor& g = frames_[std::min(next_, frames_.size() - 1)];
    ++next_;
    if (!g.same_shape(y)) throw Error(ErrorCode::ShapeMismatch, "stored mask shape differs from the input frame");
    return {g, channel_magnitude(g, ref_channel_)};
  }

  void reset() override { next_ = 0; }

 private:
  std::vector<MaskTensor> frames_;
  std::size_t next_ = 0;
  std::size_t ref_channel_;
};

enum class MaskProviderKind { Neural, Oracle, File, Identity };

struct EngineConfig {
  StftConfig stft;
  ControlParams controls;
  double loading = 1e-4;
  std::size_t ref_channel = 0;
  double epsilon_init = 1e-6;
  OracleMaskOptions oracle;
  /// Diagnostic: ignore the PMWF and pass the reference channel through.
  bool passthrough = false;

  void validate(std::size_t channels) const {
    stft.validate();
    controls.validate();
    if (controls.bins() != stft.n_bins) throw Error(ErrorCode::InvalidConfig, "control vectors must have n_bins entries");
    if (ref_channel >= channels) throw Error(ErrorCode::InvalidConfig, "ref_channel out of range");
    if (!(loading >= 0.0)) throw Error(ErrorCode::InvalidConfig, "loading must be >= 0");
    if (!(epsilon_init > 0.0)) throw Error(ErrorCode::InvalidConfig, "epsilon_init must be > 0");
  }
};

/// Per-frame diagnostics, filled on request.
struct FrameTrace {
  std::vector<double> spp;
  std::vector<double> beta;
  SmoothingFactors alphas;
  std::size_t refreshed_bins = 0;
};

class Engine {
 public:
  Engine(EngineConfig config, std::size_t channels, std::unique_ptr<MaskProvider> provider)
      : config_(std::move(config)), channels_(channels), provider_(std::move(provider)),
        analyzer_(config_.stft, channels), reference_analyzer_(config_.stft, channels), synthesizer_(config_.stft),
        covariance_(init_covariance(channels, config_.stft.n_bins, config_.epsilon_init)),
        filters_(channels, config_.stft.n_bins) {
    if (!provider_) throw Error(ErrorCode::InvalidConfig, "engine needs a mask provider");
    config_.validate(channels);
  }

  const EngineConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t hop() const noexcept { return config_.stft.hop; }
  std::size_t frame_index() const noexcept { return frame_index_; }
  const CovarianceState& covariance() const noexcept { return covariance_; }
  const FilterBank& filters() const noexcept { return filters_; }
  bool needs_reference() const { return provider_->needs_reference(); }

  /// Consumes hop samples per channel (and the aligned clean reference when
  /// the provider needs it); returns hop enhanced mono samples.
  std::vector<double> process_frame(const PlanarView& mixture, const PlanarView* clean = nullptr,
                                    FrameTrace* trace = nullptr) {
    const SpectralFrame y = analyzer_.analyze_frame(mixture);
    std::optional<SpectralFrame> s_ref;
    if (provider_->needs_reference()) {
      if (clean == nullptr) throw Error(ErrorCode::InvalidConfig, "mask provider requires a clean reference stream");
      s_ref = reference_analyzer_.analyze_frame(*clean);
    }
    ++frame_index_;

    MaskEstimate est = provider_->estimate(y, s_ref ? &*s_ref : nullptr);
    auto [s_hat, n_hat] = separate(est.mask, y);

    const auto& params = config_.controls;
    const std::vector<double> spp = estimate_spp(params, est.spp_magnitude);
    const std::vector<double> beta = compute_beta(params, spp, frame_index_);
    const SmoothingFactors alphas = compute_alphas(params, spp, frame_index_);
    update_covariance(covariance_, s_hat, n_hat, alphas.ss, alphas.nn);

    const std::size_t bins = config_.stft.n_bins;
    std::vector<Complex> out_spectrum(bins);
    std::size_t refreshed = 0;
    for (std::size_t w = 0; w < bins; ++w) {
      const CVector yw = y.at_bin(w);
      if (config_.passthrough) {
        out_spectrum[w] = yw[config_.ref_channel];
        continue;
      }
      const FilterResult result = try_compute_filter(covariance_.phi_nn[w], covariance_.phi_ss[w], beta[w],
                                                     config_.ref_channel, config_.loading);
      if (filters_.update(w, result)) ++refreshed;
      out_spectrum[w] = apply_filter(filters_.filter(w), yw);
    }
    if (trace != nullptr) *trace = {spp, beta, alphas, refreshed};
    return synthesizer_.synthesize_frame(out_spectrum);
  }

  void reset() {
    analyzer_.reset();
    reference_analyzer_.reset();
    synthesizer_.reset();
    provider_->reset();
    covariance_ = init_covariance(channels_, config_.stft.n_bins, config_.epsilon_init);
    filters_ = FilterBank(channels_, config_.stft.n_bins);
    frame_index_ = 0;
  }

 private:
  EngineConfig config_;
  std::size_t channels_;
  std::unique_ptr<MaskProvider> provider_;
  StftAnalyzer analyzer_;
  StftAnalyzer reference_analyzer_;
  StftSynthesizer synthesizer_;
  CovarianceState covariance_;
  FilterBank filters_;
  std::size_t frame_index_ = 0;
};

/// Runs a whole planar buffer through the engine. The input is zero-padded by
/// the STFT latency (plus up to one hop) and the output is advanced by the
/// latency, so out[n] lines up with in[n] and has the same length.
inline std::vector<double> enhance_buffer(Engine& engine, const PlanarView& mixture,
                                          const PlanarView* clean = nullptr) {
  const std::size_t channels = mixture.channels();
  const std::size_t n = mixture.frames();
  const std::size_t hop = engine.hop();
  const std::size_t latency = engine.config().stft.latency_samples();
  if (clean != nullptr && (clean->channels() != channels || clean->frames() != n)) {
    throw Error(ErrorCode::LengthMismatch, "clean reference must match the mixture shape");
  }
  const std::size_t total = n + latency;
  const std::size_t frames = (total + hop - 1) / hop;

  std::vector<double> block(channels * hop);
  std::vector<double> ref_block(channels * hop);
  std::vector<double> output;
  output.reserve(frames * hop);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const auto src = mixture.channel(ch);
      for (std::size_t i = 0; i < hop; ++i) {
        const std::size_t idx = t * hop + i;
        block[ch * hop + i] = idx < n ? src[idx] : 0.0;
        if (clean != nullptr) ref_block[ch * hop + i] = idx < n ? clean->channel(ch)[idx] : 0.0;
      }
    }
    const PlanarView mix_view(block, channels);
    const PlanarView ref_view(ref_block, channels);
    const auto out = engine.process_frame(mix_view, clean != nullptr ? &ref_view : nullptr);
    output.insert(output.end(), out.begin(), out.end());
  }
  return {output.begin() + static_cast<std::ptrdiff_t>(latency),
          output.begin() + static_cast<std::ptrdiff_t>(latency + n)};
}

}  // namespace npmwf
