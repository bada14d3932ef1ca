#pragma once

// Causal streaming STFT. One call consumes `hop` new samples per channel and
// produces one spectral frame; synthesis mirrors it with overlap-add. Both
// sides use a periodic square-root Hann window, which at 50% overlap sums to
// one exactly, so no normalisation is applied after overlap-add.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"

namespace npmwf {

struct StftConfig {
  std::size_t window_len = 256;
  std::size_t hop = 128;
  std::size_t n_bins = 129;
  double sample_rate = 16000.0;

  void validate() const {
    const bool pow2 = window_len >= 2 && (window_len & (window_len - 1)) == 0;
    if (!pow2) throw Error(ErrorCode::InvalidConfig, "window_len must be a power of two");
    if (n_bins != window_len / 2 + 1) throw Error(ErrorCode::InvalidConfig, "n_bins must equal window_len/2 + 1");
    // sqrt-Hann pairs are only overlap-add exact at 50% overlap.
    if (hop * 2 != window_len) throw Error(ErrorCode::InvalidConfig, "hop must be window_len/2");
    if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample_rate must be positive");
  }

  /// Input-to-output delay of the analysis/synthesis chain, in samples.
  std::size_t latency_samples() const noexcept { return window_len - hop; }
  double frame_rate() const noexcept { return sample_rate / static_cast<double>(hop); }
};

inline std::vector<double> sqrt_hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

/// Iterative radix-2 complex FFT of a fixed power-of-two size.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), twiddles_(n / 2), bitrev_(n) {
    if (n < 2 || (n & (n - 1)) != 0) throw Error(ErrorCode::InvalidArgument, "FFT size must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<Complex> data) const { transform(data, false); }

  /// Unscaled inverse; callers divide by size().
  void inverse(std::span<Complex> data) const { transform(data, true); }

 private:
  void transform(std::span<Complex> data, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i) {
      if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          Complex w = twiddles_[k * stride];
          if (inverse) w = std::conj(w);
          const Complex a = data[start + k];
          const Complex b = data[start + k + half] * w;
          data[start + k] = a + b;
          data[start + k + half] = a - b;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> bitrev_;
};

/// Multichannel analysis stream: sliding input buffer per channel.
class StftAnalyzer {
 public:
  StftAnalyzer(StftConfig config, std::size_t channels)
      : config_(config), channels_(channels), fft_(config.window_len), window_(sqrt_hann_window(config.window_len)),
        buffer_(channels * config.window_len, 0.0), scratch_(config.window_len) {
    config_.validate();
    if (channels == 0) throw Error(ErrorCode::InvalidConfig, "analyzer needs at least one channel");
  }

  const StftConfig& config() const noexcept { return config_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t frame_index() const noexcept { return frame_index_; }
  std::span<const double> window() const noexcept { return window_; }

  void reset() {
    std::fill(buffer_.begin(), buffer_.end(), 0.0);
    frame_index_ = 0;
  }

  SpectralFrame analyze_frame(const PlanarView& block) {
    if (block.channels() != channels_) {
      throw Error(ErrorCode::ChannelMismatch, "expected " + std::to_string(channels_) + " channels, got " +
                                                  std::to_string(block.channels()));
    }
    if (block.frames() != config_.hop) {
      throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(config_.hop) + " samples per channel, got " +
                                                std::to_string(block.frames()));
    }
    const std::size_t n = config_.window_len;
    const std::size_t hop = config_.hop;
    SpectralFrame frame(channels_, config_.n_bins);
    for (std::size_t ch = 0; ch < channels_; ++ch) {
      double* buf = buffer_.data() + ch * n;
      std::copy(buf + hop, buf + n, buf);
      const auto incoming = block.channel(ch);
      std::copy(incoming.begin(), incoming.end(), buf + (n - hop));
      for (std::size_t i = 0; i < n; ++i) scratch_[i] = Complex(buf[i] * window_[i], 0.0);
      fft_.forward(scratch_);
      auto out = frame.channel(ch);
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(config_.n_bins), out.begin());
    }
    ++frame_index_;
    return frame;
  }

 private:
  StftConfig config_;
  std::size_t channels_;
  Fft fft_;
  std::vector<double> window_;
  std::vector<double> buffer_;
  std::vector<Complex> scratch_;
  std::size_t frame_index_ = 0;
};

/// Single-channel overlap-add synthesis stream.
class StftSynthesizer {
 public:
  explicit StftSynthesizer(StftConfig config)
      : config_(config), fft_(config.window_len), window_(sqrt_hann_window(config.window_len)),
        accumulator_(config.window_len, 0.0), scratch_(config.window_len) {
    config_.validate();
  }

  const StftConfig& config() const noexcept { return config_; }

  void reset() { std::fill(accumulator_.begin(), accumulator_.end(), 0.0); }

  /// Bins 0 and n_bins-1 are taken as real; the upper half of the spectrum is
  /// rebuilt by Hermitian symmetry.
  std::vector<double> synthesize_frame(std::span<const Complex> spectrum) {
    if (spectrum.size() != config_.n_bins) {
      throw Error(ErrorCode::BinCountMismatch, "expected " + std::to_string(config_.n_bins) + " bins, got " +
                                                   std::to_string(spectrum.size()));
    }
    const std::size_t n = config_.window_len;
    const std::size_t hop = config_.hop;
    const std::size_t last = config_.n_bins - 1;
    scratch_[0] = Complex(spectrum[0].real(), 0.0);
    scratch_[last] = Complex(spectrum[last].real(), 0.0);
    for (std::size_t k = 1; k < last; ++k) {
      scratch_[k] = spectrum[k];
      scratch_[n - k] = std::conj(spectrum[k]);
    }
    fft_.inverse(scratch_);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) accumulator_[i] += scratch_[i].real() * scale * window_[i];

    std::vector<double> out(accumulator_.begin(), accumulator_.begin() + static_cast<std::ptrdiff_t>(hop));
    std::copy(accumulator_.begin() + static_cast<std::ptrdiff_t>(hop), accumulator_.end(), accumulator_.begin());
    std::fill(accumulator_.end() - static_cast<std::ptrdiff_t>(hop), accumulator_.end(), 0.0);
    return out;
  }

 private:
  StftConfig config_;
  Fft fft_;
  std::vector<double> window_;
  std::vector<double> accumulator_;
  std::vector<Complex> scratch_;
};

}  // namespace npmwf
