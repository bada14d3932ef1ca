#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "npmwf/error.hpp"
#include "npmwf/linalg.hpp"

namespace npmwf {


/// Dense channels x bins grid of complex values, channel-major.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(std::size_t channels, std::size_t bins)
      : channels_(channels), bins_(bins), values_(channels * bins) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t bins() const noexcept { return bins_; }

  Complex& operator()(std::size_t ch, std::size_t bin) noexcept { return values_[ch * bins_ + bin]; }
  const Complex& operator()(std::size_t ch, std::size_t bin) const noexcept {
    return values_[ch * bins_ + bin];
  }

  std::span<Complex> channel(std::size_t ch) noexcept { return {values_.data() + ch * bins_, bins_}; }
  std::span<const Complex> channel(std::size_t ch) const noexcept {
    return {values_.data() + ch * bins_, bins_};
  }

  std::span<Complex> values() noexcept { return values_; }
  std::span<const Complex> values() const noexcept { return values_; }

  /// All channels at one bin, as a spatial vector.
  CVector at_bin(std::size_t bin) const {
    CVector v(channels_);
    for (std::size_t ch = 0; ch < channels_; ++ch) v[ch] = (*this)(ch, bin);
    return v;
  }

  void fill(Complex value) { std::fill(values_.begin(), values_.end(), value); }

  bool same_shape(const ComplexGrid& other) const noexcept {
    return channels_ == other.channels_ && bins_ == other.bins_;
  }

  friend bool operator==(const ComplexGrid&, const ComplexGrid&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t bins_ = 0;
  std::vector<Complex> values_;
};

/// One STFT time slice Y[t] for all microphones.
struct SpectralFrame : ComplexGrid {
  using ComplexGrid::ComplexGrid;
};

/// Multichannel complex mask G for one frame.
struct MaskTensor : ComplexGrid {
  using ComplexGrid::ComplexGrid;
};

/// Non-owning view of planar (channel-major) real samples.
class PlanarView {
 public:
  PlanarView(std::span<const double> samples, std::size_t channels) : samples_(samples), channels_(channels) {
    if (channels == 0 || samples.size() % channels != 0) {
      throw Error(ErrorCode::ShapeMismatch,
                  std::to_string(samples.size()) + " samples do not split into " + std::to_string(channels) +
                      " channels");
    }
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t frames() const noexcept { return samples_.size() / channels_; }
  std::span<const double> channel(std::size_t ch) const noexcept {
    return samples_.subspan(ch * frames(), frames());
  }

 private:
  std::span<const double> samples_;
  std::size_t channels_;
};

}  // namespace npmwf
