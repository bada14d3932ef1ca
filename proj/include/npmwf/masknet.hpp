#pragma once

// Forward pass of the mask estimator.
//
// Spatial block: per frequency, the 2M real features [Re y0, Im y0, Re y1, ...]
// go through L per-frequency matrices, each followed by a per-channel PReLU.
// The last matrix has one extra output row whose activation feeds the
// temporal block.
//
// Temporal block: encoder Linear(F -> H), L SplitGRU layers with R splits of
// H/R units each, decoder Linear(H -> F) giving a real mask m[f]. The complex
// mask is G[k][f] = m[f] * (spatial[2k][f] + i spatial[2k+1][f]).
//
// Weight tensor names (NPW1), with C = 2M:
//   hparams                      [6]  M, F, H, R, spatial layers, temporal layers
//   spatial.{l}.weight           [F, C_out, C_in]   C_out = C (+1 on the last layer)
//   spatial.{l}.prelu            [C_out]
//   encoder.weight / .bias       [H, F] / [H]
//   gru.{l}.split{r}.w_ih        [3*H/R, H/R]   gate rows ordered r, z, n
//   gru.{l}.split{r}.w_hh        [3*H/R, H/R]
//   gru.{l}.split{r}.bias        [3*H/R]
//   decoder.weight / .bias       [F, H] / [F]
//   controls.p_a, controls.p_b, controls.beta0,
//   controls.alpha0_ss, controls.alpha0_nn   [F]

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "npmwf/controls.hpp"
#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"
#include "npmwf/npw1.hpp"

namespace npmwf {

struct Hyperparameters {
  std::size_t channels = 5;         // M
  std::size_t bins = 129;           // F
  std::size_t hidden = 96;          // H
  std::size_t splits = 2;           // R
  std::size_t spatial_layers = 4;
  std::size_t temporal_layers = 3;

  std::size_t feature_channels() const noexcept { return 2 * channels; }
  std::size_t split_size() const noexcept { return hidden / splits; }

  void validate() const {
    if (channels == 0 || channels > kMaxChannels) throw Error(ErrorCode::ShapeMismatch, "hparams: channel count");
    if (bins < 2) throw Error(ErrorCode::ShapeMismatch, "hparams: bin count");
    if (hidden == 0 || splits == 0) throw Error(ErrorCode::ShapeMismatch, "hparams: hidden/splits must be positive");
    if (hidden % splits != 0) {
      throw Error(ErrorCode::ShapeMismatch, "hparams: hidden size " + std::to_string(hidden) +
                                                " not divisible by splits " + std::to_string(splits));
    }
    if (spatial_layers == 0 || temporal_layers == 0) throw Error(ErrorCode::ShapeMismatch, "hparams: layer counts");
  }

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct SpatialLayer {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::vector<float> weight;  // [F][out][in]
  std::vector<float> prelu;   // [out]
};

struct LinearLayer {
  std::size_t out_features = 0;
  std::size_t in_features = 0;
  std::vector<float> weight;  // [out][in]
  std::vector<float> bias;    // [out]
};

/// Standard GRU cell with one bias per gate:
///   r = sigmoid(W_ir x + W_hr h + b_r)
///   z = sigmoid(W_iz x + W_hz h + b_z)
///   n = tanh(W_in x + b_n + r * (W_hn h))
///   h' = (1 - z) * n + z * h
struct GruCell {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<float> w_ih;  // [3*hidden][input]
  std::vector<float> w_hh;  // [3*hidden][hidden]
  std::vector<float> bias;  // [3*hidden]
};

struct SplitGruLayer {
  std::vector<GruCell> splits;

  std::size_t width() const noexcept {
    std::size_t w = 0;
    for (const auto& s : splits) w += s.hidden_size;
    return w;
  }
};

struct ModelWeights {
  Hyperparameters hparams;
  std::vector<SpatialLayer> spatial;
  LinearLayer encoder;
  std::vector<SplitGruLayer> gru;
  LinearLayer decoder;
  ControlVectors controls;
};

// ---------------------------------------------------------------------------
// Loading / saving

namespace detail {

inline std::vector<float> tensor_values(const TensorMap& t, const std::string& name,
                                        const std::vector<std::uint32_t>& dims) {
  return require_tensor(t, name, dims).data;
}

inline std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

inline std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

}  // namespace detail

inline Hyperparameters read_hyperparameters(const TensorMap& tensors) {
  const Tensor& hp = require_tensor(tensors, "hparams", {6});
  auto as_count = [&](std::size_t i) -> std::size_t {
    const float v = hp.data[i];
    if (!(v >= 0.0f) || v != std::floor(v)) throw Error(ErrorCode::ShapeMismatch, "hparams entries must be counts");
    return static_cast<std::size_t>(v);
  };
  Hyperparameters h{as_count(0), as_count(1), as_count(2), as_count(3), as_count(4), as_count(5)};
  h.validate();
  return h;
}

/// Reads only the control vectors, for non-neural mask providers.
inline ControlVectors load_control_vectors(const TensorMap& tensors) {
  const Tensor& pa = require_tensor(tensors, "controls.p_a");
  if (pa.dims.size() != 1) throw Error(ErrorCode::ShapeMismatch, "controls.p_a must be a vector");
  const std::vector<std::uint32_t> dims = pa.dims;
  ControlVectors c;
  c.p_a = detail::to_double(detail::tensor_values(tensors, "controls.p_a", dims));
  c.p_b = detail::to_double(detail::tensor_values(tensors, "controls.p_b", dims));
  c.beta0 = detail::to_double(detail::tensor_values(tensors, "controls.beta0", dims));
  c.alpha0_ss = detail::to_double(detail::tensor_values(tensors, "controls.alpha0_ss", dims));
  c.alpha0_nn = detail::to_double(detail::tensor_values(tensors, "controls.alpha0_nn", dims));
  c.validate();
  c.clamp_beta0();
  return c;
}

inline ModelWeights load_weights(const TensorMap& tensors) {
  using detail::u32;
  ModelWeights w;
  w.hparams = read_hyperparameters(tensors);
  const auto& hp = w.hparams;
  const std::size_t c = hp.feature_channels();

  for (std::size_t l = 0; l < hp.spatial_layers; ++l) {
    SpatialLayer layer;
    layer.in_channels = c;
    layer.out_channels = (l + 1 == hp.spatial_layers) ? c + 1 : c;
    const std::string prefix = "spatial." + std::to_string(l);
    layer.weight =
        detail::tensor_values(tensors, prefix + ".weight", {u32(hp.bins), u32(layer.out_channels), u32(c)});
    layer.prelu = detail::tensor_values(tensors, prefix + ".prelu", {u32(layer.out_channels)});
    w.spatial.push_back(std::move(layer));
  }

  w.encoder = {hp.hidden, hp.bins, detail::tensor_values(tensors, "encoder.weight", {u32(hp.hidden), u32(hp.bins)}),
               detail::tensor_values(tensors, "encoder.bias", {u32(hp.hidden)})};

  const std::size_t hs = hp.split_size();
  for (std::size_t l = 0; l < hp.temporal_layers; ++l) {
    SplitGruLayer layer;
    for (std::size_t r = 0; r < hp.splits; ++r) {
      const std::string prefix = "gru." + std::to_string(l) + ".split" + std::to_string(r);
      GruCell cell;
      cell.input_size = hs;
      cell.hidden_size = hs;
      cell.w_ih = detail::tensor_values(tensors, prefix + ".w_ih", {u32(3 * hs), u32(hs)});
      cell.w_hh = detail::tensor_values(tensors, prefix + ".w_hh", {u32(3 * hs), u32(hs)});
      cell.bias = detail::tensor_values(tensors, prefix + ".bias", {u32(3 * hs)});
      layer.splits.push_back(std::move(cell));
    }
    w.gru.push_back(std::move(layer));
  }

  w.decoder = {hp.bins, hp.hidden, detail::tensor_values(tensors, "decoder.weight", {u32(hp.bins), u32(hp.hidden)}),
               detail::tensor_values(tensors, "decoder.bias", {u32(hp.bins)})};

  w.controls = load_control_vectors(tensors);
  if (w.controls.bins() != hp.bins) throw Error(ErrorCode::ShapeMismatch, "control vectors must have F entries");

  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  bool ok = finite(w.encoder.weight) && finite(w.encoder.bias) && finite(w.decoder.weight) && finite(w.decoder.bias);
  for (const auto& s : w.spatial) ok = ok && finite(s.weight) && finite(s.prelu);
  for (const auto& layer : w.gru)
    for (const auto& cell : layer.splits) ok = ok && finite(cell.w_ih) && finite(cell.w_hh) && finite(cell.bias);
  if (!ok) throw Error(ErrorCode::InvalidArgument, "weights contain non-finite values");
  return w;
}

inline ModelWeights load_weights(std::span<const std::byte> container_bytes) {
  return load_weights(read_npw1(container_bytes));
}

inline TensorMap to_tensors(const ModelWeights& w) {
  using detail::u32;
  const auto& hp = w.hparams;
  TensorMap t;
  t["hparams"] = Tensor({6}, {static_cast<float>(hp.channels), static_cast<float>(hp.bins),
                              static_cast<float>(hp.hidden), static_cast<float>(hp.splits),
                              static_cast<float>(hp.spatial_layers), static_cast<float>(hp.temporal_layers)});
  for (std::size_t l = 0; l < w.spatial.size(); ++l) {
    const auto& s = w.spatial[l];
    const std::string prefix = "spatial." + std::to_string(l);
    t[prefix + ".weight"] = Tensor({u32(hp.bins), u32(s.out_channels), u32(s.in_channels)}, s.weight);
    t[prefix + ".prelu"] = Tensor({u32(s.out_channels)}, s.prelu);
  }
  t["encoder.weight"] = Tensor({u32(w.encoder.out_features), u32(w.encoder.in_features)}, w.encoder.weight);
  t["encoder.bias"] = Tensor({u32(w.encoder.out_features)}, w.encoder.bias);
  for (std::size_t l = 0; l < w.gru.size(); ++l) {
    for (std::size_t r = 0; r < w.gru[l].splits.size(); ++r) {
      const auto& cell = w.gru[l].splits[r];
      const std::string prefix = "gru." + std::to_string(l) + ".split" + std::to_string(r);
      t[prefix + ".w_ih"] = Tensor({u32(3 * cell.hidden_size), u32(cell.input_size)}, cell.w_ih);
      t[prefix + ".w_hh"] = Tensor({u32(3 * cell.hidden_size), u32(cell.hidden_size)}, cell.w_hh);
      t[prefix + ".bias"] = Tensor({u32(3 * cell.hidden_size)}, cell.bias);
    }
  }
  t["decoder.weight"] = Tensor({u32(w.decoder.out_features), u32(w.decoder.in_features)}, w.decoder.weight);
  t["decoder.bias"] = Tensor({u32(w.decoder.out_features)}, w.decoder.bias);
  auto as_float = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
  const std::uint32_t f = u32(w.controls.bins());
  t["controls.p_a"] = Tensor({f}, as_float(w.controls.p_a));
  t["controls.p_b"] = Tensor({f}, as_float(w.controls.p_b));
  t["controls.beta0"] = Tensor({f}, as_float(w.controls.beta0));
  t["controls.alpha0_ss"] = Tensor({f}, as_float(w.controls.alpha0_ss));
  t["controls.alpha0_nn"] = Tensor({f}, as_float(w.controls.alpha0_nn));
  return t;
}

inline std::vector<std::byte> save_weights(const ModelWeights& w) { return write_npw1(to_tensors(w)); }

/// All-zero weights of the right shapes; useful as a starting point for
/// hand-built networks.
inline ModelWeights zero_weights(const Hyperparameters& hp) {
  hp.validate();
  ModelWeights w;
  w.hparams = hp;
  const std::size_t c = hp.feature_channels();
  for (std::size_t l = 0; l < hp.spatial_layers; ++l) {
    SpatialLayer s;
    s.in_channels = c;
    s.out_channels = (l + 1 == hp.spatial_layers) ? c + 1 : c;
    s.weight.assign(hp.bins * s.out_channels * s.in_channels, 0.0f);
    s.prelu.assign(s.out_channels, 0.0f);
    w.spatial.push_back(std::move(s));
  }
  w.encoder = {hp.hidden, hp.bins, std::vector<float>(hp.hidden * hp.bins), std::vector<float>(hp.hidden)};
  const std::size_t hs = hp.split_size();
  for (std::size_t l = 0; l < hp.temporal_layers; ++l) {
    SplitGruLayer layer;
    for (std::size_t r = 0; r < hp.splits; ++r) {
      layer.splits.push_back(
          {hs, hs, std::vector<float>(3 * hs * hs), std::vector<float>(3 * hs * hs), std::vector<float>(3 * hs)});
    }
    w.gru.push_back(std::move(layer));
  }
  w.decoder = {hp.bins, hp.hidden, std::vector<float>(hp.bins * hp.hidden), std::vector<float>(hp.bins)};
  w.controls = ControlVectors::zeros(hp.bins);
  return w;
}

// ---------------------------------------------------------------------------
// Forward pass

struct SpatialOutput {
  std::size_t channels = 0;          // 2M
  std::size_t bins = 0;
  std::vector<double> features;      // [channels][bins]
  std::vector<double> temporal_in;   // [bins]

  double feature(std::size_t ch, std::size_t bin) const noexcept { return features[ch * bins + bin]; }
};

/// Dot product of float weights with double activations. Four partial sums
/// break the add dependency chain; the summation order is fixed.
inline double dot_weights(const float* row, const double* v, std::size_t n) noexcept {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += static_cast<double>(row[i]) * v[i];
    a1 += static_cast<double>(row[i + 1]) * v[i + 1];
    a2 += static_cast<double>(row[i + 2]) * v[i + 2];
    a3 += static_cast<double>(row[i + 3]) * v[i + 3];
  }
  for (; i < n; ++i) a0 += static_cast<double>(row[i]) * v[i];
  return (a0 + a1) + (a2 + a3);
}

inline SpatialOutput spatial_forward(const ModelWeights& w, const SpectralFrame& frame) {
  const auto& hp = w.hparams;
  if (frame.channels() != hp.channels) {
    throw Error(ErrorCode::ChannelMismatch, "frame has " + std::to_string(frame.channels()) + " channels, model expects " +
                                                std::to_string(hp.channels));
  }
  if (frame.bins() != hp.bins) throw Error(ErrorCode::BinCountMismatch, "frame bin count differs from model");

  const std::size_t c = hp.feature_channels();
  SpatialOutput out{c, hp.bins, std::vector<double>(c * hp.bins), std::vector<double>(hp.bins)};
  std::vector<double> x(c + 1);
  std::vector<double> y(c + 1);
  for (std::size_t f = 0; f < hp.bins; ++f) {
    for (std::size_t k = 0; k < hp.channels; ++k) {
      x[2 * k] = frame(k, f).real();
      x[2 * k + 1] = frame(k, f).imag();
    }
    std::size_t width = c;
    for (const auto& layer : w.spatial) {
      const float* mat = layer.weight.data() + f * layer.out_channels * layer.in_channels;
      for (std::size_t o = 0; o < layer.out_channels; ++o) {
        const double acc = dot_weights(mat + o * layer.in_channels, x.data(), layer.in_channels);
        y[o] = acc >= 0.0 ? acc : static_cast<double>(layer.prelu[o]) * acc;
      }
      width = layer.out_channels;
      std::copy(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(width), x.begin());
    }
    for (std::size_t ch = 0; ch < c; ++ch) out.features[ch * hp.bins + f] = x[ch];
    out.temporal_in[f] = x[c];
  }
  return out;
}

inline void linear_forward(const LinearLayer& layer, std::span<const double> in, std::span<double> out) {
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    out[o] = layer.bias[o] + dot_weights(layer.weight.data() + o * layer.in_features, in.data(), layer.in_features);
  }
}

/// Advances one GRU cell in place.
inline void gru_cell_step(const GruCell& cell, std::span<double> hidden, std::span<const double> input) {
  const std::size_t h = cell.hidden_size;
  const std::size_t in = cell.input_size;
  auto dot = [](const float* row, std::span<const double> v) { return dot_weights(row, v.data(), v.size()); };
  std::vector<double> next(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double r = sigmoid(dot(&cell.w_ih[j * in], input) + dot(&cell.w_hh[j * h], hidden) + cell.bias[j]);
    const double z = sigmoid(dot(&cell.w_ih[(h + j) * in], input) + dot(&cell.w_hh[(h + j) * h], hidden) +
                             cell.bias[h + j]);
    const double n = std::tanh(dot(&cell.w_ih[(2 * h + j) * in], input) + cell.bias[2 * h + j] +
                               r * dot(&cell.w_hh[(2 * h + j) * h], hidden));
    next[j] = (1.0 - z) * n + z * hidden[j];
  }
  std::copy(next.begin(), next.end(), hidden.begin());
}

/// Position of concatenated feature k after the inter-split interleave.
constexpr std::size_t interleaved_position(std::size_t k, std::size_t splits, std::size_t split_size) noexcept {
  return (k % splits) * split_size + k / splits;
}

/// One SplitGRU layer step. `state` holds the R hidden vectors back to back;
/// `output` receives the concatenated hidden vectors after the stride-R
/// interleave, so each downstream split sees every upstream GRU.
inline void split_gru_step(const SplitGruLayer& layer, std::span<double> state, std::span<const double> input,
                           std::span<double> output) {
  const std::size_t width = layer.width();
  if (state.size() != width || input.size() != width || output.size() != width) {
    throw Error(ErrorCode::ShapeMismatch, "split_gru_step: vector sizes must equal the layer width");
  }
  const std::size_t splits = layer.splits.size();
  std::size_t offset = 0;
  for (const auto& cell : layer.splits) {
    gru_cell_step(cell, state.subspan(offset, cell.hidden_size), input.subspan(offset, cell.input_size));
    offset += cell.hidden_size;
  }
  const std::size_t split_size = width / splits;
  for (std::size_t k = 0; k < width; ++k) output[interleaved_position(k, splits, split_size)] = state[k];
}

/// Hidden vectors of every SplitGRU layer; zero at stream start.
struct RecurrentState {
  std::vector<std::vector<double>> layers;

  static RecurrentState zeros(const Hyperparameters& hp) {
    return {std::vector<std::vector<double>>(hp.temporal_layers, std::vector<double>(hp.hidden, 0.0))};
  }

  void reset() {
    for (auto& l : layers) std::fill(l.begin(), l.end(), 0.0);
  }

  friend bool operator==(const RecurrentState&, const RecurrentState&) = default;
};

/// Real mask from the temporal block; advances `state` by one frame.
inline std::vector<double> temporal_forward(const ModelWeights& w, RecurrentState& state,
                                            std::span<const double> temporal_in) {
  const auto& hp = w.hparams;
  if (state.layers.size() != hp.temporal_layers) throw Error(ErrorCode::ShapeMismatch, "recurrent state layer count");
  std::vector<double> a(hp.hidden);
  std::vector<double> b(hp.hidden);
  linear_forward(w.encoder, temporal_in, a);
  for (std::size_t l = 0; l < hp.temporal_layers; ++l) {
    split_gru_step(w.gru[l], state.layers[l], a, b);
    std::swap(a, b);
  }
  std::vector<double> mask(hp.bins);
  linear_forward(w.decoder, a, mask);
  return mask;
}

inline MaskTensor mask_forward(const ModelWeights& w, RecurrentState& state, const SpectralFrame& frame) {
  const SpatialOutput spatial = spatial_forward(w, frame);
  const std::vector<double> real_mask = temporal_forward(w, state, spatial.temporal_in);
  const auto& hp = w.hparams;
  MaskTensor g(hp.channels, hp.bins);
  for (std::size_t k = 0; k < hp.channels; ++k) {
    for (std::size_t f = 0; f < hp.bins; ++f) {
      g(k, f) = real_mask[f] * Complex(spatial.feature(2 * k, f), spatial.feature(2 * k + 1, f));
    }
  }
  return g;
}

}  // namespace npmwf
