#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "npmwf/masknet.hpp"
#include "test_util.hpp"

using namespace npmwf;
using npmwf::testing::Rng;

namespace {

void randomize(std::vector<float>& v, Rng& rng, double scale = 0.3) {
  for (auto& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
}

ModelWeights random_weights(const Hyperparameters& hp, std::uint64_t seed) {
  Rng rng(seed);
  ModelWeights w = zero_weights(hp);
  for (auto& s : w.spatial) {
    randomize(s.weight, rng);
    randomize(s.prelu, rng);
  }
  randomize(w.encoder.weight, rng);
  randomize(w.encoder.bias, rng);
  for (auto& layer : w.gru)
    for (auto& cell : layer.splits) {
      randomize(cell.w_ih, rng);
      randomize(cell.w_hh, rng);
      randomize(cell.bias, rng);
    }
  randomize(w.decoder.weight, rng);
  randomize(w.decoder.bias, rng);
  return w;
}

SpectralFrame random_frame(Rng& rng, std::size_t m, std::size_t f) {
  SpectralFrame y(m, f);
  for (auto& v : y.values()) v = rng.complex_normal();
  return y;
}

double rel_error(std::span<const double> got, std::span<const float> want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num = std::max(num, std::abs(got[i] - static_cast<double>(want[i])));
    den = std::max(den, std::abs(static_cast<double>(want[i])));
  }
  return num / std::max(den, 1e-30);
}

struct GoldenCase {
  const char* weights;
  const char* golden;
};

}  // namespace

TEST_CASE("weights round trip through NPW1", "[masknet]") {
  const ModelWeights w = random_weights({3, 17, 12, 2, 4, 3}, 5);
  const auto bytes = save_weights(w);
  const ModelWeights back = load_weights(bytes);
  CHECK(save_weights(back) == bytes);
  CHECK(back.hparams.hidden == 12);
  CHECK(back.spatial[3].out_channels == 7);
  CHECK(std::memcmp(back.encoder.weight.data(), w.encoder.weight.data(), 4 * w.encoder.weight.size()) == 0);
}

TEST_CASE("loading reports missing tensors and bad shapes", "[masknet]") {
  const Hyperparameters hp{3, 17, 12, 2, 4, 3};
  TensorMap t = to_tensors(random_weights(hp, 6));

  SECTION("missing decoder bias") {
    t.erase("decoder.bias");
    try {
      load_weights(t);
      FAIL("expected MissingTensor");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingTensor);
    }
  }
  SECTION("hidden size not divisible by splits") {
    // 96 splits evenly by 3, so use 5 splits to exercise the check.
    t.at("hparams") = Tensor({6}, {3.0f, 17.0f, 96.0f, 5.0f, 4.0f, 3.0f});
    try {
      load_weights(t);
      FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
  }
  SECTION("wrong encoder shape") {
    t.at("encoder.weight") = Tensor({12, 16}, std::vector<float>(12 * 16));
    CHECK_THROWS_AS(load_weights(t), Error);
  }
  SECTION("non-finite values") {
    t.at("decoder.bias").data[0] = std::nanf("");
    CHECK_THROWS_AS(load_weights(t), Error);
  }
  SECTION("negative beta0 is clamped") {
    t.at("controls.beta0").data[0] = -3.0f;
    CHECK(load_weights(t).controls.beta0[0] == 0.0);
  }
}

TEST_CASE("zero frame with biasless weights gives zero outputs", "[masknet]") {
  const Hyperparameters hp;
  ModelWeights w = random_weights(hp, 7);
  std::fill(w.encoder.bias.begin(), w.encoder.bias.end(), 0.0f);
  std::fill(w.decoder.bias.begin(), w.decoder.bias.end(), 0.0f);
  for (auto& l : w.gru)
    for (auto& c : l.splits) std::fill(c.bias.begin(), c.bias.end(), 0.0f);
  const SpectralFrame zero(hp.channels, hp.bins);
  const SpatialOutput s = spatial_forward(w, zero);
  for (double v : s.features) CHECK(v == 0.0);
  for (double v : s.temporal_in) CHECK(v == 0.0);
  RecurrentState st = RecurrentState::zeros(hp);
  const MaskTensor g = mask_forward(w, st, zero);
  for (const auto& v : g.values()) CHECK(v == Complex{});
}

TEST_CASE("identity spatial path reproduces the input features", "[masknet]") {
  const Hyperparameters hp;
  ModelWeights w = zero_weights(hp);
  const std::size_t c = hp.feature_channels();
  for (auto& layer : w.spatial) {
    for (std::size_t f = 0; f < hp.bins; ++f)
      for (std::size_t i = 0; i < c; ++i) layer.weight[(f * layer.out_channels + i) * layer.in_channels + i] = 1.0f;
    std::fill(layer.prelu.begin(), layer.prelu.end(), 1.0f);
  }
  Rng rng(8);
  const SpectralFrame y = random_frame(rng, hp.channels, hp.bins);
  const SpatialOutput s = spatial_forward(w, y);
  for (std::size_t k = 0; k < hp.channels; ++k)
    for (std::size_t f = 0; f < hp.bins; ++f) {
      CHECK(s.feature(2 * k, f) == y(k, f).real());
      CHECK(s.feature(2 * k + 1, f) == y(k, f).imag());
    }

  SECTION("unit real mask from the decoder bias gives G = Y") {
    std::fill(w.decoder.bias.begin(), w.decoder.bias.end(), 1.0f);
    RecurrentState st = RecurrentState::zeros(hp);
    CHECK(mask_forward(w, st, y) == static_cast<const ComplexGrid&>(y));
  }
}

TEST_CASE("all-zero GRU weights keep a zero state", "[masknet]") {
  const Hyperparameters hp{2, 9, 12, 3, 4, 3};
  ModelWeights w = zero_weights(hp);
  std::vector<double> state(12, 0.0), out(12, 1.0), in(12);
  Rng rng(9);
  for (auto& v : in) v = rng.normal();
  split_gru_step(w.gru[0], state, in, out);
  for (double v : state) CHECK(v == 0.0);
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("interleave routes feature k to (k mod R)*(H/R) + k/R", "[masknet]") {
  CHECK(interleaved_position(0, 2, 48) == 0);
  CHECK(interleaved_position(1, 2, 48) == 48);
  CHECK(interleaved_position(2, 2, 48) == 1);
  CHECK(interleaved_position(95, 2, 48) == 95);
  CHECK(interleaved_position(4, 3, 4) == 5);
  // R=1 leaves the order unchanged.
  for (std::size_t k = 0; k < 10; ++k) CHECK(interleaved_position(k, 1, 10) == k);
  // It is a permutation.
  std::vector<int> seen(12, 0);
  for (std::size_t k = 0; k < 12; ++k) ++seen[interleaved_position(k, 3, 4)];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("SplitGRU with one split equals a dense GRU over 50 steps", "[masknet]") {
  const std::size_t h = 16;
  const ModelWeights w = random_weights({2, 9, h, 1, 4, 1}, 10);
  const GruCell& cell = w.gru[0].splits[0];
  testing::DenseGru dense{h, {cell.w_ih.begin(), cell.w_ih.end()}, {cell.w_hh.begin(), cell.w_hh.end()},
                 {cell.bias.begin(), cell.bias.end()}};

  Rng rng(11);
  std::vector<double> state(h, 0.0), out(h), ref(h, 0.0), x(h);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    split_gru_step(w.gru[0], state, x, out);
    ref = dense.step(ref, x);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      num = std::max(num, std::abs(out[j] - ref[j]));
      den = std::max(den, std::abs(ref[j]));
    }
    worst = std::max(worst, num / den);
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("forward pass matches the committed golden files", "[masknet][golden]") {
  const auto c = GENERATE(GoldenCase{"weights_small_r2.npw1", "golden_small_r2.npw1"},
                          GoldenCase{"weights_small_r3.npw1", "golden_small_r3.npw1"},
                          GoldenCase{"weights_full.npw1", "golden_full.npw1"});
  INFO(c.golden);
  const ModelWeights w = load_weights(load_npw1_file(testing::fixture_path(c.weights)));
  const TensorMap g = load_npw1_file(testing::fixture_path(c.golden));
  const auto& hp = w.hparams;
  const double tol = require_tensor(g, "meta.tolerance").data[0];
  REQUIRE(tol == Catch::Approx(1e-4));

  const Tensor& in_re = require_tensor(g, "input.real");
  const Tensor& in_im = require_tensor(g, "input.imag");
  const std::size_t frames = in_re.dims[0];
  const std::size_t mf = hp.channels * hp.bins;
  RecurrentState st = RecurrentState::zeros(hp);
  for (std::size_t t = 0; t < frames; ++t) {
    SpectralFrame y(hp.channels, hp.bins);
    for (std::size_t i = 0; i < mf; ++i) y.values()[i] = Complex(in_re.data[t * mf + i], in_im.data[t * mf + i]);

    const SpatialOutput s = spatial_forward(w, y);
    const std::size_t cf = hp.feature_channels() * hp.bins;
    CHECK(rel_error(s.features, std::span(require_tensor(g, "spatial.features").data).subspan(t * cf, cf)) <= tol);
    CHECK(rel_error(s.temporal_in, std::span(require_tensor(g, "spatial.temporal_in").data).subspan(t * hp.bins, hp.bins)) <=
          tol);

    const MaskTensor m = mask_forward(w, st, y);
    std::vector<double> re(mf), im(mf);
    for (std::size_t i = 0; i < mf; ++i) {
      re[i] = m.values()[i].real();
      im[i] = m.values()[i].imag();
    }
    CHECK(rel_error(re, std::span(require_tensor(g, "mask.real").data).subspan(t * mf, mf)) <= tol);
    CHECK(rel_error(im, std::span(require_tensor(g, "mask.imag").data).subspan(t * mf, mf)) <= tol);
  }

  // Two SplitGRU steps of layer 0 from a zero state.
  const Tensor& gin = require_tensor(g, "gru0.input");
  std::vector<double> state(hp.hidden, 0.0), out(hp.hidden), x(hp.hidden);
  for (std::size_t step = 0; step < 2; ++step) {
    for (std::size_t j = 0; j < hp.hidden; ++j) x[j] = gin.data[step * hp.hidden + j];
    split_gru_step(w.gru[0], state, x, out);
    CHECK(rel_error(out, std::span(require_tensor(g, "gru0.output").data).subspan(step * hp.hidden, hp.hidden)) <= tol);
    CHECK(rel_error(state, std::span(require_tensor(g, "gru0.state").data).subspan(step * hp.hidden, hp.hidden)) <= tol);
  }
}

TEST_CASE("mask at frame t ignores later frames", "[masknet][property]") {
  const Hyperparameters hp{3, 17, 12, 2, 4, 3};
  const ModelWeights w = random_weights(hp, 12);
  Rng rng(13);
  std::vector<SpectralFrame> stream;
  for (int t = 0; t < 12; ++t) stream.push_back(random_frame(rng, hp.channels, hp.bins));

  std::vector<MaskTensor> full;
  RecurrentState st = RecurrentState::zeros(hp);
  for (const auto& y : stream) full.push_back(mask_forward(w, st, y));

  for (std::size_t cut : {std::size_t{1}, std::size_t{5}, std::size_t{11}}) {
    auto altered = stream;
    for (std::size_t t = cut; t < altered.size(); ++t) altered[t] = random_frame(rng, hp.channels, hp.bins);
    RecurrentState st2 = RecurrentState::zeros(hp);
    for (std::size_t t = 0; t < cut; ++t) CHECK(mask_forward(w, st2, altered[t]) == full[t]);
  }
}

TEST_CASE("mask stream is bitwise repeatable", "[masknet][property]") {
  const ModelWeights w = load_weights(load_npw1_file(testing::fixture_path("weights_full.npw1")));
  Rng rng(14);
  std::vector<SpectralFrame> stream;
  for (int t = 0; t < 8; ++t) stream.push_back(random_frame(rng, 5, 129));
  auto run = [&] {
    std::vector<MaskTensor> out;
    RecurrentState st = RecurrentState::zeros(w.hparams);
    for (const auto& y : stream) out.push_back(mask_forward(w, st, y));
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("forward pass rejects frames of the wrong shape", "[masknet]") {
  const ModelWeights w = zero_weights({});
  try {
    spatial_forward(w, SpectralFrame(4, 129));
    FAIL("expected ChannelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ChannelMismatch);
  }
  CHECK_THROWS_AS(spatial_forward(w, SpectralFrame(5, 65)), Error);
}
