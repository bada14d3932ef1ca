#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <vector>

#include "npmwf/wav.hpp"
#include "test_util.hpp"

using namespace npmwf;
using npmwf::testing::Rng;

namespace {

AudioBuffer random_buffer(std::uint64_t seed, std::size_t channels, std::size_t frames) {
  Rng rng(seed);
  AudioBuffer b(16000.0, channels, frames);
  for (auto& v : b.samples) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return b;
}

ErrorCode parse_error(const std::vector<std::byte>& bytes) {
  try {
    parse_wav(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("16-bit samples scale by 1/32768", "[wav]") {
  AudioBuffer b(16000.0, 1, 3);
  b.samples = {32767.0 / 32768.0, -1.0, 0.0};
  const AudioBuffer back = parse_wav(encode_wav_pcm(b, 16));
  CHECK(back.samples[0] == 32767.0 / 32768.0);
  CHECK(back.samples[0] == Catch::Approx(0.99997).margin(1e-5));
  CHECK(back.samples[1] == -1.0);
  CHECK(back.samples[2] == 0.0);
}

TEST_CASE("float write/read round trip is bitwise", "[wav]") {
  const AudioBuffer b = random_buffer(61, 5, 1001);
  const AudioBuffer back = parse_wav(encode_wav_float(b));
  CHECK(back.channels == 5);
  CHECK(back.frames == 1001);
  CHECK(back.sample_rate == 16000.0);
  CHECK(back.samples == b.samples);
}

TEST_CASE("integer formats round trip within one quantisation step", "[wav]") {
  const AudioBuffer b = random_buffer(62, 3, 257);
  for (int bits : {16, 24, 32}) {
    INFO(bits);
    const AudioBuffer back = parse_wav(encode_wav_pcm(b, bits));
    REQUIRE(back.samples.size() == b.samples.size());
    const double step = std::ldexp(1.0, 1 - bits);
    for (std::size_t i = 0; i < b.samples.size(); ++i) REQUIRE(std::abs(back.samples[i] - b.samples[i]) <= step);
  }
}

TEST_CASE("files on disk round trip", "[wav]") {
  const auto path = std::filesystem::temp_directory_path() / "npmwf_test_wav_roundtrip.wav";
  const AudioBuffer b = random_buffer(63, 2, 100);
  write_wav(path, b);
  CHECK(read_wav(path).samples == b.samples);
  std::filesystem::remove(path);
}

TEST_CASE("malformed and unsupported files are rejected", "[wav]") {
  const auto good = encode_wav_pcm(random_buffer(64, 1, 10), 16);

  auto not_riff = good;
  not_riff[0] = std::byte{'X'};
  CHECK(parse_error(not_riff) == ErrorCode::CorruptHeader);

  // Format tag lives at byte 20; 2 is ADPCM.
  auto adpcm = good;
  adpcm[20] = std::byte{2};
  CHECK(parse_error(adpcm) == ErrorCode::UnsupportedFormat);

  // 8-bit PCM is outside the supported set.
  auto eight_bit = good;
  eight_bit[34] = std::byte{8};
  CHECK(parse_error(eight_bit) == ErrorCode::UnsupportedFormat);

  const std::vector<std::byte> header_only(good.begin(), good.begin() + 30);
  CHECK(parse_error(header_only) == ErrorCode::CorruptHeader);

  try {
    read_wav("/nonexistent/input.wav");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}
