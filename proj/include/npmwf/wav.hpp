#pragma once

// RIFF/WAVE reading (PCM 16/24/32-bit integer, 32-bit float, including
// WAVE_FORMAT_EXTENSIBLE wrappers) and 32-bit float writing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "npmwf/error.hpp"
#include "npmwf/frame.hpp"
#include "npmwf/npw1.hpp"

namespace npmwf {

/// Planar audio: channel c occupies samples[c * frames, (c + 1) * frames).
struct AudioBuffer {
  double sample_rate = 16000.0;
  std::size_t channels = 1;
  std::size_t frames = 0;
  std::vector<double> samples;

  AudioBuffer() = default;
  AudioBuffer(double rate, std::size_t ch, std::size_t n) : sample_rate(rate), channels(ch), frames(n), samples(ch * n) {}

  std::span<double> channel(std::size_t c) { return {samples.data() + c * frames, frames}; }
  std::span<const double> channel(std::size_t c) const { return {samples.data() + c * frames, frames}; }

  PlanarView view() const { return PlanarView(samples, channels); }
};

namespace wav_detail {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatFloat = 3;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::uint16_t le16(const std::byte* p) {
  return static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) | (std::to_integer<unsigned>(p[1]) << 8));
}
inline std::uint32_t le32(const std::byte* p) {
  return static_cast<std::uint32_t>(le16(p)) | (static_cast<std::uint32_t>(le16(p + 2)) << 16);
}

inline void put16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xFF));
  out.push_back(static_cast<std::byte>(v >> 8));
}
inline void put32(std::vector<std::byte>& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
  put16(out, static_cast<std::uint16_t>(v >> 16));
}
inline void put_tag(std::vector<std::byte>& out, const char* tag) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>(tag[i]));
}

}  // namespace wav_detail

inline AudioBuffer parse_wav(std::span<const std::byte> bytes) {
  using namespace wav_detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::CorruptHeader, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const std::byte> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::byte* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > avail) throw Error(ErrorCode::CorruptHeader, "truncated fmt chunk");
      const std::byte* f = bytes.data() + body;
      format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      block_align = le16(f + 12);
      bits = le16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorCode::CorruptHeader, "truncated extensible fmt chunk");
        format = le16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      // Streamed writers sometimes leave the size at 0 or 0xFFFFFFFF.
      const std::size_t len = (size == 0 || size > avail) ? avail : size;
      data = bytes.subspan(body, len);
      have_data = true;
      break;
    }
    if (size > avail) throw Error(ErrorCode::CorruptHeader, "chunk runs past end of file");
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw Error(ErrorCode::CorruptHeader, "missing fmt chunk");
  if (!have_data) throw Error(ErrorCode::CorruptHeader, "missing data chunk");
  if (channels == 0 || rate == 0) throw Error(ErrorCode::CorruptHeader, "zero channels or sample rate");

  const bool is_int = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool is_float = format == kFormatFloat && bits == 32;
  if (!is_int && !is_float) {
    throw Error(ErrorCode::UnsupportedFormat, "format " + std::to_string(format) + " with " + std::to_string(bits) +
                                                  " bits per sample");
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) throw Error(ErrorCode::CorruptHeader, "inconsistent block alignment");

  const std::size_t frames = data.size() / block_align;
  AudioBuffer buf(static_cast<double>(rate), channels, frames);
  const double int_scale = 1.0 / std::ldexp(1.0, bits - 1);
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::byte* p = data.data() + n * block_align + c * bytes_per_sample;
      double value = 0.0;
      if (is_float) {
        float f;
        std::memcpy(&f, p, 4);
        value = f;
      } else if (bits == 16) {
        value = static_cast<std::int16_t>(le16(p)) * int_scale;
      } else if (bits == 24) {
        std::int32_t v = static_cast<std::int32_t>(std::to_integer<unsigned>(p[0]) |
                                                   (std::to_integer<unsigned>(p[1]) << 8) |
                                                   (std::to_integer<unsigned>(p[2]) << 16));
        if (v & 0x800000) v -= 0x1000000;
        value = v * int_scale;
      } else {
        value = static_cast<std::int32_t>(le32(p)) * int_scale;
      }
      buf.samples[c * frames + n] = value;
    }
  }
  return buf;
}

inline std::vector<std::byte> encode_wav_float(const AudioBuffer& buf) {
  using namespace wav_detail;
  if (buf.channels == 0 || buf.samples.size() != buf.channels * buf.frames) {
    throw Error(ErrorCode::InvalidArgument, "audio buffer shape is inconsistent");
  }
  const std::uint64_t data_size = static_cast<std::uint64_t>(buf.samples.size()) * 4;
  if (data_size > 0xFFFFFFFFull - 64) throw Error(ErrorCode::UnsupportedFormat, "audio too long for RIFF");
  std::vector<std::byte> out;
  out.reserve(static_cast<std::size_t>(data_size) + 58);
  put_tag(out, "RIFF");
  put32(out, static_cast<std::uint32_t>(4 + (8 + 18) + (8 + 4) + (8 + data_size)));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 18);
  put16(out, kFormatFloat);
  put16(out, static_cast<std::uint16_t>(buf.channels));
  const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate));
  put32(out, rate);
  put32(out, rate * static_cast<std::uint32_t>(buf.channels) * 4);
  put16(out, static_cast<std::uint16_t>(buf.channels * 4));
  put16(out, 32);
  put16(out, 0);
  put_tag(out, "fact");
  put32(out, 4);
  put32(out, static_cast<std::uint32_t>(buf.frames));
  put_tag(out, "data");
  put32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t n = 0; n < buf.frames; ++n) {
    for (std::size_t c = 0; c < buf.channels; ++c) {
      const float f = static_cast<float>(buf.samples[c * buf.frames + n]);
      std::uint32_t bitsv;
      std::memcpy(&bitsv, &f, 4);
      put32(out, bitsv);
    }
  }
  return out;
}

/// Integer PCM encoder (16/24/32 bit) with rounding and clipping; used for
/// fixtures and interoperability tests.
inline std::vector<std::byte> encode_wav_pcm(const AudioBuffer& buf, int bits) {
  using namespace wav_detail;
  if (bits != 16 && bits != 24 && bits != 32) throw Error(ErrorCode::UnsupportedFormat, "PCM bits must be 16/24/32");
  const std::size_t bps = static_cast<std::size_t>(bits) / 8;
  const std::uint64_t data_size = static_cast<std::uint64_t>(buf.samples.size()) * bps;
  std::vector<std::byte> out;
  put_tag(out, "RIFF");
  put32(out, static_cast<std::uint32_t>(4 + (8 + 16) + (8 + data_size)));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, static_cast<std::uint16_t>(buf.channels));
  const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate));
  put32(out, rate);
  put32(out, rate * static_cast<std::uint32_t>(buf.channels * bps));
  put16(out, static_cast<std::uint16_t>(buf.channels * bps));
  put16(out, static_cast<std::uint16_t>(bits));
  put_tag(out, "data");
  put32(out, static_cast<std::uint32_t>(data_size));
  const double full = std::ldexp(1.0, bits - 1);
  for (std::size_t n = 0; n < buf.frames; ++n) {
    for (std::size_t c = 0; c < buf.channels; ++c) {
      const double scaled = std::nearbyint(buf.samples[c * buf.frames + n] * full);
      const auto v = static_cast<std::int64_t>(std::clamp(scaled, -full, full - 1.0));
      for (std::size_t b = 0; b < bps; ++b) out.push_back(static_cast<std::byte>((v >> (8 * b)) & 0xFF));
    }
  }
  return out;
}

inline AudioBuffer read_wav(const std::filesystem::path& path) { return parse_wav(read_file_bytes(path)); }

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  write_file_bytes(path, encode_wav_float(buf));
}

}  // namespace npmwf
