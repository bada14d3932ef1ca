#pragma once

// NPW1 tensor container.
//
// Layout (all integers little-endian):
//   "NPW1"            4 bytes magic
//   u32 version       currently 1
//   u32 tensor_count
//   per tensor:
//     u16 name_length, name bytes (UTF-8)
//     u8  dtype       0 = float32
//     u8  ndim
//     u32 dims[ndim]
//     payload         row-major float32, product(dims) values
//
// Tensors are kept in a name-ordered map; writing emits them in that order,
// so serialisation is deterministic.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "npmwf/error.hpp"

namespace npmwf {

static_assert(std::endian::native == std::endian::little, "NPW1 I/O assumes a little-endian host");

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> d, std::vector<float> values) : dims(std::move(d)), data(std::move(values)) {
    if (data.size() != element_count()) throw Error(ErrorCode::ShapeMismatch, "tensor payload does not match dims");
  }
  explicit Tensor(std::vector<std::uint32_t> d) : dims(std::move(d)), data(element_count(), 0.0f) {}

  std::size_t element_count() const noexcept {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t acc, std::uint32_t d) { return acc * d; });
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

using TensorMap = std::map<std::string, Tensor, std::less<>>;

namespace detail {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    T value{};
    take(&value, sizeof(T));
    return value;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void take(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) {
      throw Error(ErrorCode::TruncatedContainer, "container ends at byte " + std::to_string(bytes_.size()) +
                                                     ", needed " + std::to_string(pos_ + n));
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::byte>& out, T value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace detail

inline TensorMap read_npw1(std::span<const std::byte> bytes) {
  detail::ByteReader reader(bytes);
  char magic[4];
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedContainer, "container shorter than magic");
  reader.take(magic, 4);
  if (std::memcmp(magic, "NPW1", 4) != 0) throw Error(ErrorCode::BadMagic, "missing NPW1 magic");
  const auto version = reader.read<std::uint32_t>();
  if (version != 1) throw Error(ErrorCode::UnsupportedFormat, "NPW1 version " + std::to_string(version));
  const auto count = reader.read<std::uint32_t>();

  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = reader.read<std::uint16_t>();
    std::string name(name_len, '\0');
    reader.take(name.data(), name_len);
    const auto dtype = reader.read<std::uint8_t>();
    if (dtype != 0) throw Error(ErrorCode::UnsupportedFormat, "tensor '" + name + "' has dtype " + std::to_string(dtype));
    const auto ndim = reader.read<std::uint8_t>();
    std::vector<std::uint32_t> dims(ndim);
    for (auto& d : dims) d = reader.read<std::uint32_t>();
    const std::size_t elements = std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                                                 [](std::size_t acc, std::uint32_t d) { return acc * d; });
    if (elements > reader.remaining() / sizeof(float)) {
      throw Error(ErrorCode::TruncatedContainer, "payload of tensor '" + name + "' runs past the end");
    }
    Tensor t(std::move(dims));
    reader.take(t.data.data(), t.data.size() * sizeof(float));
    tensors.insert_or_assign(std::move(name), std::move(t));
  }
  return tensors;
}

inline std::vector<std::byte> write_npw1(const TensorMap& tensors) {
  std::vector<std::byte> out;
  const char magic[4] = {'N', 'P', 'W', '1'};
  out.insert(out.end(), reinterpret_cast<const std::byte*>(magic), reinterpret_cast<const std::byte*>(magic) + 4);
  detail::append<std::uint32_t>(out, 1);
  detail::append<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "tensor name too long");
    if (t.dims.size() > 0xFF) throw Error(ErrorCode::InvalidArgument, "tensor rank too large");
    if (t.data.size() != t.element_count()) throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' payload size");
    detail::append<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    const auto* nb = reinterpret_cast<const std::byte*>(name.data());
    out.insert(out.end(), nb, nb + name.size());
    detail::append<std::uint8_t>(out, 0);
    detail::append<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) detail::append<std::uint32_t>(out, d);
    const auto* pb = reinterpret_cast<const std::byte*>(t.data.data());
    out.insert(out.end(), pb, pb + t.data.size() * sizeof(float));
  }
  return out;
}

inline std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorCode::IoFailure, "short read on '" + path.string() + "'");
  }
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed on '" + path.string() + "'");
}

inline TensorMap load_npw1_file(const std::filesystem::path& path) { return read_npw1(read_file_bytes(path)); }

inline void save_npw1_file(const std::filesystem::path& path, const TensorMap& tensors) {
  write_file_bytes(path, write_npw1(tensors));
}

inline const Tensor& require_tensor(const TensorMap& tensors, std::string_view name) {
  const auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::MissingTensor, std::string(name));
  return it->second;
}

inline const Tensor& require_tensor(const TensorMap& tensors, std::string_view name,
                                    const std::vector<std::uint32_t>& dims) {
  const Tensor& t = require_tensor(tensors, name);
  if (t.dims != dims) {
    std::string want, got;
    for (auto d : dims) want += std::to_string(d) + ",";
    for (auto d : t.dims) got += std::to_string(d) + ",";
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + ": expected [" + want + "] got [" + got + "]");
  }
  return t;
}

}  // namespace npmwf
