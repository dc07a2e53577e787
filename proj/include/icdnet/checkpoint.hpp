// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "icdnet/autodiff.hpp"
#include "icdnet/error.hpp"

// Binary parameter checkpoint. All integers and floats are little-endian.
//
//   offset  field
//   0       magic "ICDNETCK" (8 bytes)
//   8       u32 format version (1)
//   12      u32 variant tag length n, then n bytes of ASCII variant tag
//   ...     u64 config hash
//           u64 RNG seed
//           u32 parameter count P
//   P times:
//           u32 name length, name bytes
//           u32 rank r, then r x u64 dimensions
//           prod(dims) x f64 values, row-major
//
// The decay flag of each parameter is not stored; it is a property of the
// architecture and is restored by building the model before loading.

namespace icdnet {

struct CheckpointHeader {
  std::string variant;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline constexpr std::array<char, 8> kCheckpointMagic = {'I', 'C', 'D', 'N', 'E', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    bits = std::bit_cast<std::uint64_t>(static_cast<double>(v));
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class LeReader {
 public:
  LeReader(const std::string& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > buf_.size()) throw ParseError("checkpoint " + path_ + " is truncated");
  }
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const CheckpointHeader& header, const ParameterSet& params) {
  std::string out(detail::kCheckpointMagic.begin(), detail::kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, detail::kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.variant.size()));
  out += header.variant;
  detail::put_le<std::uint64_t>(out, header.config_hash);
  detail::put_le<std::uint64_t>(out, header.seed);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.all()) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) detail::put_le<std::uint64_t>(out, d);
    for (double v : p.value.values()) detail::put_le<double>(out, v);
  }
  return out;
}

inline void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                            const ParameterSet& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  std::string bytes = encode_checkpoint(header, params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("failed writing " + path.string());
}

struct LoadedCheckpoint {
  CheckpointHeader header;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

inline LoadedCheckpoint decode_checkpoint(const std::string& buf, const std::string& origin) {
  detail::LeReader in(buf, origin);
  std::string magic = in.bytes(8);
  if (std::memcmp(magic.data(), detail::kCheckpointMagic.data(), 8) != 0) {
    throw ParseError(origin + " is not a checkpoint (bad magic)");
  }
  auto version = in.get<std::uint32_t>();
  if (version != detail::kCheckpointVersion) {
    throw ParseError(origin + ": unsupported checkpoint version " + std::to_string(version));
  }
  LoadedCheckpoint ck;
  ck.header.variant = in.bytes(in.get<std::uint32_t>());
  ck.header.config_hash = in.get<std::uint64_t>();
  ck.header.seed = in.get<std::uint64_t>();
  auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = in.bytes(in.get<std::uint32_t>());
    auto rank = in.get<std::uint32_t>();
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = in.get<double>();
    ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!in.at_end()) throw ParseError(origin + ": trailing bytes after checkpoint");
  return ck;
}

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("checkpoint not found: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(buf, path.string());
}

/// Copies checkpoint tensors into an already-built parameter set. Names,
/// order and shapes must match exactly.
inline void restore_parameters(const LoadedCheckpoint& ck, ParameterSet& params) {
  auto& ps = params.all();
  if (ck.tensors.size() != ps.size()) {
    throw ValidationError("checkpoint has " + std::to_string(ck.tensors.size()) + " parameters, model expects " +
                          std::to_string(ps.size()));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& [name, t] = ck.tensors[i];
    if (name != ps[i].name || t.shape() != ps[i].value.shape()) {
      throw ValidationError("checkpoint parameter " + name + " " + shape_str(t.shape()) +
                            " does not match model parameter " + ps[i].name + " " +
                            shape_str(ps[i].value.shape()));
    }
    ps[i].value = t;
  }
}

}  // namespace icdnet
