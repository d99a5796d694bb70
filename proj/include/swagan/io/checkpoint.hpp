#pragma once

// Binary checkpoint layout (all integers little-endian u32):
//   "SWGK" | version | config length | config bytes (UTF-8) | tensor count |
//   per tensor: name length | name | ndim | dims... | float32 payload
// Tensor names are prefixed g. (generator), d. (discriminator) and adam.
// (optimizer state).

#include <cstdint>
#include <cstring>
#include <string>

#include "swagan/io/file.hpp"
#include "swagan/tensor_dict.hpp"

namespace swagan::io {

inline constexpr char kCheckpointMagic[4] = {'S', 'W', 'G', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config;
  TensorDict<float> tensors;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Cursor {
 public:
  Cursor(const std::vector<unsigned char>& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }

  void need(std::uint64_t n, const char* what) const {
    if (remaining() < n) {
      throw FormatError(path_ + ": truncated file while reading " + what + " (need " + std::to_string(n) +
                            " bytes, " + std::to_string(remaining()) + " left)",
                        pos_);
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string text(std::uint32_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  float f32() {
    const std::uint32_t bits = u32("tensor payload");
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  [[noreturn]] void fail(const std::string& msg, std::uint64_t at) const { throw FormatError(path_ + ": " + msg, at); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string path_;
  std::uint64_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.config.size()));
  out += ckpt.config;
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (Index d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) detail::put_f32(out, v);
  }
  return out;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  atomic_write(path, encode_checkpoint(ckpt));
}

inline Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& path = "checkpoint") {
  detail::Cursor in(bytes, path);
  in.need(4, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) in.fail("bad magic (not a SWGK checkpoint)", 0);
  in.text(4, "magic");
  const auto version_at = in.offset();
  const auto version = in.u32("version");
  if (version != kCheckpointVersion) {
    in.fail("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")",
            version_at);
  }
  Checkpoint ckpt;
  const auto config_len = in.u32("config length");
  ckpt.config = in.text(config_len, "config text");
  const auto count = in.u32("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_at = in.offset();
    const auto name = in.text(in.u32("tensor name length"), "tensor name");
    const auto dims_at = in.offset();
    const auto ndim = in.u32("tensor rank");
    if (ndim > 8) in.fail("tensor '" + name + "' has implausible rank " + std::to_string(ndim), dims_at);
    Shape shape;
    std::uint64_t elements = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = in.u32("tensor dims");
      elements *= dim;
      if (elements > in.remaining() / 4 + 1) {
        in.fail("dimension overflow in tensor '" + name + "': payload exceeds file size", dims_at);
      }
      shape.push_back(dim);
    }
    in.need(elements * 4, "tensor payload");
    std::vector<float> data(static_cast<std::size_t>(elements));
    for (auto& v : data) v = in.f32();
    if (ckpt.tensors.contains(name)) in.fail("duplicate tensor name '" + name + "'", name_at);
    ckpt.tensors.insert(name, Tensor<float>(std::move(shape), std::move(data)));
  }
  if (in.remaining() != 0) in.fail("trailing bytes after last tensor", in.offset());
  return ckpt;
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path), path); }

}  // namespace swagan::io
