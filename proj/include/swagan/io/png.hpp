#pragma once

// PNG codec on top of libpng. Images are [3, H, W] tensors in [-1, 1]; byte
// b maps to b / 127.5 - 1. Only RGB without alpha is accepted.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "swagan/io/file.hpp"
#include "swagan/tensor.hpp"

namespace swagan::io {

/// Decoded RGB samples, row-major interleaved.
struct RawImage {
  Index width = 0;
  Index height = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct MemoryReader {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

inline void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->bytes->size()) png_error(png, "truncated PNG data");
  std::memcpy(out, r->bytes->data() + r->pos, n);
  r->pos += n;
}

inline void png_write_mem(png_structp png, png_bytep data, png_size_t n) {
  auto* v = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  v->insert(v->end(), data, data + n);
}

inline void png_flush_mem(png_structp) {}

inline void png_store_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<char*>(png_get_error_ptr(png));
  std::strncpy(buf, msg, 255);
  buf[255] = '\0';
  png_longjmp(png, 1);
}

inline void png_ignore_warning(png_structp, png_const_charp) {}

}  // namespace detail

inline RawImage read_png_raw(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError(path + ": not a PNG file", 0);
  char err[256] = "";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, err, detail::png_store_error,
                                           detail::png_ignore_warning);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  RawImage img;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> pixels;
  detail::MemoryReader reader{&bytes, 0};
  std::string unsupported;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path + ": " + err, reader.pos);
  }
  png_set_read_fn(png, &reader, detail::png_read_mem);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_RGB || (depth != 8 && depth != 16)) {
    unsupported = "unsupported PNG format (color type " + std::to_string(color) + ", bit depth " +
                  std::to_string(depth) + "); expected 8- or 16-bit RGB";
  } else {
    if (depth == 16) png_set_swap(png);  // host little-endian samples
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    img.width = png_get_image_width(png, info);
    img.height = png_get_image_height(png, info);
    img.bit_depth = depth;
    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * static_cast<std::size_t>(img.height));
    rows.resize(static_cast<std::size_t>(img.height));
    for (Index y = 0; y < img.height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  const auto offset = reader.pos;
  png_destroy_read_struct(&png, &info, nullptr);
  if (!unsupported.empty()) throw FormatError(path + ": " + unsupported, offset);
  const std::size_t count = static_cast<std::size_t>(img.width * img.height * 3);
  img.samples.resize(count);
  if (img.bit_depth == 8) {
    for (std::size_t i = 0; i < count; ++i) img.samples[i] = pixels[i];
  } else {
    std::memcpy(img.samples.data(), pixels.data(), count * 2);
  }
  return img;
}

inline void write_png_raw(const std::string& path, const RawImage& img) {
  if (img.bit_depth != 8 && img.bit_depth != 16) throw ContractError("write_png: bit depth must be 8 or 16");
  if (static_cast<Index>(img.samples.size()) != img.width * img.height * 3) {
    throw DimensionError("write_png: sample count does not match " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + "x3");
  }
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3 * (img.bit_depth / 8);
  std::vector<unsigned char> pixels(stride * static_cast<std::size_t>(img.height));
  for (std::size_t i = 0; i < img.samples.size(); ++i) {
    if (img.bit_depth == 8) {
      pixels[i] = static_cast<unsigned char>(img.samples[i]);
    } else {
      pixels[2 * i] = static_cast<unsigned char>(img.samples[i] >> 8);  // PNG is big-endian
      pixels[2 * i + 1] = static_cast<unsigned char>(img.samples[i] & 0xff);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (Index y = 0; y < img.height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * stride;
  std::vector<unsigned char> out;
  char err[256] = "";
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, err, detail::png_store_error,
                                            detail::png_ignore_warning);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path + ": PNG encoding failed: " + err);
  }
  png_set_write_fn(png, &out, detail::png_write_mem, detail::png_flush_mem);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), img.bit_depth,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  atomic_write(path, out);
}

/// byte -> [-1, 1].
inline float byte_to_unit(std::uint16_t b) { return static_cast<float>(b / 127.5 - 1.0); }

/// [-1, 1] -> byte, clamped, round half up.
inline std::uint16_t unit_to_byte(double v) {
  v = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint16_t>(std::floor((v + 1.0) * 127.5 + 0.5));
}

/// Loads an 8-bit RGB PNG as [3, H, W] in [-1, 1].
inline Tensor<float> load_png(const std::string& path) {
  const auto raw = read_png_raw(path);
  if (raw.bit_depth != 8) throw FormatError(path + ": expected 8-bit RGB, got 16-bit samples", 24);
  const Index hw = raw.width * raw.height;
  std::vector<float> v(static_cast<std::size_t>(3 * hw));
  for (Index p = 0; p < hw; ++p)
    for (Index c = 0; c < 3; ++c) v[c * hw + p] = byte_to_unit(raw.samples[p * 3 + c]);
  return Tensor<float>(Shape{3, raw.height, raw.width}, std::move(v));
}

/// Saves a [3, H, W] image in [-1, 1] (values outside are clamped).
template <typename Real>
void save_png(const std::string& path, const Tensor<Real>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("save_png: expected [3, H, W], got " + to_string(image.shape()));
  }
  RawImage raw{image.dim(2), image.dim(1), 8, {}};
  const Index hw = raw.width * raw.height;
  raw.samples.resize(static_cast<std::size_t>(3 * hw));
  auto d = image.data();
  for (Index p = 0; p < hw; ++p)
    for (Index c = 0; c < 3; ++c) raw.samples[p * 3 + c] = unit_to_byte(static_cast<double>(d[c * hw + p]));
  write_png_raw(path, raw);
}

}  // namespace swagan::io
