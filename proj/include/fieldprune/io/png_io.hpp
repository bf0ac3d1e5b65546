#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/image.hpp"

namespace fieldprune {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

// Decodes to 8-bit rows; gray/palette/alpha inputs are normalized to RGB
// when want_rgb, to gray otherwise. 16-bit inputs are rejected for 8-bit
// reads and required for 16-bit reads.
inline std::vector<std::uint8_t> read_png_bytes(const std::string& path,
                                                int& width, int& height,
                                                bool want_rgb, bool want_16) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open png: " + path);

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw DataError("libpng init failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw DataError("libpng init failed");
  if (setjmp(png_jmpbuf(r.png))) throw DataError("malformed png: " + path);

  png_init_io(r.png, fp.get());
  png_read_info(r.png, r.info);

  width = static_cast<int>(png_get_image_width(r.png, r.info));
  height = static_cast<int>(png_get_image_height(r.png, r.info));
  int depth = png_get_bit_depth(r.png, r.info);
  int color = png_get_color_type(r.png, r.info);

  if (want_16) {
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY)
      throw DataError("expected 16-bit grayscale png: " + path);
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
    png_set_swap(r.png);
#endif
  } else {
    if (depth == 16) throw DataError("expected 8-bit png: " + path);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
      png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
      png_set_tRNS_to_alpha(r.png);
    png_set_strip_alpha(r.png);
    if (want_rgb && (color == PNG_COLOR_TYPE_GRAY ||
                     color == PNG_COLOR_TYPE_GRAY_ALPHA))
      png_set_gray_to_rgb(r.png);
    if (!want_rgb && (color == PNG_COLOR_TYPE_RGB ||
                      color == PNG_COLOR_TYPE_RGB_ALPHA ||
                      color == PNG_COLOR_TYPE_PALETTE))
      png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
  }
  png_read_update_info(r.png, r.info);

  const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);
  std::vector<std::uint8_t> bytes(row_bytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + row_bytes * y;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return bytes;
}

inline void write_png_bytes(const std::string& path, const void* data,
                            int width, int height, int color_type,
                            int bit_depth) {
  namespace stdfs = std::filesystem;
  stdfs::path target(path);
  if (!target.parent_path().empty()) {
    std::error_code ec;
    stdfs::create_directories(target.parent_path(), ec);
  }
  stdfs::path tmp = target;
  tmp += ".tmp";

  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw DataError("cannot open png for writing: " + tmp.string());

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw DataError("libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw DataError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw DataError("png write failed: " + path);

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
#if __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
    if (bit_depth == 16) png_set_swap(w.png);
#endif
    const int channels = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
    const std::size_t row_bytes =
        static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    const auto* base = static_cast<const std::uint8_t*>(data);
    for (int y = 0; y < height; ++y)
      png_write_row(w.png, const_cast<png_bytep>(base + row_bytes * y));
    png_write_end(w.png, nullptr);
  }
  std::error_code ec;
  stdfs::rename(tmp, target, ec);
  if (ec) throw DataError("rename failed for " + path + ": " + ec.message());
}

inline std::uint8_t quantize8(double v) {
  double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(q);
}

}  // namespace detail

/// 8-bit RGB, values scaled to [0,1].
inline Image3d read_png_rgb(const std::string& path) {
  int w = 0, h = 0;
  auto bytes = detail::read_png_bytes(path, w, h, /*want_rgb=*/true, false);
  Image3d img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i)
    img.data()[i] = bytes[i] / 255.0;
  return img;
}

inline void write_png_rgb(const std::string& path, const Image3d& img) {
  std::vector<std::uint8_t> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    bytes[i] = detail::quantize8(img.data()[i]);
  detail::write_png_bytes(path, bytes.data(), img.width(), img.height(),
                          PNG_COLOR_TYPE_RGB, 8);
}

inline Image8 read_png_gray8(const std::string& path) {
  int w = 0, h = 0;
  auto bytes = detail::read_png_bytes(path, w, h, /*want_rgb=*/false, false);
  Image8 img(w, h);
  std::copy(bytes.begin(), bytes.end(), img.data());
  return img;
}

inline void write_png_gray8(const std::string& path, const Image8& img) {
  detail::write_png_bytes(path, img.data(), img.width(), img.height(),
                          PNG_COLOR_TYPE_GRAY, 8);
}

inline Image16 read_png_gray16(const std::string& path) {
  int w = 0, h = 0;
  auto bytes = detail::read_png_bytes(path, w, h, false, /*want_16=*/true);
  Image16 img(w, h);
  std::copy(reinterpret_cast<const std::uint16_t*>(bytes.data()),
            reinterpret_cast<const std::uint16_t*>(bytes.data()) + img.size(),
            img.data());
  return img;
}

inline void write_png_gray16(const std::string& path, const Image16& img) {
  detail::write_png_bytes(path, img.data(), img.width(), img.height(),
                          PNG_COLOR_TYPE_GRAY, 16);
}

}  // namespace fieldprune
