/* Copyright 2026 The h2h Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "h2h/error.hpp"

namespace h2h {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool operator==(const RgbImage&) const = default;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Boolean W x H grid stored as bytes.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  PixelMask() = default;
  PixelMask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  bool operator==(const PixelMask&) const = default;
};

// Integer-rounded Rec.601 luma.
inline GrayImage to_gray(const RgbImage& img) {
  GrayImage g(img.width, img.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const unsigned r = img.data[3 * i], gr = img.data[3 * i + 1], b = img.data[3 * i + 2];
    g.data[i] = static_cast<std::uint8_t>((299 * r + 587 * gr + 114 * b + 500) / 1000);
  }
  return g;
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

// 8-bit RGB PNG. Fixed zlib level and no timestamps, so equal images give
// equal bytes.
inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  detail::FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IngestError("cannot write " + path.string());
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IngestError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IngestError("PNG write failed for " + path.string() + ": " + err);
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.at(0, y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Reads any 8/16-bit PNG and converts it to 8-bit RGB.
inline RgbImage read_png(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IngestError("cannot open " + path.string());
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IngestError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  RgbImage img;
  std::vector<png_bytep> rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestError("PNG read failed for " + path.string() + ": " + err);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IngestError("unsupported PNG layout in " + path.string());
  }
  img = RgbImage(w, h);
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = img.at(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace h2h
