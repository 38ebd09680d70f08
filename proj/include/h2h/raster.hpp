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

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/image.hpp"
#include "h2h/io.hpp"
#include "h2h/model.hpp"

namespace h2h {

// Per-pixel index of the front-most visible triangle.
struct VisibilityMask {
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> triangle_index;

  VisibilityMask() = default;
  VisibilityMask(int w, int h) : width(w), height(h), triangle_index(static_cast<std::size_t>(w) * h, kNone) {}

  std::uint32_t at(int x, int y) const { return triangle_index[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const VisibilityMask&) const = default;
};

using NmfcImage = RgbImage;

namespace raster {

// Vertices are snapped to a 1/256-pixel grid before coverage tests so edge
// functions are exact integers: a pixel center on an edge shared by two
// triangles is owned by exactly one of them.
inline constexpr int kSubpixelBits = 8;
inline constexpr std::int64_t kSubpixelScale = std::int64_t{1} << kSubpixelBits;
// Triangles with any coordinate beyond this many pixels are skipped.
inline constexpr double kCoordinateLimit = double(1 << 22);

inline std::int64_t snap(double v) { return std::llround(v * static_cast<double>(kSubpixelScale)); }

// Pixel (u, v) is sampled at (u + 0.5, v + 0.5).
inline std::int64_t pixel_center(int u) { return std::int64_t{u} * kSubpixelScale + kSubpixelScale / 2; }

// Edge function of (a -> b) at p; positive on the interior side of a
// front-facing triangle.
inline std::int64_t edge(std::int64_t ax, std::int64_t ay, std::int64_t bx, std::int64_t by, std::int64_t px,
                         std::int64_t py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left rule for image coordinates (y down) and positive-area winding: a
// top edge is horizontal running +x, a left edge runs -y.
inline bool is_top_left(std::int64_t ax, std::int64_t ay, std::int64_t bx, std::int64_t by) {
  const std::int64_t dx = bx - ax, dy = by - ay;
  return (dy == 0 && dx > 0) || dy < 0;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace raster

// Z-buffered coverage of already-projected triangles. Front faces have
// positive signed area in image coordinates; others are culled. Depth is
// interpolated barycentrically, larger is nearer, and equal depths go to the
// lower triangle index, so the result does not depend on submission order.
inline VisibilityMask rasterize_projected(const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                                          const Eigen::Ref<const Eigen::VectorXd>& depth,
                                          std::span<const Triangle> triangles, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("raster size must be positive");
  if (depth.size() != points.cols()) throw DimensionError("depth and point counts differ");
  VisibilityMask mask(width, height);
  std::vector<double> zbuf(mask.triangle_index.size(), -std::numeric_limits<double>::infinity());
  const auto nverts = static_cast<std::uint32_t>(points.cols());
  constexpr std::int64_t step = raster::kSubpixelScale;

  for (std::size_t ti = 0; ti < triangles.size(); ++ti) {
    const Triangle& tri = triangles[ti];
    if (tri[0] >= nverts || tri[1] >= nverts || tri[2] >= nverts) {
      throw DimensionError("triangle references a vertex out of range");
    }
    std::array<std::int64_t, 3> x{}, y{};
    bool in_range = true;
    for (int k = 0; k < 3; ++k) {
      const double px = points(0, tri[k]), py = points(1, tri[k]);
      if (!(std::abs(px) < raster::kCoordinateLimit && std::abs(py) < raster::kCoordinateLimit)) in_range = false;
      x[k] = in_range ? raster::snap(px) : 0;
      y[k] = in_range ? raster::snap(py) : 0;
    }
    if (!in_range) continue;
    const std::int64_t area = raster::edge(x[0], y[0], x[1], y[1], x[2], y[2]);
    if (area <= 0) continue;

    const std::int64_t min_x = std::min({x[0], x[1], x[2]}), max_x = std::max({x[0], x[1], x[2]});
    const std::int64_t min_y = std::min({y[0], y[1], y[2]}), max_y = std::max({y[0], y[1], y[2]});
    const std::int64_t u0 = std::max<std::int64_t>(0, raster::ceil_div(min_x - step / 2, step));
    const std::int64_t u1 = std::min<std::int64_t>(width - 1, raster::floor_div(max_x - step / 2, step));
    const std::int64_t v0 = std::max<std::int64_t>(0, raster::ceil_div(min_y - step / 2, step));
    const std::int64_t v1 = std::min<std::int64_t>(height - 1, raster::floor_div(max_y - step / 2, step));
    if (u0 > u1 || v0 > v1) continue;

    // weight k belongs to vertex k and comes from the opposite edge
    const std::array<int, 3> from{1, 2, 0}, to{2, 0, 1};
    std::array<std::int64_t, 3> row_w{}, dx_w{}, dy_w{}, bias{};
    const std::int64_t px0 = raster::pixel_center(static_cast<int>(u0));
    const std::int64_t py0 = raster::pixel_center(static_cast<int>(v0));
    for (int k = 0; k < 3; ++k) {
      const int a = from[k], b = to[k];
      row_w[k] = raster::edge(x[a], y[a], x[b], y[b], px0, py0);
      dx_w[k] = -(y[b] - y[a]) * step;
      dy_w[k] = (x[b] - x[a]) * step;
      bias[k] = raster::is_top_left(x[a], y[a], x[b], y[b]) ? 0 : -1;
    }
    const double z0 = depth(tri[0]), z1 = depth(tri[1]), z2 = depth(tri[2]);
    const double inv_area = 1.0 / static_cast<double>(area);
    const auto index = static_cast<std::uint32_t>(ti);

    for (std::int64_t v = v0; v <= v1; ++v) {
      std::array<std::int64_t, 3> w = row_w;
      std::size_t offset = static_cast<std::size_t>(v) * width + static_cast<std::size_t>(u0);
      for (std::int64_t u = u0; u <= u1; ++u, ++offset) {
        if (w[0] + bias[0] >= 0 && w[1] + bias[1] >= 0 && w[2] + bias[2] >= 0) {
          const double z = (static_cast<double>(w[0]) * z0 + static_cast<double>(w[1]) * z1 +
                            static_cast<double>(w[2]) * z2) *
                           inv_area;
          double& zb = zbuf[offset];
          std::uint32_t& id = mask.triangle_index[offset];
          if (z > zb || (z == zb && index < id)) {
            zb = z;
            id = index;
          }
        }
        for (int k = 0; k < 3; ++k) w[k] += dx_w[k];
      }
      for (int k = 0; k < 3; ++k) row_w[k] += dy_w[k];
    }
  }
  return mask;
}

inline VisibilityMask rasterize_visibility(const CameraPose& pose, const FaceShape& shape,
                                           std::span<const Triangle> triangles, int width, int height) {
  const ProjectedVertices proj = project(pose, shape);
  return rasterize_projected(proj.points, proj.depth, triangles, width, height);
}

// Flat NMFC color per triangle: round-half-away(255 * centroid of the three
// normalized mean-face vertices).
class TriangleColorTable {
 public:
  TriangleColorTable() = default;
  TriangleColorTable(const NormalizedMeanFace& nmf, std::span<const Triangle> triangles) {
    const Eigen::Index n = nmf.colors.size() / 3;
    colors_.reserve(triangles.size());
    for (const auto& tri : triangles) {
      std::array<std::uint8_t, 3> rgb{};
      for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < 3; ++k) {
          if (static_cast<Eigen::Index>(tri[k]) >= n) throw DimensionError("triangle references a vertex out of range");
        }
        const double centroid =
            (nmf.colors(3 * tri[0] + c) + nmf.colors(3 * tri[1] + c) + nmf.colors(3 * tri[2] + c)) / 3.0;
        rgb[c] = static_cast<std::uint8_t>(std::clamp(std::round(255.0 * centroid), 0.0, 255.0));
      }
      colors_.push_back(rgb);
    }
  }

  std::size_t size() const { return colors_.size(); }
  const std::array<std::uint8_t, 3>& operator[](std::size_t i) const { return colors_[i]; }

 private:
  std::vector<std::array<std::uint8_t, 3>> colors_;
};

inline NmfcImage render_nmfc(const VisibilityMask& mask, const TriangleColorTable& table) {
  NmfcImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.triangle_index.size(); ++i) {
    const std::uint32_t id = mask.triangle_index[i];
    if (id == VisibilityMask::kNone) continue;
    if (id >= table.size()) throw CorruptMaskError("mask triangle index " + std::to_string(id) + " out of range");
    const auto& rgb = table[id];
    img.data[3 * i] = rgb[0];
    img.data[3 * i + 1] = rgb[1];
    img.data[3 * i + 2] = rgb[2];
  }
  return img;
}

inline NmfcImage render_nmfc(const VisibilityMask& mask, const NormalizedMeanFace& nmf,
                             std::span<const Triangle> triangles) {
  return render_nmfc(mask, TriangleColorTable(nmf, triangles));
}

// Facial area of an NMFC frame: any channel non-zero.
inline PixelMask nmfc_facial_mask(const NmfcImage& image) {
  PixelMask m(image.width, image.height);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = (image.data[3 * i] | image.data[3 * i + 1] | image.data[3 * i + 2]) != 0 ? 1 : 0;
  }
  return m;
}

// Debug dump: little-endian u32 grid, row-major, kNone = 0xFFFFFFFF.
inline void write_visibility_mask(const std::filesystem::path& path, const VisibilityMask& mask) {
  io::write_le(path, mask.triangle_index);
}

}  // namespace h2h
