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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "h2h/error.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"

namespace h2h {

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool operator==(const BoundingBox&) const = default;
};

// Coordinate-wise mean of the per-frame boxes.
inline BoundingBox mean_bounding_box(std::span<const BoundingBox> boxes) {
  if (boxes.empty()) throw EmptyInputError("no bounding boxes");
  BoundingBox sum;
  for (const auto& b : boxes) {
    if (!b.valid()) throw ValidationError("invalid bounding box");
    sum.x_min += b.x_min;
    sum.y_min += b.y_min;
    sum.x_max += b.x_max;
    sum.y_max += b.y_max;
  }
  const double n = static_cast<double>(boxes.size());
  return {sum.x_min / n, sum.y_min / n, sum.x_max / n, sum.y_max / n};
}

// Mean box grown to a square of its longer side about its center, then
// intersected with the frame [0, W] x [0, H].
inline BoundingBox average_bounding_box(std::span<const BoundingBox> boxes, int frame_width, int frame_height) {
  const BoundingBox m = mean_bounding_box(boxes);
  const double side = std::max(m.width(), m.height());
  const double cx = 0.5 * (m.x_min + m.x_max), cy = 0.5 * (m.y_min + m.y_max);
  BoundingBox sq{cx - 0.5 * side, cy - 0.5 * side, cx + 0.5 * side, cy + 0.5 * side};
  sq.x_min = std::max(sq.x_min, 0.0);
  sq.y_min = std::max(sq.y_min, 0.0);
  sq.x_max = std::min(sq.x_max, static_cast<double>(frame_width));
  sq.y_max = std::min(sq.y_max, static_cast<double>(frame_height));
  if (!sq.valid()) throw OutOfFrameError("average bounding box does not overlap the frame");
  return sq;
}

// Bilinear resample of `box` to size x size. Output pixel i samples source
// x = x_min + (i + 0.5) * width / size - 0.5; coordinates outside the frame
// are clamped, which replicates edge pixels.
inline RgbImage crop_roi(const RgbImage& frame, const BoundingBox& box, int size = 256) {
  if (size <= 0) throw ValidationError("ROI size must be positive");
  if (!box.valid()) throw ValidationError("invalid bounding box");
  if (box.x_max <= 0.0 || box.y_max <= 0.0 || box.x_min >= frame.width || box.y_min >= frame.height) {
    throw OutOfFrameError("bounding box does not overlap the frame");
  }
  RgbImage out(size, size);
  const double sx = box.width() / size, sy = box.height() / size;
  auto clamp_x = [&](long x) { return static_cast<int>(std::clamp<long>(x, 0, frame.width - 1)); };
  auto clamp_y = [&](long y) { return static_cast<int>(std::clamp<long>(y, 0, frame.height - 1)); };
  for (int j = 0; j < size; ++j) {
    const double y = box.y_min + (j + 0.5) * sy - 0.5;
    const double y0f = std::floor(y);
    const double fy = y - y0f;
    const int ya = clamp_y(static_cast<long>(y0f)), yb = clamp_y(static_cast<long>(y0f) + 1);
    for (int i = 0; i < size; ++i) {
      const double x = box.x_min + (i + 0.5) * sx - 0.5;
      const double x0f = std::floor(x);
      const double fx = x - x0f;
      const int xa = clamp_x(static_cast<long>(x0f)), xb = clamp_x(static_cast<long>(x0f) + 1);
      const std::uint8_t* p00 = frame.at(xa, ya);
      const std::uint8_t* p10 = frame.at(xb, ya);
      const std::uint8_t* p01 = frame.at(xa, yb);
      const std::uint8_t* p11 = frame.at(xb, yb);
      std::uint8_t* dst = out.at(i, j);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + fx * (p10[c] - p00[c]);
        const double bottom = p01[c] + fx * (p11[c] - p01[c]);
        dst[c] = static_cast<std::uint8_t>(std::clamp(std::lround(top + fy * (bottom - top)), 0L, 255L));
      }
    }
  }
  return out;
}

// boxes.csv rows: frame_index,x_min,y_min,x_max,y_max
inline std::vector<BoundingBox> read_boxes_csv(const std::filesystem::path& path) {
  const auto rows = read_indexed_csv(path, 4);
  std::vector<BoundingBox> out;
  out.reserve(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    BoundingBox b{rows[t][0], rows[t][1], rows[t][2], rows[t][3]};
    if (!b.valid()) throw IngestError(path.string() + ": box for frame " + std::to_string(t) + " is empty");
    out.push_back(b);
  }
  return out;
}

inline void write_boxes_csv(const std::filesystem::path& path, std::span<const BoundingBox> boxes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  char buf[128];
  for (std::size_t t = 0; t < boxes.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", t, boxes[t].x_min, boxes[t].y_min,
                  boxes[t].x_max, boxes[t].y_max);
    out << buf;
  }
}

}  // namespace h2h
