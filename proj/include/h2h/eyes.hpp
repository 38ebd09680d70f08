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
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "h2h/error.hpp"
#include "h2h/image.hpp"

namespace h2h {

using EyePolygon = std::array<Eigen::Vector2d, 6>;

// Six outline points per eye, in pixels.
struct EyeLandmarks {
  EyePolygon left;
  EyePolygon right;
};

struct PupilPair {
  Eigen::Vector2d left = Eigen::Vector2d::Zero();
  Eigen::Vector2d right = Eigen::Vector2d::Zero();
};

// Eye outline points 36-41 (left) and 42-47 (right) of the 68-point scheme.
inline EyeLandmarks eye_landmarks_from_68(std::span<const Eigen::Vector2d> points) {
  if (points.size() != 68) throw DimensionError("expected 68 landmarks");
  EyeLandmarks e;
  for (int k = 0; k < 6; ++k) {
    e.left[k] = points[36 + k];
    e.right[k] = points[42 + k];
  }
  return e;
}

namespace eyes_detail {

inline bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a, ap = p - a;
  if (ab.x() * ap.y() - ab.y() * ap.x() != 0.0) return false;
  return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) && p.y() >= std::min(a.y(), b.y()) &&
         p.y() <= std::max(a.y(), b.y());
}

}  // namespace eyes_detail

// Even-odd membership; points on the outline are outside.
inline bool strictly_inside(std::span<const Eigen::Vector2d> polygon, const Eigen::Vector2d& p) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Eigen::Vector2d& a = polygon[i];
    const Eigen::Vector2d& b = polygon[j];
    if (eyes_detail::on_segment(p, a, b)) return false;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

struct PupilEstimate {
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  // No pixel center fell inside the polygon; point is the vertex centroid.
  bool sub_pixel = false;
};

// Center of mass of the pixels inside the eye outline, weighted by inverse
// intensity 255 - gray. Pixel (u, v) sits at (u + 0.5, v + 0.5). A uniformly
// white eye falls back to the unweighted centroid of the region.
inline PupilEstimate detect_pupil(std::span<const Eigen::Vector2d> polygon, const GrayImage& gray) {
  if (polygon.size() < 3) throw DimensionError("eye polygon needs at least 3 points");
  Eigen::Vector2d lo = polygon[0], hi = polygon[0];
  for (const auto& p : polygon) {
    if (!p.allFinite()) throw ValidationError("non-finite eye landmark");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int u0 = std::max(0, static_cast<int>(std::floor(lo.x())));
  const int u1 = std::min(gray.width - 1, static_cast<int>(std::ceil(hi.x())));
  const int v0 = std::max(0, static_cast<int>(std::floor(lo.y())));
  const int v1 = std::min(gray.height - 1, static_cast<int>(std::ceil(hi.y())));

  double sw = 0.0, swx = 0.0, swy = 0.0;
  double count = 0.0, sx = 0.0, sy = 0.0;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const Eigen::Vector2d c(u + 0.5, v + 0.5);
      if (!strictly_inside(polygon, c)) continue;
      const double w = 255.0 - gray.at(u, v);
      sw += w;
      swx += w * c.x();
      swy += w * c.y();
      count += 1.0;
      sx += c.x();
      sy += c.y();
    }
  }
  PupilEstimate est;
  if (count == 0.0) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : polygon) mean += p;
    est.point = mean / static_cast<double>(polygon.size());
    est.sub_pixel = true;
  } else if (sw == 0.0) {
    est.point = {sx / count, sy / count};
  } else {
    est.point = {swx / sw, swy / sw};
  }
  return est;
}

inline PupilPair detect_pupils(const EyeLandmarks& eyes, const GrayImage& gray, bool* sub_pixel = nullptr) {
  const PupilEstimate l = detect_pupil(eyes.left, gray);
  const PupilEstimate r = detect_pupil(eyes.right, gray);
  if (sub_pixel) *sub_pixel = l.sub_pixel || r.sub_pixel;
  return {l.point, r.point};
}

// ---- eye sketch ----

struct EyeSketch {
  RgbImage frame;
  bool clipped = false;  // some input coordinate fell outside the canvas
};

namespace eyes_detail {

inline void put(RgbImage& img, int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::uint8_t* px = img.at(x, y);
  px[0] = r;
  px[1] = g;
  px[2] = b;
}

}  // namespace eyes_detail

// Integer Bresenham line through the pixels containing the two end points.
// Pixels off the canvas are dropped.
inline void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> color) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    eyes_detail::put(img, x0, y0, color[0], color[1], color[2]);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// Fills every pixel whose center is within `radius` of `center`.
inline void fill_disc(RgbImage& img, const Eigen::Vector2d& center, double radius,
                      std::array<std::uint8_t, 3> color) {
  const int u0 = std::max(0, static_cast<int>(std::floor(center.x() - radius - 1)));
  const int u1 = std::min(img.width - 1, static_cast<int>(std::ceil(center.x() + radius + 1)));
  const int v0 = std::max(0, static_cast<int>(std::floor(center.y() - radius - 1)));
  const int v1 = std::min(img.height - 1, static_cast<int>(std::ceil(center.y() + radius + 1)));
  const double r2 = radius * radius;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double ddx = u + 0.5 - center.x(), ddy = v + 0.5 - center.y();
      if (ddx * ddx + ddy * ddy <= r2) eyes_detail::put(img, u, v, color[0], color[1], color[2]);
    }
  }
}

// Distance between the leftmost and rightmost outline points.
inline double eye_width(const EyePolygon& eye) {
  const auto [mn, mx] = std::minmax_element(eye.begin(), eye.end(),
                                            [](const auto& a, const auto& b) { return a.x() < b.x(); });
  return (*mx - *mn).norm();
}

inline int pupil_radius(const EyePolygon& eye) {
  return std::max(1, static_cast<int>(std::lround(0.15 * eye_width(eye))));
}

// Black canvas, white closed outline per eye, red pupil discs drawn last.
inline EyeSketch render_eye_sketch(const EyeLandmarks& eyes, const PupilPair& pupils, int size = 256) {
  if (size <= 0) throw ValidationError("sketch size must be positive");
  EyeSketch out{RgbImage(size, size), false};
  auto in_canvas = [&](const Eigen::Vector2d& p) {
    return p.allFinite() && p.x() >= 0.0 && p.y() >= 0.0 && p.x() < size && p.y() < size;
  };
  constexpr std::array<std::uint8_t, 3> kWhite{255, 255, 255};
  constexpr std::array<std::uint8_t, 3> kRed{255, 0, 0};
  for (const EyePolygon* eye : {&eyes.left, &eyes.right}) {
    for (std::size_t k = 0; k < eye->size(); ++k) {
      const Eigen::Vector2d& a = (*eye)[k];
      const Eigen::Vector2d& b = (*eye)[(k + 1) % eye->size()];
      if (!a.allFinite() || !b.allFinite()) throw ValidationError("non-finite eye landmark");
      if (!in_canvas(a)) out.clipped = true;
      draw_line(out.frame, static_cast<int>(std::floor(a.x())), static_cast<int>(std::floor(a.y())),
                static_cast<int>(std::floor(b.x())), static_cast<int>(std::floor(b.y())), kWhite);
    }
  }
  const std::array<std::pair<const Eigen::Vector2d*, const EyePolygon*>, 2> discs{
      std::pair{&pupils.left, &eyes.left}, std::pair{&pupils.right, &eyes.right}};
  for (const auto& [center, eye] : discs) {
    if (!center->allFinite()) throw ValidationError("non-finite pupil");
    if (!in_canvas(*center)) out.clipped = true;
    fill_disc(out.frame, *center, pupil_radius(*eye), kRed);
  }
  return out;
}

// ---- CSV ----

namespace eyes_detail {

inline std::vector<double> parse_row(const std::string& line, const std::string& where) {
  std::vector<double> values;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw IngestError(where + ": bad number '" + cell + "'");
    }
  }
  return values;
}

}  // namespace eyes_detail

// Reads rows "frame_index, v1, ..., vK". Frame indices must run 0..T-1.
// Lines starting with a letter are treated as a header.
inline std::vector<std::vector<double>> read_indexed_csv(const std::filesystem::path& path, std::size_t values) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (std::isalpha(static_cast<unsigned char>(line[line.find_first_not_of(" \t")]))) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto row = eyes_detail::parse_row(line, where);
    if (row.size() != values + 1) {
      throw IngestError(where + ": expected " + std::to_string(values + 1) + " fields, found " +
                        std::to_string(row.size()));
    }
    if (row[0] != static_cast<double>(rows.size())) {
      throw IngestError(where + ": frame index " + std::to_string(row[0]) + " breaks the 0..T-1 sequence");
    }
    row.erase(row.begin());
    rows.push_back(std::move(row));
  }
  return rows;
}

// 68-point landmark CSV: frame_index, x1, y1, ..., x68, y68.
inline std::vector<std::vector<Eigen::Vector2d>> read_landmarks_csv(const std::filesystem::path& path) {
  const auto rows = read_indexed_csv(path, 136);
  std::vector<std::vector<Eigen::Vector2d>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    std::vector<Eigen::Vector2d> pts(68);
    for (std::size_t k = 0; k < 68; ++k) pts[k] = {row[2 * k], row[2 * k + 1]};
    out.push_back(std::move(pts));
  }
  return out;
}

inline void write_landmarks_csv(const std::filesystem::path& path,
                                std::span<const std::vector<Eigen::Vector2d>> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  char buf[40];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    out << t;
    for (const auto& p : frames[t]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", p.x());
      out << buf;
      std::snprintf(buf, sizeof(buf), ",%.17g", p.y());
      out << buf;
    }
    out << '\n';
  }
}

// Eye track: per frame the 12 outline points and 2 pupils.
struct EyeFrame {
  EyeLandmarks landmarks;
  PupilPair pupils;
};

// eyes.csv rows: frame_index, left x/y * 6, right x/y * 6, left pupil, right pupil.
inline void write_eye_track(const std::filesystem::path& path, std::span<const EyeFrame> frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  char buf[40];
  auto emit = [&](const Eigen::Vector2d& p) {
    std::snprintf(buf, sizeof(buf), ",%.17g", p.x());
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g", p.y());
    out << buf;
  };
  for (std::size_t t = 0; t < frames.size(); ++t) {
    out << t;
    for (const auto& p : frames[t].landmarks.left) emit(p);
    for (const auto& p : frames[t].landmarks.right) emit(p);
    emit(frames[t].pupils.left);
    emit(frames[t].pupils.right);
    out << '\n';
  }
}

inline std::vector<EyeFrame> read_eye_track(const std::filesystem::path& path) {
  const auto rows = read_indexed_csv(path, 28);
  std::vector<EyeFrame> out(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto& r = rows[t];
    for (int k = 0; k < 6; ++k) {
      out[t].landmarks.left[k] = {r[2 * k], r[2 * k + 1]};
      out[t].landmarks.right[k] = {r[12 + 2 * k], r[12 + 2 * k + 1]};
    }
    out[t].pupils.left = {r[24], r[25]};
    out[t].pupils.right = {r[26], r[27]};
  }
  return out;
}

}  // namespace h2h
