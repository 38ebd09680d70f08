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

// Brute-force reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace h2h::oracle {

// Plain triple-loop matrix-vector product.
inline std::vector<double> matvec(const Eigen::MatrixXd& a, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(a.rows()), 0.0);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += a(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

// Gaussian elimination with partial pivoting on a dense copy.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// Least squares via explicit normal equations (U^T U) s = U^T r.
inline std::vector<double> normal_equations(const Eigen::MatrixXd& u, const std::vector<double>& r) {
  const auto k = static_cast<std::size_t>(u.cols());
  std::vector<std::vector<double>> gram(k, std::vector<double>(k, 0.0));
  std::vector<double> rhs(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (Eigen::Index row = 0; row < u.rows(); ++row) s += u(row, i) * u(row, j);
      gram[i][j] = s;
    }
    double s = 0.0;
    for (Eigen::Index row = 0; row < u.rows(); ++row) s += u(row, i) * r[static_cast<std::size_t>(row)];
    rhs[i] = s;
  }
  return gauss_solve(gram, rhs);
}

// Neumaier compensated sum.
inline double compensated_sum(const std::vector<double>& xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

// Random matrix with orthonormal columns (QR of a Gaussian matrix).
inline Eigen::MatrixXd random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Matrix3d q = random_orthonormal(3, 3, rng);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

// ---- rasterization ----

struct RasterTriangle {
  std::array<double, 3> x, y, z;
};

// Per-pixel scan over every triangle, evaluated independently at each pixel
// center. Coverage contract: vertices snapped to 1/256 px with llround, pixel
// center (u + 0.5, v + 0.5), positive-area faces only, top-left ownership of
// boundary samples, barycentric depth (larger wins), ties to lower index.
inline std::vector<std::uint32_t> raster_oracle(const std::vector<RasterTriangle>& tris, int w, int h) {
  constexpr std::uint32_t kNone = 0xFFFFFFFFu;
  std::vector<std::uint32_t> out(static_cast<std::size_t>(w) * h, kNone);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::int64_t px = std::int64_t{u} * 256 + 128, py = std::int64_t{v} * 256 + 128;
      double best = -std::numeric_limits<double>::infinity();
      std::uint32_t best_id = kNone;
      for (std::size_t t = 0; t < tris.size(); ++t) {
        std::array<std::int64_t, 3> sx, sy;
        for (int k = 0; k < 3; ++k) {
          sx[k] = std::llround(tris[t].x[k] * 256.0);
          sy[k] = std::llround(tris[t].y[k] * 256.0);
        }
        const std::int64_t area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0]);
        if (area <= 0) continue;
        std::array<std::int64_t, 3> wgt;
        bool inside = true;
        for (int k = 0; k < 3; ++k) {
          const int a = (k + 1) % 3, b = (k + 2) % 3;
          const std::int64_t ex = sx[b] - sx[a], ey = sy[b] - sy[a];
          wgt[k] = ex * (py - sy[a]) - ey * (px - sx[a]);
          const bool owns_boundary = (ey == 0 && ex > 0) || ey < 0;
          if (wgt[k] < 0 || (wgt[k] == 0 && !owns_boundary)) inside = false;
        }
        if (!inside) continue;
        const double z = (static_cast<double>(wgt[0]) * tris[t].z[0] + static_cast<double>(wgt[1]) * tris[t].z[1] +
                          static_cast<double>(wgt[2]) * tris[t].z[2]) *
                         (1.0 / static_cast<double>(area));
        if (z > best || (z == best && t < best_id)) {
          best = z;
          best_id = static_cast<std::uint32_t>(t);
        }
      }
      out[static_cast<std::size_t>(v) * w + u] = best_id;
    }
  }
  return out;
}

// Random screen-space mesh that stresses the fill rules: vertices on the
// half-pixel lattice so pixel centers land exactly on edges, quads split
// into triangle pairs sharing a diagonal, mixed winding, and runs of equal
// depth so index tie-breaking matters.
struct ScreenMesh {
  std::vector<double> x, y, z;
  std::vector<std::array<std::uint32_t, 3>> tris;

  std::vector<RasterTriangle> triangles() const {
    std::vector<RasterTriangle> out;
    for (const auto& t : tris) {
      out.push_back({{x[t[0]], x[t[1]], x[t[2]]}, {y[t[0]], y[t[1]], y[t[2]]}, {z[t[0]], z[t[1]], z[t[2]]}});
    }
    return out;
  }
};

inline ScreenMesh random_screen_mesh(std::mt19937_64& rng, int w, int h, std::size_t max_tris = 50) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> tri_count(1, max_tris);
  ScreenMesh m;
  const bool flat = unit(rng) < 0.3;
  const double extent = unit(rng) < 0.5 ? 0.4 : 1.0;  // small or frame-sized triangles
  auto add_vertex = [&] {
    double x = -6.0 + (w + 12.0) * unit(rng), y = -6.0 + (h + 12.0) * unit(rng);
    const double r = unit(rng);
    if (r < 0.5) {
      x = std::round(2.0 * x) / 2.0;
      y = std::round(2.0 * y) / 2.0;
    } else if (r < 0.7) {
      x = std::round(256.0 * x) / 256.0;
      y = std::round(256.0 * y) / 256.0;
    }
    m.x.push_back(x);
    m.y.push_back(y);
    m.z.push_back(flat ? 0.0 : std::round(4.0 * unit(rng)) / 4.0 + (unit(rng) < 0.5 ? 0.0 : unit(rng)));
    return static_cast<std::uint32_t>(m.x.size() - 1);
  };
  auto near_vertex = [&](std::uint32_t base) {
    const std::uint32_t v = add_vertex();
    m.x[v] = m.x[base] + std::round((m.x[v] - m.x[base]) * extent * 2.0) / 2.0;
    m.y[v] = m.y[base] + std::round((m.y[v] - m.y[base]) * extent * 2.0) / 2.0;
    return v;
  };
  const std::size_t target = tri_count(rng);
  while (m.tris.size() < target) {
    const double r = unit(rng);
    if (r < 0.4 && m.tris.size() + 2 <= target) {
      // quad split along a diagonal; both halves wound the same way
      const std::uint32_t a = add_vertex(), b = near_vertex(a), c = near_vertex(a), d = near_vertex(a);
      m.tris.push_back({a, b, c});
      m.tris.push_back({a, c, d});
    } else if (r < 0.6 && !m.tris.empty()) {
      // fan off an existing edge, reusing its vertices
      const auto& t = m.tris[static_cast<std::size_t>(unit(rng) * m.tris.size()) % m.tris.size()];
      const std::uint32_t a = t[0], b = t[1];
      m.tris.push_back({b, a, near_vertex(a)});
    } else {
      const std::uint32_t a = add_vertex();
      m.tris.push_back({a, near_vertex(a), near_vertex(a)});
    }
  }
  while (m.tris.size() > target) m.tris.pop_back();
  return m;
}

// ---- eyes ----

// Winding number of a closed polygon around p (non-zero = inside for simple
// polygons).
inline int winding_number(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  int wn = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    const double side = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
    if (a.y() <= p.y()) {
      if (b.y() > p.y() && side > 0) ++wn;
    } else {
      if (b.y() <= p.y() && side < 0) --wn;
    }
  }
  return wn;
}

inline bool on_boundary(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& a = poly[i];
    const Eigen::Vector2d& b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y());
    if (cross == 0.0 && p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) &&
        p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y())) {
      return true;
    }
  }
  return false;
}

// Random eye-like hexagon (jittered ellipse) inside a w x h frame, with
// vertices sometimes snapped to the half-pixel lattice.
inline std::vector<Eigen::Vector2d> random_eye(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double rx = 3.0 + 12.0 * unit(rng), ry = 1.5 + 6.0 * unit(rng);
  const double cx = rx + 1 + (w - 2 * rx - 2) * unit(rng), cy = ry + 1 + (h - 2 * ry - 2) * unit(rng);
  const bool snap = unit(rng) < 0.5;
  std::vector<Eigen::Vector2d> poly;
  for (int k = 0; k < 6; ++k) {
    const double a = std::numbers::pi * (1.0 - k / 3.0) + 0.3 * (unit(rng) - 0.5);
    Eigen::Vector2d p(cx + rx * std::cos(a), cy - ry * std::sin(a));
    if (snap) p = (2.0 * p).array().round() / 2.0;
    poly.push_back(p);
  }
  return poly;
}

// Weighted centroid over every pixel of the frame.
inline Eigen::Vector2d pupil_oracle(const std::vector<Eigen::Vector2d>& poly, const std::vector<std::uint8_t>& gray,
                                    int w, int h) {
  double sw = 0, sx = 0, sy = 0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector2d c(u + 0.5, v + 0.5);
      if (on_boundary(poly, c) || winding_number(poly, c) == 0) continue;
      const double wt = 255.0 - gray[static_cast<std::size_t>(v) * w + u];
      sw += wt;
      sx += wt * c.x();
      sy += wt * c.y();
    }
  }
  return {sx / sw, sy / sw};
}

}  // namespace h2h::oracle
