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

// Deterministic synthetic faces, sequences and frames for tests, demos and
// benchmarks. Nothing here is needed to process real data.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "h2h/camera.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"
#include "h2h/model.hpp"
#include "h2h/raster.hpp"
#include "h2h/recon.hpp"
#include "h2h/roi.hpp"

namespace h2h::synthetic {

struct ModelSpec {
  int grid = 71;  // grid x grid vertices, 2 (grid-1)^2 triangles
  int identity_dim = 80;
  int expression_dim = 30;
  std::uint64_t seed = 7;
};

inline int grid_index(int grid, int i, int j) { return j * grid + i; }

// Height-field face on [-1, 1] x [-1.25, 1.25] with x right, y down and z
// toward the camera. Bases are smooth random deformation fields made
// orthonormal and orthogonal to the similarity motions of the mean shape,
// then rounded to binary32 so a saved model reloads bit-identically.
inline MorphableModel make_model(const ModelSpec& spec = {}) {
  const int g = spec.grid;
  if (g < 3) throw ValidationError("synthetic grid must be at least 3");
  const Eigen::Index n = static_cast<Eigen::Index>(g) * g;
  Eigen::VectorXd mean(3 * n);
  std::vector<std::array<double, 2>> uv(static_cast<std::size_t>(n));
  for (int j = 0; j < g; ++j) {
    for (int i = 0; i < g; ++i) {
      const double u = -1.0 + 2.0 * i / (g - 1);
      const double v = -1.0 + 2.0 * j / (g - 1);
      const int k = grid_index(g, i, j);
      uv[static_cast<std::size_t>(k)] = {u, v};
      const double dome = 0.55 * std::sqrt(std::max(0.05, 1.0 - 0.7 * u * u - 0.5 * v * v));
      const double nose = 0.22 * std::exp(-(u * u / 0.015 + (v - 0.08) * (v - 0.08) / 0.09));
      const double brows = 0.06 * std::exp(-((v + 0.38) * (v + 0.38) / 0.01)) * (1.0 - 0.5 * u * u);
      mean(3 * k) = u;
      mean(3 * k + 1) = 1.25 * v;
      mean(3 * k + 2) = dome + nose + brows;
    }
  }
  for (int c = 0; c < 3; ++c) {
    double m = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) m += mean(3 * k + c);
    m /= static_cast<double>(n);
    for (Eigen::Index k = 0; k < n; ++k) mean(3 * k + c) -= m;
  }
  for (Eigen::Index k = 0; k < mean.size(); ++k) mean(k) = static_cast<float>(mean(k));

  const int tangents = 7;
  const int fields = spec.identity_dim + spec.expression_dim;
  Eigen::MatrixXd stack(3 * n, tangents + fields);
  stack.setZero();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Vector3d p = mean.segment<3>(3 * k);
    for (int c = 0; c < 3; ++c) stack(3 * k + c, c) = 1.0;
    for (int a = 0; a < 3; ++a) {
      const Eigen::Vector3d w = Eigen::Vector3d::Unit(a).cross(p);
      stack.block<3, 1>(3 * k, 3 + a) = w;
    }
    stack.block<3, 1>(3 * k, 6) = p;
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  constexpr int kFreq = 8;
  for (int f = 0; f < fields; ++f) {
    std::array<std::array<std::array<double, kFreq>, kFreq>, 3> coef{};
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < kFreq; ++a) {
        for (int b = 0; b < kFreq; ++b) coef[c][a][b] = normal(rng) / ((1.0 + a + b) * (1.0 + a + b));
      }
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto [u, v] = uv[static_cast<std::size_t>(k)];
      std::array<double, kFreq> cu{}, cv{};
      for (int a = 0; a < kFreq; ++a) {
        cu[a] = std::cos(a * std::numbers::pi * (u + 1.0) / 2.0);
        cv[a] = std::cos(a * std::numbers::pi * (v + 1.0) / 2.0);
      }
      for (int c = 0; c < 3; ++c) {
        double val = 0.0;
        for (int a = 0; a < kFreq; ++a) {
          for (int b = 0; b < kFreq; ++b) val += coef[c][a][b] * cu[a] * cv[b];
        }
        stack(3 * k + c, tangents + f) = val;
      }
    }
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(3 * n, tangents + fields);
  Eigen::MatrixXd u_id = q.middleCols(tangents, spec.identity_dim).cast<float>().cast<double>();
  Eigen::MatrixXd u_exp = q.middleCols(tangents + spec.identity_dim, spec.expression_dim).cast<float>().cast<double>();

  std::vector<Triangle> tris;
  tris.reserve(static_cast<std::size_t>(2 * (g - 1) * (g - 1)));
  for (int j = 0; j + 1 < g; ++j) {
    for (int i = 0; i + 1 < g; ++i) {
      const auto a = static_cast<std::uint32_t>(grid_index(g, i, j));
      const auto b = static_cast<std::uint32_t>(grid_index(g, i + 1, j));
      const auto c = static_cast<std::uint32_t>(grid_index(g, i, j + 1));
      const auto d = static_cast<std::uint32_t>(grid_index(g, i + 1, j + 1));
      tris.push_back({a, b, c});
      tris.push_back({b, d, c});
    }
  }
  return MorphableModel(std::move(mean), std::move(u_id), std::move(u_exp), std::move(tris));
}

inline int grid_of(const MorphableModel& model) {
  return static_cast<int>(std::lround(std::sqrt(static_cast<double>(model.vertex_count()))));
}

inline ShapeCoefficients random_coefficients(const MorphableModel& model, std::mt19937_64& rng,
                                             double identity_sigma = 0.8, double expression_sigma = 0.6) {
  std::normal_distribution<double> normal;
  ShapeCoefficients c;
  c.identity = Eigen::VectorXd(model.identity_dim());
  c.expression = Eigen::VectorXd(model.expression_dim());
  for (auto& v : c.identity) v = identity_sigma * normal(rng);
  for (auto& v : c.expression) v = expression_sigma * normal(rng);
  return c;
}

// Image-space observation (x, y, depth) of a posed shape.
inline FrameObservation observe(const CameraPose& pose, const FaceShape& shape, std::size_t frame_index = 0) {
  const ProjectedVertices proj = project(pose, shape);
  FrameObservation obs;
  obs.frame_index = frame_index;
  obs.vertices.resize(shape.vertices.size());
  for (Eigen::Index k = 0; k < proj.depth.size(); ++k) {
    obs.vertices(3 * k) = proj.points(0, k);
    obs.vertices(3 * k + 1) = proj.points(1, k);
    obs.vertices(3 * k + 2) = proj.depth(k);
  }
  return obs;
}

// Vertex indices of the 68 landmarks on the synthetic grid. Eye outlines
// (36-41, 42-47) trace ellipses around the two eye centers.
inline std::array<std::uint32_t, 68> landmark_vertices(int grid) {
  auto at = [grid](double u, double v) {
    const int i = std::clamp(static_cast<int>(std::lround((u + 1.0) * 0.5 * (grid - 1))), 0, grid - 1);
    const int j = std::clamp(static_cast<int>(std::lround((v + 1.0) * 0.5 * (grid - 1))), 0, grid - 1);
    return static_cast<std::uint32_t>(grid_index(grid, i, j));
  };
  std::array<std::uint32_t, 68> idx{};
  for (int k = 0; k < 17; ++k) {  // jaw
    const double a = std::numbers::pi * (1.0 - k / 16.0);
    idx[k] = at(0.85 * std::cos(a), 0.1 + 0.8 * std::sin(a));
  }
  for (int k = 0; k < 5; ++k) idx[17 + k] = at(-0.7 + 0.13 * k, -0.42);  // brows
  for (int k = 0; k < 5; ++k) idx[22 + k] = at(0.18 + 0.13 * k, -0.42);
  for (int k = 0; k < 4; ++k) idx[27 + k] = at(0.0, -0.2 + 0.1 * k);  // nose bridge
  for (int k = 0; k < 5; ++k) idx[31 + k] = at(-0.12 + 0.06 * k, 0.22);
  const std::array<double, 6> angle{180, 120, 60, 0, -60, -120};
  for (int k = 0; k < 6; ++k) {
    const double a = angle[k] * std::numbers::pi / 180.0;
    idx[36 + k] = at(-0.38 + 0.17 * std::cos(a), -0.2 - 0.09 * std::sin(a));
    idx[42 + k] = at(0.38 + 0.17 * std::cos(a), -0.2 - 0.09 * std::sin(a));
  }
  for (int k = 0; k < 12; ++k) {  // outer lip
    const double a = 2.0 * std::numbers::pi * k / 12.0;
    idx[48 + k] = at(-0.3 * std::cos(a), 0.5 - 0.12 * std::sin(a));
  }
  for (int k = 0; k < 8; ++k) {  // inner lip
    const double a = 2.0 * std::numbers::pi * k / 8.0;
    idx[60 + k] = at(-0.2 * std::cos(a), 0.5 - 0.05 * std::sin(a));
  }
  return idx;
}

struct SequenceSpec {
  std::size_t frames = 100;
  int size = 256;
  std::uint64_t seed = 1;
  bool render_frames = true;
  double pixel_noise = 0.0;  // Gaussian sigma added to observed x, y
  double motion = 1.0;       // amplitude multiplier for pose and expression motion
};

struct Sequence {
  std::vector<CameraPose> poses;
  std::vector<ShapeCoefficients> coeffs;
  std::vector<FrameObservation> observations;
  std::vector<std::vector<Eigen::Vector2d>> landmarks;  // 68 per frame
  std::vector<PupilPair> pupils;                        // true gaze points
  std::vector<RgbImage> frames;
  std::vector<BoundingBox> boxes;
};

inline RgbImage background(int size) {
  RgbImage img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      std::uint8_t* p = img.at(x, y);
      p[0] = static_cast<std::uint8_t>(40 + 60 * x / size);
      p[1] = static_cast<std::uint8_t>(70 + 40 * y / size);
      p[2] = static_cast<std::uint8_t>(110 + ((x / 16 + y / 16) % 2) * 20);
    }
  }
  return img;
}

// Shaded, textured face over a static background, with white eyes and
// dark irises at the gaze points.
inline RgbImage render_frame(const MorphableModel& model, const TriangleColorTable& nmfc_colors,
                             const CameraPose& pose, const FaceShape& shape,
                             std::span<const Eigen::Vector2d> landmarks, const PupilPair& pupils, int size) {
  RgbImage img = background(size);
  const ProjectedVertices proj = project(pose, shape);
  const VisibilityMask mask = rasterize_projected(proj.points, proj.depth, model.triangles(), size, size);
  const Eigen::Matrix3d r = rotation_matrix(pose);
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, -0.4, 1.0).normalized();
  std::vector<std::array<std::uint8_t, 3>> shade(model.triangle_count());
  std::vector<char> ready(model.triangle_count(), 0);
  const auto pts = shape.points();
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const std::uint32_t id = mask.at(x, y);
      if (id == VisibilityMask::kNone) continue;
      if (!ready[id]) {
        const Triangle& t = model.triangles()[id];
        const Eigen::Vector3d e1 = pts.col(t[1]) - pts.col(t[0]);
        const Eigen::Vector3d e2 = pts.col(t[2]) - pts.col(t[0]);
        const Eigen::Vector3d nrm = (r * e1.cross(e2)).normalized();
        const double lambert = 0.35 + 0.65 * std::max(0.0, nrm.dot(light));
        const auto& c = nmfc_colors[id];
        // skin tone modulated by the semantic position so frames carry texture
        const double stripes = 0.85 + 0.15 * std::sin(0.25 * c[0] + 0.2 * c[1]);
        const std::array<double, 3> albedo{225.0 * stripes, 180.0 * stripes, 150.0 * stripes};
        for (int k = 0; k < 3; ++k) {
          shade[id][k] = static_cast<std::uint8_t>(std::clamp(std::lround(albedo[k] * lambert), 0L, 255L));
        }
        ready[id] = 1;
      }
      std::uint8_t* p = img.at(x, y);
      p[0] = shade[id][0];
      p[1] = shade[id][1];
      p[2] = shade[id][2];
    }
  }
  const EyeLandmarks eyes = eye_landmarks_from_68(landmarks);
  for (const auto& [eye, pupil] : {std::pair{&eyes.left, &pupils.left}, std::pair{&eyes.right, &pupils.right}}) {
    Eigen::Vector2d lo = (*eye)[0], hi = (*eye)[0];
    for (const auto& p : *eye) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double iris = 0.22 * eye_width(*eye);
    for (int y = std::max(0, int(std::floor(lo.y()))); y <= std::min(size - 1, int(std::ceil(hi.y()))); ++y) {
      for (int x = std::max(0, int(std::floor(lo.x()))); x <= std::min(size - 1, int(std::ceil(hi.x()))); ++x) {
        const Eigen::Vector2d c(x + 0.5, y + 0.5);
        if (!strictly_inside(*eye, c)) continue;
        std::uint8_t* p = img.at(x, y);
        const bool dark = (c - *pupil).norm() <= iris;
        p[0] = dark ? 30 : 245;
        p[1] = dark ? 25 : 245;
        p[2] = dark ? 20 : 240;
      }
    }
  }
  return img;
}

// Smooth pose/expression motion for one subject (fixed identity).
inline Sequence make_sequence(const MorphableModel& model, const SequenceSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal;
  const ShapeCoefficients subject = random_coefficients(model, rng);
  const double s = spec.size;

  auto wave = [&](double amp) {
    const double f1 = 0.01 + 0.04 * uniform(rng), f2 = 0.03 + 0.08 * uniform(rng);
    const double p1 = 2 * std::numbers::pi * uniform(rng), p2 = 2 * std::numbers::pi * uniform(rng);
    return [=](double t) { return amp * (0.7 * std::sin(f1 * t + p1) + 0.3 * std::sin(f2 * t + p2)); };
  };
  const double m = spec.motion;
  const auto yaw = wave(0.45 * m), pitch = wave(0.25 * m), roll = wave(0.15 * m);
  const auto dx = wave(0.05 * s * m), dy = wave(0.04 * s * m), ds = wave(0.05 * m);
  std::vector<std::function<double(double)>> expr;
  for (Eigen::Index k = 0; k < model.expression_dim(); ++k) expr.emplace_back(wave(0.6 * m));
  const auto gaze_x = wave(0.45), gaze_y = wave(0.25);

  const std::array<std::uint32_t, 68> lm_idx = landmark_vertices(grid_of(model));
  const TriangleColorTable colors(normalized_mean_face(model), model.triangles());

  Sequence seq;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double tt = static_cast<double>(t);
    CameraPose pose{yaw(tt), pitch(tt), roll(tt), 0.5 * s + dx(tt), 0.52 * s + dy(tt), 0.33 * s * (1.0 + ds(tt))};
    ShapeCoefficients c = subject;
    for (Eigen::Index k = 0; k < model.expression_dim(); ++k) c.expression(k) = expr[static_cast<std::size_t>(k)](tt);
    const FaceShape shape = assemble_shape(model, c);
    FrameObservation obs = observe(pose, shape, t);
    if (spec.pixel_noise > 0.0) {
      for (Eigen::Index k = 0; k < model.vertex_count(); ++k) {
        obs.vertices(3 * k) += spec.pixel_noise * normal(rng);
        obs.vertices(3 * k + 1) += spec.pixel_noise * normal(rng);
      }
    }
    std::vector<Eigen::Vector2d> lms(68);
    for (int k = 0; k < 68; ++k) {
      lms[k] = {obs.vertices(3 * lm_idx[k]), obs.vertices(3 * lm_idx[k] + 1)};
    }
    const EyeLandmarks eyes = eye_landmarks_from_68(lms);
    auto pupil_in = [&](const EyePolygon& eye) {
      Eigen::Vector2d center = Eigen::Vector2d::Zero();
      for (const auto& p : eye) center += p;
      center /= 6.0;
      const double w = eye_width(eye);
      return Eigen::Vector2d(center.x() + gaze_x(tt) * 0.5 * w, center.y() + gaze_y(tt) * 0.15 * w);
    };
    const PupilPair pupils{pupil_in(eyes.left), pupil_in(eyes.right)};

    if (spec.render_frames) {
      seq.frames.push_back(render_frame(model, colors, pose, shape, lms, pupils, spec.size));
    }
    // detector boxes jitter symmetrically around the full frame
    const double j = (t % 2 == 0 ? 1.0 : -1.0) * static_cast<double>((t / 2) % 4);
    seq.boxes.push_back({j, -j, s + j, s - j});
    seq.poses.push_back(pose);
    seq.coeffs.push_back(std::move(c));
    seq.observations.push_back(std::move(obs));
    seq.landmarks.push_back(std::move(lms));
    seq.pupils.push_back(pupils);
  }
  if (spec.frames % 2 == 1) seq.boxes.back() = {0.0, 0.0, s, s};
  return seq;
}

}  // namespace h2h::synthetic
