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

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/io.hpp"
#include "h2h/model.hpp"

namespace h2h {

// Dense per-frame vertices in image space: x, y in pixels, z relative depth
// (same units, larger is nearer).
struct FrameObservation {
  Eigen::VectorXd vertices;
  std::size_t frame_index = 0;
};

struct FrameRecovery {
  std::size_t frame_index = 0;
  CameraPose pose;
  ShapeCoefficients coeffs;
  double residual_rms = 0.0;
  int iterations = 0;
  bool converged = true;
  // Residual after each alternation step, for diagnostics.
  std::vector<double> residual_history;
};

struct RecoveryOptions {
  int max_iterations = 10;
  double coefficient_tolerance = 1e-6;
};

// Alternates scaled-orthographic pose fitting against the current shape
// estimate with projection of the de-posed observation onto the bases.
// Each half-step minimizes the same 3D residual, so the residual never grows.
inline FrameRecovery recover_frame(const MorphableModel& model, const FrameObservation& obs,
                                   const RecoveryOptions& options = {}) {
  const Eigen::Index n = model.vertex_count();
  if (obs.vertices.size() != 3 * n) {
    throw DimensionError("observation length " + std::to_string(obs.vertices.size()) + " != 3N = " +
                         std::to_string(3 * n));
  }
  if (!obs.vertices.allFinite()) throw DegenerateConfigError("observation contains non-finite values");

  const Eigen::Map<const Eigen::Matrix3Xd> observed(obs.vertices.data(), 3, n);
  const Eigen::Matrix2Xd observed_xy = observed.topRows<2>();
  const Eigen::VectorXd observed_z = observed.row(2).transpose();

  FrameRecovery best;
  best.frame_index = obs.frame_index;
  best.residual_rms = std::numeric_limits<double>::infinity();
  best.converged = false;

  FaceShape shape{model.mean_shape()};
  Eigen::VectorXd previous;
  Eigen::Matrix3Xd deposed(3, n);
  std::vector<double> history;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const PoseEstimate est = estimate_pose(shape.points(), observed_xy, observed_z);
    const Eigen::Matrix3d r = rotation_matrix(est.pose);
    const Eigen::Vector3d t(est.pose.tx, est.pose.ty, est.depth_offset);
    const double s = est.pose.scale;

    // v' = (1/s) R^T (q - t)
    deposed.noalias() = (r.transpose() / s) * (observed.colwise() - t);
    FaceShape deposed_shape{Eigen::Map<const Eigen::VectorXd>(deposed.data(), 3 * n)};
    ShapeCoefficients coeffs = project_to_bases(model, deposed_shape);
    shape = assemble_shape(model, coeffs);

    const Eigen::Matrix3Xd predicted = ((s * r) * shape.points()).colwise() + t;
    const double rms = std::sqrt((observed - predicted).squaredNorm() / static_cast<double>(3 * n));
    history.push_back(rms);

    Eigen::VectorXd joint(model.identity_dim() + model.expression_dim());
    joint << coeffs.identity, coeffs.expression;
    const bool converged =
        previous.size() == joint.size() &&
        (joint - previous).norm() <= options.coefficient_tolerance * joint.norm() + 1e-12;

    if (rms <= best.residual_rms) {
      best.pose = est.pose;
      best.coeffs = std::move(coeffs);
      best.residual_rms = rms;
    }
    best.iterations = iter;
    previous = std::move(joint);
    if (converged) {
      best.converged = true;
      break;
    }
  }
  best.residual_history = std::move(history);
  return best;
}

inline bool has_convergence_warning(const FrameRecovery& r) { return !r.converged; }

// Sequence-average identity coefficients.
inline Eigen::VectorXd average_identity(std::span<const FrameRecovery> recoveries) {
  if (recoveries.empty()) throw EmptyInputError("average_identity needs at least one frame");
  const Eigen::Index dim = recoveries.front().coeffs.identity.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& r : recoveries) {
    if (r.coeffs.identity.size() != dim) throw DimensionError("identity dimensions differ across frames");
    sum += r.coeffs.identity;
  }
  return sum / static_cast<double>(recoveries.size());
}

// ---- files ----

// Observation directory: obs_manifest.json {vertex_count, frame_count} and
// frame_%06d.f32 vectors of length 3N.
inline std::vector<FrameObservation> load_observations(const std::filesystem::path& dir) {
  const auto manifest = io::read_json(dir / "obs_manifest.json");
  std::size_t n = 0, frames = 0;
  try {
    n = manifest.at("vertex_count").get<std::size_t>();
    frames = manifest.at("frame_count").get<std::size_t>();
  } catch (const io::Json::exception& e) {
    throw IngestError((dir / "obs_manifest.json").string() + ": " + e.what());
  }
  const std::size_t on_disk = io::count_sequence(dir, "frame", "f32");
  if (on_disk != frames) {
    throw IngestError(dir.string() + ": manifest lists " + std::to_string(frames) + " frames, found " +
                      std::to_string(on_disk));
  }
  std::vector<FrameObservation> out(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto values = io::read_f32(dir / io::numbered("frame", t, "f32"), 3 * n);
    out[t].vertices = Eigen::Map<const Eigen::VectorXf>(values.data(), static_cast<Eigen::Index>(values.size()))
                          .cast<double>();
    out[t].frame_index = t;
  }
  return out;
}

inline void save_observations(std::span<const FrameObservation> frames, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t n = frames.empty() ? 0 : static_cast<std::size_t>(frames.front().vertices.size() / 3);
  io::write_json(dir / "obs_manifest.json", {{"vertex_count", n}, {"frame_count", frames.size()}});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::vector<float> values(frames[t].vertices.size());
    for (Eigen::Index i = 0; i < frames[t].vertices.size(); ++i) {
      values[static_cast<std::size_t>(i)] = static_cast<float>(frames[t].vertices(i));
    }
    io::write_le(dir / io::numbered("frame", t, "f32"), values);
  }
}

inline io::Json recoveries_to_json(std::span<const FrameRecovery> recoveries) {
  io::Json arr = io::Json::array();
  for (const auto& r : recoveries) {
    io::Json id = io::Json::array();
    for (double v : r.coeffs.identity) id.push_back(v);
    io::Json ex = io::Json::array();
    for (double v : r.coeffs.expression) ex.push_back(v);
    arr.push_back({{"frame_index", r.frame_index},
                   {"pose", pose_to_json(r.pose)},
                   {"identity", std::move(id)},
                   {"expression", std::move(ex)},
                   {"residual_rms", r.residual_rms}});
  }
  return arr;
}

inline std::vector<FrameRecovery> recoveries_from_json(const io::Json& j) {
  if (!j.is_array()) throw IngestError("recovery JSON must be an array");
  std::vector<FrameRecovery> out;
  out.reserve(j.size());
  try {
    for (const auto& e : j) {
      FrameRecovery r;
      r.frame_index = e.at("frame_index").get<std::size_t>();
      r.pose = pose_from_json(e.at("pose"));
      const auto id = e.at("identity").get<std::vector<double>>();
      const auto ex = e.at("expression").get<std::vector<double>>();
      r.coeffs.identity = Eigen::Map<const Eigen::VectorXd>(id.data(), static_cast<Eigen::Index>(id.size()));
      r.coeffs.expression = Eigen::Map<const Eigen::VectorXd>(ex.data(), static_cast<Eigen::Index>(ex.size()));
      r.residual_rms = e.at("residual_rms").get<double>();
      out.push_back(std::move(r));
    }
  } catch (const io::Json::exception& e) {
    throw IngestError(std::string("bad recovery JSON: ") + e.what());
  }
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (out[t].frame_index != t) throw IngestError("recovery frame indices must be 0..T-1 in order");
  }
  return out;
}

inline std::vector<FrameRecovery> load_recoveries(const std::filesystem::path& path) {
  return recoveries_from_json(io::read_json(path));
}

}  // namespace h2h
