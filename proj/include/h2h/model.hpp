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
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "h2h/error.hpp"
#include "h2h/io.hpp"

namespace h2h {

using Triangle = std::array<std::uint32_t, 3>;

// Per-frame 3DMM coefficients s_t = [identity; expression].
struct ShapeCoefficients {
  Eigen::VectorXd identity;
  Eigen::VectorXd expression;
};

// Dense shape laid out [x1, y1, z1, ..., xN, yN, zN] in model units.
struct FaceShape {
  Eigen::VectorXd vertices;

  Eigen::Index vertex_count() const { return vertices.size() / 3; }

  // 3 x N view of the same storage.
  Eigen::Map<const Eigen::Matrix3Xd> points() const {
    return {vertices.data(), 3, vertex_count()};
  }
};

// Mean face rescaled into [0, 1] with one global affine map, used as the
// fixed color source for NMFC images.
struct NormalizedMeanFace {
  Eigen::VectorXd colors;
};

// Linear face model: shape = mean + U_id * s_id + U_exp * s_exp.
// Immutable after construction; the constructor validates every invariant.
class MorphableModel {
 public:
  static constexpr double kOrthonormalityTolerance = 1e-5;

  MorphableModel(Eigen::VectorXd mean_shape, Eigen::MatrixXd identity_basis,
                 Eigen::MatrixXd expression_basis, std::vector<Triangle> triangles)
      : mean_shape_(std::move(mean_shape)),
        identity_basis_(std::move(identity_basis)),
        expression_basis_(std::move(expression_basis)),
        triangles_(std::move(triangles)) {
    validate();
    joint_basis_.resize(mean_shape_.size(), identity_dim() + expression_dim());
    joint_basis_ << identity_basis_, expression_basis_;
    gram_ = Eigen::LDLT<Eigen::MatrixXd>(joint_basis_.transpose() * joint_basis_);
  }

  const Eigen::VectorXd& mean_shape() const { return mean_shape_; }
  const Eigen::MatrixXd& identity_basis() const { return identity_basis_; }
  const Eigen::MatrixXd& expression_basis() const { return expression_basis_; }
  const Eigen::MatrixXd& joint_basis() const { return joint_basis_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  Eigen::Index vertex_count() const { return mean_shape_.size() / 3; }
  Eigen::Index identity_dim() const { return identity_basis_.cols(); }
  Eigen::Index expression_dim() const { return expression_basis_.cols(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  const std::vector<Warning>& warnings() const { return warnings_; }

  // Solves the joint normal equations (U^T U) s = U^T r. With orthonormal
  // bases the Gram matrix is the identity and this is plain U^T r.
  Eigen::VectorXd solve_joint(const Eigen::VectorXd& offset) const {
    return gram_.solve(joint_basis_.transpose() * offset);
  }

 private:
  void validate() {
    const Eigen::Index len = mean_shape_.size();
    if (len == 0 || len % 3 != 0) throw DimensionError("mean shape length must be a positive multiple of 3");
    if (identity_basis_.rows() != len || expression_basis_.rows() != len) {
      throw DimensionError("basis row count does not match mean shape length");
    }
    if (!mean_shape_.allFinite() || !identity_basis_.allFinite() || !expression_basis_.allFinite()) {
      throw DegenerateModelError("model contains non-finite values");
    }
    if (identity_basis_.cols() >= len || expression_basis_.cols() >= len) {
      warnings_.push_back(Warning::kBasisDimension);
    }
    check_orthonormal(identity_basis_, "identity");
    check_orthonormal(expression_basis_, "expression");
    const auto n = static_cast<std::uint32_t>(len / 3);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      if (tri[0] >= n || tri[1] >= n || tri[2] >= n) {
        throw DegenerateModelError("triangle " + std::to_string(t) + " references a vertex out of range");
      }
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
        throw DegenerateModelError("triangle " + std::to_string(t) + " is degenerate");
      }
    }
  }

  static void check_orthonormal(const Eigen::MatrixXd& basis, const char* name) {
    if (basis.cols() == 0) return;
    const Eigen::MatrixXd gram = basis.transpose() * basis;
    const double err = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (err > kOrthonormalityTolerance) {
      throw DegenerateModelError(std::string(name) + " basis is not orthonormal (max |U^T U - I| = " +
                                 std::to_string(err) + ")");
    }
  }

  Eigen::VectorXd mean_shape_;
  Eigen::MatrixXd identity_basis_;
  Eigen::MatrixXd expression_basis_;
  std::vector<Triangle> triangles_;
  Eigen::MatrixXd joint_basis_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
  std::vector<Warning> warnings_;
};

inline void check_coefficients(const MorphableModel& model, const ShapeCoefficients& coeffs) {
  if (coeffs.identity.size() != model.identity_dim() || coeffs.expression.size() != model.expression_dim()) {
    throw DimensionError("coefficient dimensions (" + std::to_string(coeffs.identity.size()) + ", " +
                         std::to_string(coeffs.expression.size()) + ") do not match model (" +
                         std::to_string(model.identity_dim()) + ", " + std::to_string(model.expression_dim()) +
                         ")");
  }
}

inline FaceShape assemble_shape(const MorphableModel& model, const ShapeCoefficients& coeffs) {
  check_coefficients(model, coeffs);
  FaceShape shape{model.mean_shape()};
  shape.vertices.noalias() += model.identity_basis() * coeffs.identity;
  shape.vertices.noalias() += model.expression_basis() * coeffs.expression;
  return shape;
}

// Least-squares coefficients of (shape - mean) over the joint basis.
inline ShapeCoefficients project_to_bases(const MorphableModel& model, const FaceShape& shape) {
  if (shape.vertices.size() != model.mean_shape().size()) {
    throw DimensionError("shape length " + std::to_string(shape.vertices.size()) + " != 3N = " +
                         std::to_string(model.mean_shape().size()));
  }
  const Eigen::VectorXd joint = model.solve_joint(shape.vertices - model.mean_shape());
  return {joint.head(model.identity_dim()), joint.tail(model.expression_dim())};
}

inline NormalizedMeanFace normalized_mean_face(const MorphableModel& model) {
  const auto pts = Eigen::Map<const Eigen::Matrix3Xd>(model.mean_shape().data(), 3, model.vertex_count());
  const Eigen::Vector3d lo = pts.rowwise().minCoeff();
  const Eigen::Vector3d hi = pts.rowwise().maxCoeff();
  for (int axis = 0; axis < 3; ++axis) {
    if (!(hi[axis] > lo[axis])) {
      throw DegenerateModelError("mean shape has zero extent on axis " + std::to_string(axis));
    }
  }
  // one global map keeps the aspect ratio of the face in color space
  const double min_all = lo.minCoeff();
  const double extent = hi.maxCoeff() - min_all;
  NormalizedMeanFace nmf;
  nmf.colors = ((model.mean_shape().array() - min_all) / extent).matrix();
  return nmf;
}

// Model directory: manifest.json, mean_shape.f32, u_id.f32, u_exp.f32 (column-major),
// triangles.u32. All little-endian.
inline MorphableModel load_model(const std::filesystem::path& dir) {
  const auto manifest = io::read_json(dir / "manifest.json");
  std::size_t n = 0, ni = 0, ne = 0, t = 0;
  try {
    if (manifest.at("version").get<int>() != 1) throw IngestError("unsupported model version");
    n = manifest.at("vertex_count").get<std::size_t>();
    ni = manifest.at("identity_dim").get<std::size_t>();
    ne = manifest.at("expression_dim").get<std::size_t>();
    t = manifest.at("triangle_count").get<std::size_t>();
  } catch (const io::Json::exception& e) {
    throw IngestError((dir / "manifest.json").string() + ": " + e.what());
  }
  if (n == 0) throw IngestError("model has no vertices");
  const auto mean = io::read_f32(dir / "mean_shape.f32", 3 * n);
  const auto uid = ni ? io::read_f32(dir / "u_id.f32", 3 * n * ni) : std::vector<float>{};
  const auto uexp = ne ? io::read_f32(dir / "u_exp.f32", 3 * n * ne) : std::vector<float>{};
  const auto tris = t ? io::read_u32(dir / "triangles.u32", 3 * t) : std::vector<std::uint32_t>{};

  const auto rows = static_cast<Eigen::Index>(3 * n);
  Eigen::VectorXd mean_shape = Eigen::Map<const Eigen::VectorXf>(mean.data(), rows).cast<double>();
  Eigen::MatrixXd u_id =
      Eigen::Map<const Eigen::MatrixXf>(uid.data(), rows, static_cast<Eigen::Index>(ni)).cast<double>();
  Eigen::MatrixXd u_exp =
      Eigen::Map<const Eigen::MatrixXf>(uexp.data(), rows, static_cast<Eigen::Index>(ne)).cast<double>();
  std::vector<Triangle> triangles(t);
  for (std::size_t i = 0; i < t; ++i) triangles[i] = {tris[3 * i], tris[3 * i + 1], tris[3 * i + 2]};
  return MorphableModel(std::move(mean_shape), std::move(u_id), std::move(u_exp), std::move(triangles));
}

inline void save_model(const MorphableModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::Json manifest = {{"vertex_count", model.vertex_count()},
                       {"identity_dim", model.identity_dim()},
                       {"expression_dim", model.expression_dim()},
                       {"triangle_count", model.triangle_count()},
                       {"version", 1}};
  io::write_json(dir / "manifest.json", manifest);
  auto to_f32 = [](const auto& m) {
    std::vector<float> out(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
    return out;
  };
  io::write_le(dir / "mean_shape.f32", to_f32(model.mean_shape()));
  io::write_le(dir / "u_id.f32", to_f32(model.identity_basis()));
  io::write_le(dir / "u_exp.f32", to_f32(model.expression_basis()));
  std::vector<std::uint32_t> tris;
  tris.reserve(model.triangle_count() * 3);
  for (const auto& tri : model.triangles()) tris.insert(tris.end(), tri.begin(), tri.end());
  io::write_le(dir / "triangles.u32", tris);
}

}  // namespace h2h
