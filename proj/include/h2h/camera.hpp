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
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "h2h/error.hpp"
#include "h2h/io.hpp"
#include "h2h/model.hpp"

namespace h2h {

// Scaled-orthographic camera: q = scale * Pi(R v) + (tx, ty).
//
// Angles are intrinsic yaw (about y), pitch (about x), roll (about z),
// composed as R = Rz(roll) * Rx(pitch) * Ry(yaw). Camera-space depth is the
// rotated z scaled by `scale`; larger depth is nearer the camera.
struct CameraPose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double scale = 1.0;

  bool operator==(const CameraPose&) const = default;
};

// Maps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline void validate_pose(const CameraPose& p) {
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) throw InvalidPoseError("camera scale must be positive and finite");
  if (!std::isfinite(p.yaw) || !std::isfinite(p.pitch) || !std::isfinite(p.roll) || !std::isfinite(p.tx) ||
      !std::isfinite(p.ty)) {
    throw InvalidPoseError("camera pose has non-finite parameters");
  }
}

inline Eigen::Matrix3d compose_rotation(double yaw, double pitch, double roll) {
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return rz * rx * ry;
}

inline Eigen::Matrix3d rotation_matrix(const CameraPose& p) { return compose_rotation(p.yaw, p.pitch, p.roll); }

struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  // Set when |pitch| is within 1e-6 of pi/2; roll is then pinned to 0.
  bool gimbal_lock = false;
};

inline EulerAngles decompose_rotation(const Eigen::Matrix3d& r) {
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() > 1e-6 || r.determinant() < 0.0) {
    throw InvalidPoseError("decompose_rotation requires a proper orthonormal matrix");
  }
  // Third row of Rz Rx Ry is (-cos p sin y, sin p, cos p cos y), independent of roll.
  EulerAngles e;
  const double sp = std::clamp(r(2, 1), -1.0, 1.0);
  e.pitch = std::asin(sp);
  if (std::abs(std::abs(e.pitch) - std::numbers::pi / 2) < 1e-6) {
    e.gimbal_lock = true;
    e.roll = 0.0;
    e.yaw = std::atan2(r(0, 2), r(0, 0));
  } else {
    e.yaw = std::atan2(-r(2, 0), r(2, 2));
    e.roll = std::atan2(-r(0, 1), r(1, 1));
  }
  e.yaw = wrap_angle(e.yaw);
  e.roll = wrap_angle(e.roll);
  return e;
}

// Image-plane points plus camera-space depth for every vertex.
struct ProjectedVertices {
  Eigen::Matrix2Xd points;
  Eigen::VectorXd depth;
};

inline ProjectedVertices project(const CameraPose& pose, const Eigen::Ref<const Eigen::Matrix3Xd>& vertices) {
  validate_pose(pose);
  const Eigen::Matrix3d sr = pose.scale * rotation_matrix(pose);
  ProjectedVertices out;
  Eigen::Matrix3Xd rotated = sr * vertices;
  out.points = rotated.topRows<2>();
  out.points.row(0).array() += pose.tx;
  out.points.row(1).array() += pose.ty;
  out.depth = rotated.row(2).transpose();
  return out;
}

inline ProjectedVertices project(const CameraPose& pose, const FaceShape& shape) {
  return project(pose, shape.points());
}

struct PoseEstimate {
  CameraPose pose;
  // RMS over every fitted coordinate (2 per point, or 3 when depths are used).
  double residual_rms = 0.0;
  // Fitted depth translation. Not part of the 6-parameter pose.
  double depth_offset = 0.0;
};

namespace detail {

inline void check_spread(const Eigen::Matrix3Xd& centered) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(centered * centered.transpose());
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(2) <= 1e-12 * sv(0)) {
    throw DegenerateConfigError("model points are collinear or coplanar");
  }
}

inline PoseEstimate finish(const Eigen::Matrix3d& r, double scale, double tx, double ty, double tz) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DegenerateConfigError("pose fit produced a non-positive scale");
  const EulerAngles e = decompose_rotation(r);
  PoseEstimate est;
  est.pose = {e.yaw, e.pitch, e.roll, tx, ty, scale};
  est.depth_offset = tz;
  return est;
}

// 3D similarity Procrustes (Umeyama) with Kabsch reflection correction.
inline PoseEstimate fit_similarity(const Eigen::Matrix3Xd& model, const Eigen::Matrix3Xd& observed) {
  const Eigen::Vector3d mu_m = model.rowwise().mean();
  const Eigen::Vector3d mu_o = observed.rowwise().mean();
  const Eigen::Matrix3Xd cm = model.colwise() - mu_m;
  const Eigen::Matrix3Xd co = observed.colwise() - mu_o;
  check_spread(cm);
  const Eigen::Matrix3d cov = co * cm.transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sign(1.0, 1.0, 1.0);
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  const double scale = svd.singularValues().dot(sign) / cm.squaredNorm();
  const Eigen::Vector3d t = mu_o - scale * r * mu_m;
  PoseEstimate est = finish(r, scale, t(0), t(1), t(2));
  const Eigen::Matrix3d r_pose = rotation_matrix(est.pose);
  const Eigen::Matrix3Xd predicted = (scale * r_pose * model).colwise() + t;
  const Eigen::Matrix3Xd resid = observed - predicted;
  est.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
  return est;
}

inline double residual_2d(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& observed, const Eigen::Matrix3d& r,
                          double scale, const Eigen::Vector2d& t) {
  const Eigen::Matrix2Xd pred = ((scale * r).topRows<2>() * model).colwise() + t;
  return (observed - pred).squaredNorm();
}

// Scaled-orthographic fit from 2D observations only: closed-form affine
// camera orthonormalized by SVD, then Gauss-Newton on (rotation, scale, t).
inline PoseEstimate fit_orthographic(const Eigen::Matrix3Xd& model, const Eigen::Matrix2Xd& observed) {
  const Eigen::Vector3d mu_m = model.rowwise().mean();
  const Eigen::Vector2d mu_o = observed.rowwise().mean();
  const Eigen::Matrix3Xd cm = model.colwise() - mu_m;
  const Eigen::Matrix2Xd co = observed.colwise() - mu_o;
  check_spread(cm);

  const Eigen::Matrix<double, 2, 3> affine = (co * cm.transpose()) * (cm * cm.transpose()).inverse();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 2, 3>> svd(affine, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<double, 2, 3> rows = svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
  Eigen::Matrix3d r;
  r.row(0) = rows.row(0);
  r.row(1) = rows.row(1);
  r.row(2) = rows.row(0).cross(rows.row(1));
  double scale = 0.5 * (svd.singularValues()(0) + svd.singularValues()(1));
  Eigen::Vector2d t = mu_o - scale * (r * mu_m).head<2>();

  double cost = residual_2d(model, observed, r, scale, t);
  for (int iter = 0; iter < 20 && cost > 0.0; ++iter) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    const Eigen::Matrix3Xd rotated = r * model;
    for (Eigen::Index i = 0; i < model.cols(); ++i) {
      const Eigen::Vector3d w = rotated.col(i);
      const Eigen::Vector2d res = observed.col(i) - scale * w.head<2>() - t;
      // d(prediction)/d(omega, scale, tx, ty) for R <- exp([omega]x) R
      Eigen::Matrix<double, 2, 6> j;
      j << 0.0, scale * w(2), -scale * w(1), w(0), 1.0, 0.0,
          -scale * w(2), 0.0, scale * w(0), w(1), 0.0, 1.0;
      jtj.noalias() += j.transpose() * j;
      jtr.noalias() += j.transpose() * res;
    }
    const Eigen::Matrix<double, 6, 1> step = jtj.ldlt().solve(jtr);
    if (!step.allFinite()) break;
    const double angle = step.head<3>().norm();
    Eigen::Matrix3d dr = Eigen::Matrix3d::Identity();
    if (angle > 0.0) dr = Eigen::AngleAxisd(angle, step.head<3>() / angle).toRotationMatrix();
    const Eigen::Matrix3d r_new = dr * r;
    const double s_new = scale + step(3);
    const Eigen::Vector2d t_new = t + step.tail<2>();
    const double cost_new = residual_2d(model, observed, r_new, s_new, t_new);
    if (!(cost_new < cost) || !(s_new > 0.0)) break;
    const bool small = cost - cost_new <= 1e-15 * cost;
    r = r_new;
    scale = s_new;
    t = t_new;
    cost = cost_new;
    if (small) break;
  }
  PoseEstimate est = finish(r, scale, t(0), t(1), 0.0);
  est.residual_rms = std::sqrt(residual_2d(model, observed, rotation_matrix(est.pose), scale, t) /
                               static_cast<double>(observed.size()));
  return est;
}

}  // namespace detail

// Least-squares scaled-orthographic pose mapping `model_points` onto
// `observed`. With `depths`, the observations are full image-space 3D points
// and a 3D similarity fit is used; its depth translation is reported
// separately in depth_offset.
inline PoseEstimate estimate_pose(const Eigen::Ref<const Eigen::Matrix3Xd>& model_points,
                                  const Eigen::Ref<const Eigen::Matrix2Xd>& observed,
                                  const std::optional<Eigen::VectorXd>& depths = std::nullopt) {
  if (model_points.cols() != observed.cols()) throw DimensionError("model and observed point counts differ");
  if (depths && depths->size() != observed.cols()) throw DimensionError("depth count differs from point count");
  if (model_points.cols() < 4) throw DegenerateConfigError("pose estimation needs at least 4 points");
  if (!model_points.allFinite() || !observed.allFinite() || (depths && !depths->allFinite())) {
    throw DegenerateConfigError("non-finite correspondences");
  }
  if (depths) {
    Eigen::Matrix3Xd obs3(3, observed.cols());
    obs3.topRows<2>() = observed;
    obs3.row(2) = depths->transpose();
    return detail::fit_similarity(model_points, obs3);
  }
  return detail::fit_orthographic(model_points, observed);
}

inline io::Json pose_to_json(const CameraPose& p) {
  return {{"yaw", p.yaw}, {"pitch", p.pitch}, {"roll", p.roll}, {"tx", p.tx}, {"ty", p.ty}, {"scale", p.scale}};
}

inline CameraPose pose_from_json(const io::Json& j) {
  CameraPose p;
  try {
    p.yaw = j.at("yaw").get<double>();
    p.pitch = j.at("pitch").get<double>();
    p.roll = j.at("roll").get<double>();
    p.tx = j.at("tx").get<double>();
    p.ty = j.at("ty").get<double>();
    p.scale = j.at("scale").get<double>();
  } catch (const io::Json::exception& e) {
    throw IngestError(std::string("bad pose JSON: ") + e.what());
  }
  validate_pose(p);
  return p;
}

}  // namespace h2h
