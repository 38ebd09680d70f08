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
#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "h2h/camera.hpp"
#include "oracles.hpp"

namespace h2h {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Matrix3Xd random_cloud(std::mt19937_64& rng, Eigen::Index n = 50) {
  std::normal_distribution<double> normal;
  Eigen::Matrix3Xd v(3, n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  return v;
}

CameraPose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-1.2, 1.2), trans(-100, 100), scale(0.2, 5.0);
  return {ang(rng), ang(rng), ang(rng), trans(rng), trans(rng), scale(rng)};
}

void expect_pose_near(const CameraPose& a, const CameraPose& b, double tol) {
  EXPECT_NEAR(wrap_angle(a.yaw - b.yaw), 0.0, tol);
  EXPECT_NEAR(wrap_angle(a.pitch - b.pitch), 0.0, tol);
  EXPECT_NEAR(wrap_angle(a.roll - b.roll), 0.0, tol);
  EXPECT_NEAR(a.tx, b.tx, tol * std::max(1.0, std::abs(b.tx)));
  EXPECT_NEAR(a.ty, b.ty, tol * std::max(1.0, std::abs(b.ty)));
  EXPECT_NEAR(a.scale, b.scale, tol * b.scale);
}

TEST(Project, IdentityCamera) {
  const Eigen::Matrix3Xd v = Eigen::Vector3d(1.5, -2.0, 7.0);
  const auto p = project(CameraPose{}, v);
  EXPECT_DOUBLE_EQ(p.points(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(p.points(1, 0), -2.0);
  EXPECT_DOUBLE_EQ(p.depth(0), 7.0);
}

TEST(Project, ScaleAndTranslation) {
  const Eigen::Matrix3Xd v = Eigen::Vector3d(1.0, 0.0, 5.0);
  const auto p = project(CameraPose{0, 0, 0, 1, 1, 2}, v);
  EXPECT_DOUBLE_EQ(p.points(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(p.points(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(p.depth(0), 10.0);
}

TEST(Project, RollNinetyDegrees) {
  const Eigen::Matrix3Xd v = Eigen::Vector3d(1.0, 0.0, 0.0);
  const auto p = project(CameraPose{0, 0, 90 * kDeg, 0, 0, 1}, v);
  EXPECT_NEAR(p.points(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(p.points(1, 0), 1.0, 1e-15);
}

TEST(Project, RejectsInvalidPose) {
  const Eigen::Matrix3Xd v = Eigen::Vector3d(1.0, 0.0, 0.0);
  EXPECT_THROW(project(CameraPose{0, 0, 0, 0, 0, 0}, v), InvalidPoseError);
  EXPECT_THROW(project(CameraPose{0, 0, 0, 0, 0, -1}, v), InvalidPoseError);
  EXPECT_THROW(project(CameraPose{std::nan(""), 0, 0, 0, 0, 1}, v), InvalidPoseError);
}

TEST(Rotation, ZeroAnglesGiveIdentity) {
  EXPECT_EQ(compose_rotation(0, 0, 0), Eigen::Matrix3d::Identity());
}

TEST(Rotation, RollIsPlanarRotation) {
  const double a = 30 * kDeg;
  Eigen::Matrix3d expect;
  expect << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  EXPECT_LE((compose_rotation(0, 0, a) - expect).norm(), 1e-15);
}

TEST(Rotation, ConventionIsRzRxRy) {
  const double y = 0.3, p = -0.7, r = 1.1;
  const double cy = std::cos(y), sy = std::sin(y), cp = std::cos(p), sp = std::sin(p), cr = std::cos(r),
               sr = std::sin(r);
  Eigen::Matrix3d ry, rx, rz;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rx << 1, 0, 0, 0, cp, -sp, 0, sp, cp;
  rz << cr, -sr, 0, sr, cr, 0, 0, 0, 1;
  EXPECT_LE((compose_rotation(y, p, r) - rz * rx * ry).norm(), 1e-15);
}

TEST(Rotation, RandomRotationsRoundTrip) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Matrix3d r = oracle::random_rotation(rng);
    const EulerAngles e = decompose_rotation(r);
    EXPECT_LE((compose_rotation(e.yaw, e.pitch, e.roll) - r).norm(), 1e-9);
  }
}

TEST(Rotation, AnglesRoundTripAwayFromGimbalLock) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> full(-std::numbers::pi + 1e-9, std::numbers::pi),
      half(-std::numbers::pi / 2 + 1e-3, std::numbers::pi / 2 - 1e-3);
  for (int trial = 0; trial < 1000; ++trial) {
    const double y = full(rng), p = half(rng), r = full(rng);
    const EulerAngles e = decompose_rotation(compose_rotation(y, p, r));
    EXPECT_FALSE(e.gimbal_lock);
    EXPECT_NEAR(wrap_angle(e.yaw - y), 0.0, 1e-9);
    EXPECT_NEAR(e.pitch, p, 1e-9);
    EXPECT_NEAR(wrap_angle(e.roll - r), 0.0, 1e-9);
  }
}

TEST(Rotation, GimbalLockPinsRoll) {
  for (const double pitch : {std::numbers::pi / 2, -std::numbers::pi / 2}) {
    const Eigen::Matrix3d r = compose_rotation(0.4, pitch, 0.25);
    const EulerAngles e = decompose_rotation(r);
    EXPECT_TRUE(e.gimbal_lock);
    EXPECT_EQ(e.roll, 0.0);
    EXPECT_LE((compose_rotation(e.yaw, e.pitch, e.roll) - r).norm(), 1e-9);
  }
}

TEST(Rotation, DecomposeRejectsNonRotations) {
  EXPECT_THROW(decompose_rotation(2.0 * Eigen::Matrix3d::Identity()), InvalidPoseError);
  EXPECT_THROW(decompose_rotation(Eigen::Vector3d(1, 1, -1).asDiagonal().toDenseMatrix()), InvalidPoseError);
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(wrap_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(358 * kDeg), -2 * kDeg, 1e-14);
}

TEST(EstimatePose, VerbatimObservationIsIdentity) {
  std::mt19937_64 rng(3);
  const Eigen::Matrix3Xd v = random_cloud(rng);
  const Eigen::VectorXd depth = v.row(2).transpose();
  const auto est = estimate_pose(v, v.topRows<2>(), depth);
  expect_pose_near(est.pose, CameraPose{}, 1e-12);
  EXPECT_NEAR(est.depth_offset, 0.0, 1e-12);
  EXPECT_NEAR(est.residual_rms, 0.0, 1e-12);
}

TEST(EstimatePose, RecoversScaledRollAndTranslation) {
  std::mt19937_64 rng(4);
  const Eigen::Matrix3Xd v = random_cloud(rng);
  const CameraPose truth{0, 0, 30 * kDeg, 5, -3, 2};
  const auto proj = project(truth, v);
  for (const bool with_depth : {true, false}) {
    const auto est = with_depth ? estimate_pose(v, proj.points, proj.depth) : estimate_pose(v, proj.points);
    expect_pose_near(est.pose, truth, 1e-9);
    EXPECT_LE(est.residual_rms, 1e-9);
  }
}

TEST(EstimatePose, DegenerateConfigurations) {
  Eigen::Matrix3Xd line(3, 10), plane(3, 10);
  for (int i = 0; i < 10; ++i) {
    line.col(i) = Eigen::Vector3d(1, 2, 3) * i + Eigen::Vector3d(0.5, 0, 0);
    plane.col(i) = Eigen::Vector3d(i % 3, i / 3, 0.0);
  }
  EXPECT_THROW(estimate_pose(line, line.topRows<2>(), Eigen::VectorXd(line.row(2).transpose())),
               DegenerateConfigError);
  EXPECT_THROW(estimate_pose(line, line.topRows<2>()), DegenerateConfigError);
  EXPECT_THROW(estimate_pose(plane, plane.topRows<2>()), DegenerateConfigError);
  EXPECT_THROW(estimate_pose(plane.leftCols(3), plane.topRows<2>().leftCols(3)), DegenerateConfigError);
}

TEST(EstimatePose, DimensionMismatch) {
  std::mt19937_64 rng(5);
  const Eigen::Matrix3Xd v = random_cloud(rng, 10);
  EXPECT_THROW(estimate_pose(v, v.topRows<2>().leftCols(9)), DimensionError);
  EXPECT_THROW(estimate_pose(v, v.topRows<2>(), Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST(EstimatePose, ReprojectsNoiselessObservations) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Matrix3Xd v = random_cloud(rng);
    const CameraPose truth = random_pose(rng);
    const auto proj = project(truth, v);
    for (const bool with_depth : {true, false}) {
      const auto est = with_depth ? estimate_pose(v, proj.points, proj.depth) : estimate_pose(v, proj.points);
      const auto re = project(est.pose, v);
      const double rms = std::sqrt((re.points - proj.points).squaredNorm() / static_cast<double>(proj.points.size()));
      EXPECT_LE(rms, 1e-8) << "trial " << trial << " depth " << with_depth;
    }
  }
}

TEST(EstimatePose, EquivariantToModelRotation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3Xd v = random_cloud(rng);
    const CameraPose truth = random_pose(rng);
    const auto proj = project(truth, v);
    const Eigen::Matrix3d r0 = oracle::random_rotation(rng);
    for (const bool with_depth : {true, false}) {
      const Eigen::Matrix3Xd rotated = r0 * v;
      const auto a = with_depth ? estimate_pose(v, proj.points, proj.depth) : estimate_pose(v, proj.points);
      const auto b =
          with_depth ? estimate_pose(rotated, proj.points, proj.depth) : estimate_pose(rotated, proj.points);
      EXPECT_LE((rotation_matrix(b.pose) - rotation_matrix(a.pose) * r0.transpose()).norm(), 1e-6);
      EXPECT_NEAR(b.pose.scale, a.pose.scale, 1e-6 * a.pose.scale);
    }
  }
}

TEST(EstimatePose, ReflectedObservationsYieldProperRotation) {
  std::mt19937_64 rng(8);
  const Eigen::Matrix3Xd v = random_cloud(rng);
  Eigen::Matrix3Xd mirrored = v;
  mirrored.row(2) *= -1.0;  // observations come from the mirror image
  const auto est = estimate_pose(v, mirrored.topRows<2>(), Eigen::VectorXd(mirrored.row(2).transpose()));
  EXPECT_GT(rotation_matrix(est.pose).determinant(), 0.0);
  EXPECT_GT(est.residual_rms, 0.0);
}

TEST(PoseJson, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const CameraPose p = random_pose(rng);
    const auto text = io::dump_json(pose_to_json(p));
    EXPECT_EQ(pose_from_json(io::Json::parse(text)), p);
  }
  EXPECT_THROW(pose_from_json(io::Json::parse(R"({"yaw": 0})")), IngestError);
}

}  // namespace
}  // namespace h2h
