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
#include <numeric>
#include <random>

#include "h2h/raster.hpp"
#include "h2h/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace h2h {
namespace {

VisibilityMask rasterize(const oracle::ScreenMesh& m, int w, int h) {
  Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(m.x.size()));
  Eigen::VectorXd depth(static_cast<Eigen::Index>(m.x.size()));
  for (std::size_t i = 0; i < m.x.size(); ++i) {
    pts(0, static_cast<Eigen::Index>(i)) = m.x[i];
    pts(1, static_cast<Eigen::Index>(i)) = m.y[i];
    depth(static_cast<Eigen::Index>(i)) = m.z[i];
  }
  return rasterize_projected(pts, depth, m.tris, w, h);
}

oracle::ScreenMesh single(std::array<double, 6> xy, std::array<double, 3> z = {0, 0, 0}) {
  oracle::ScreenMesh m;
  for (int k = 0; k < 3; ++k) {
    m.x.push_back(xy[2 * k]);
    m.y.push_back(xy[2 * k + 1]);
    m.z.push_back(z[k]);
  }
  m.tris.push_back({0, 1, 2});
  return m;
}

TEST(Rasterize, OffscreenMeshIsEmpty) {
  const auto m = synthetic::make_model({.grid = 11, .identity_dim = 4, .expression_dim = 2, .seed = 1});
  const FaceShape shape{m.mean_shape()};
  for (const auto& [tx, ty] : {std::pair{-500.0, 32.0}, {32.0, -500.0}, {500.0, 32.0}, {32.0, 500.0}}) {
    const auto mask = rasterize_visibility(CameraPose{0, 0, 0, tx, ty, 20}, shape, m.triangles(), 64, 64);
    for (auto id : mask.triangle_index) EXPECT_EQ(id, VisibilityMask::kNone);
  }
}

TEST(Rasterize, SmallTriangleMatchesOracle) {
  const auto mesh = single({1, 1, 6, 1, 1, 6});
  const auto mask = rasterize(mesh, 8, 8);
  EXPECT_EQ(mask.triangle_index, oracle::raster_oracle(mesh.triangles(), 8, 8));
  // centers strictly inside plus the owned edges: u, v >= 1 and u + v <= 5
  int covered = 0;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      const bool expect = u >= 1 && v >= 1 && u + v <= 5;
      EXPECT_EQ(mask.at(u, v) == 0, expect) << u << "," << v;
      covered += mask.at(u, v) == 0;
    }
  }
  EXPECT_EQ(covered, 10);
}

TEST(Rasterize, BackFacesAreCulled) {
  const auto mask = rasterize(single({1, 1, 1, 6, 6, 1}), 8, 8);
  for (auto id : mask.triangle_index) EXPECT_EQ(id, VisibilityMask::kNone);
}

TEST(Rasterize, NearerOfTwoStackedTrianglesWins) {
  for (const bool near_first : {true, false}) {
    oracle::ScreenMesh m;
    const std::array<double, 6> xy{2, 2, 30, 4, 6, 28};
    for (int layer = 0; layer < 2; ++layer) {
      const double z = (layer == 0) == near_first ? 5.0 : -5.0;
      for (int k = 0; k < 3; ++k) {
        m.x.push_back(xy[2 * k] + layer);
        m.y.push_back(xy[2 * k + 1] + layer);
        m.z.push_back(z);
      }
      const auto b = static_cast<std::uint32_t>(3 * layer);
      m.tris.push_back({b, b + 1, b + 2});
    }
    const auto mask = rasterize(m, 32, 32);
    EXPECT_EQ(mask.triangle_index, oracle::raster_oracle(m.triangles(), 32, 32));
    const auto a = rasterize(single({2, 2, 30, 4, 6, 28}), 32, 32);
    const auto b = rasterize(single({3, 3, 31, 5, 7, 29}), 32, 32);
    const std::uint32_t nearer = near_first ? 0 : 1;
    int overlap = 0;
    for (std::size_t i = 0; i < mask.triangle_index.size(); ++i) {
      if (a.triangle_index[i] == 0 && b.triangle_index[i] == 0) {
        EXPECT_EQ(mask.triangle_index[i], nearer);
        ++overlap;
      }
    }
    EXPECT_GT(overlap, 50);
  }
}

TEST(Rasterize, SharedDiagonalCoversEachPixelOnce) {
  // square [2, 14]^2 split along the diagonal, which passes through pixel centers
  oracle::ScreenMesh m;
  m.x = {2, 14, 14, 2};
  m.y = {2, 2, 14, 14};
  m.z = {0, 0, 0, 0};
  m.tris = {{0, 1, 2}, {0, 2, 3}};
  oracle::ScreenMesh first = m, second = m;
  first.tris = {m.tris[0]};
  second.tris = {m.tris[1]};
  const auto a = rasterize(first, 16, 16), b = rasterize(second, 16, 16);
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 16; ++u) {
      const int hits = (a.at(u, v) != VisibilityMask::kNone) + (b.at(u, v) != VisibilityMask::kNone);
      const bool inside = u >= 2 && u < 14 && v >= 2 && v < 14;
      EXPECT_EQ(hits, inside ? 1 : 0) << u << "," << v;
    }
  }
}

TEST(Rasterize, RandomMeshesMatchOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const auto mesh = oracle::random_screen_mesh(rng, 48, 40);
    EXPECT_EQ(rasterize(mesh, 48, 40).triangle_index, oracle::raster_oracle(mesh.triangles(), 48, 40))
        << "trial " << trial;
  }
}

TEST(Rasterize, InvariantToSubmissionOrderUpToRelabeling) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    auto mesh = oracle::random_screen_mesh(rng, 48, 48);
    // distinct depths per triangle so index tie-breaking cannot matter
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
      auto& tri = mesh.tris[t];
      for (auto& v : tri) {
        mesh.x.push_back(mesh.x[v]);
        mesh.y.push_back(mesh.y[v]);
        mesh.z.push_back(static_cast<double>(t) * 0.37 - std::floor(static_cast<double>(t) * 0.37));
        v = static_cast<std::uint32_t>(mesh.x.size() - 1);
      }
    }
    const auto base = rasterize(mesh, 48, 48);
    std::vector<std::size_t> perm(mesh.tris.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto shuffled = mesh;
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.tris[i] = mesh.tris[perm[i]];
    const auto other = rasterize(shuffled, 48, 48);
    for (std::size_t i = 0; i < base.triangle_index.size(); ++i) {
      const auto id = other.triangle_index[i];
      EXPECT_EQ(id == VisibilityMask::kNone ? id : static_cast<std::uint32_t>(perm[id]), base.triangle_index[i]);
    }
  }
}

TEST(Rasterize, ProjectedPathMatchesVisibility) {
  const auto m = synthetic::make_model({.grid = 21, .identity_dim = 4, .expression_dim = 2, .seed = 1});
  const FaceShape shape{m.mean_shape()};
  const CameraPose pose{0.3, -0.2, 0.1, 40, 36, 25};
  const auto proj = project(pose, shape);
  EXPECT_EQ(rasterize_visibility(pose, shape, m.triangles(), 80, 72),
            rasterize_projected(proj.points, proj.depth, m.triangles(), 80, 72));
}

TEST(Rasterize, RejectsBadArguments) {
  const auto mesh = single({1, 1, 6, 1, 1, 6});
  EXPECT_THROW(rasterize(mesh, 0, 8), ValidationError);
  auto bad = mesh;
  bad.tris[0][2] = 9;
  EXPECT_THROW(rasterize(bad, 8, 8), DimensionError);
}

TEST(Rasterize, HugeCoordinatesAreSkipped) {
  auto mesh = single({1, 1, 6, 1, 1, 6});
  mesh.x[1] = 1e30;
  for (auto id : rasterize(mesh, 8, 8).triangle_index) EXPECT_EQ(id, VisibilityMask::kNone);
}

NormalizedMeanFace colors(std::vector<double> c) {
  return {Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()))};
}

TEST(RenderNmfc, EmptyMaskIsBlack) {
  const VisibilityMask mask(8, 8);
  const std::vector<Triangle> tris{{0, 1, 2}};
  const auto img = render_nmfc(mask, colors({0, 0, 0, 0.3, 0.3, 0.3, 0.6, 0.6, 0.6}), tris);
  for (auto b : img.data) EXPECT_EQ(b, 0);
}

TEST(RenderNmfc, CentroidColorIsRounded) {
  VisibilityMask mask(4, 4);
  mask.triangle_index[5] = 0;
  mask.triangle_index[6] = 0;
  const std::vector<Triangle> tris{{0, 1, 2}};
  const auto img = render_nmfc(mask, colors({0, 0, 0, 0.3, 0.3, 0.3, 0.6, 0.6, 0.6}), tris);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.data[3 * 5 + c], 77);
    EXPECT_EQ(img.data[3 * 6 + c], 77);
    EXPECT_EQ(img.data[3 * 7 + c], 0);
  }
}

TEST(RenderNmfc, HalfwayRoundsAwayFromZero) {
  // centroid 0.5 gives exactly 127.5
  VisibilityMask mask(1, 1);
  mask.triangle_index[0] = 0;
  const std::vector<Triangle> tris{{0, 1, 2}};
  const auto img = render_nmfc(mask, colors({0.5, 0, 1, 0.5, 0, 1, 0.5, 0, 1}), tris);
  EXPECT_EQ(img.data[0], 128);
  EXPECT_EQ(img.data[1], 0);
  EXPECT_EQ(img.data[2], 255);
}

TEST(RenderNmfc, DeterministicAndCorruptMaskDetected) {
  const auto m = synthetic::make_model({.grid = 21, .identity_dim = 4, .expression_dim = 2, .seed = 1});
  const auto mask = rasterize_visibility(CameraPose{0.2, 0.1, 0, 32, 32, 20}, FaceShape{m.mean_shape()},
                                         m.triangles(), 64, 64);
  const auto nmf = normalized_mean_face(m);
  const auto a = render_nmfc(mask, nmf, m.triangles());
  const auto b = render_nmfc(mask, nmf, m.triangles());
  EXPECT_EQ(a.data, b.data);
  auto corrupt = mask;
  corrupt.triangle_index[100] = static_cast<std::uint32_t>(m.triangle_count());
  EXPECT_THROW(render_nmfc(corrupt, nmf, m.triangles()), CorruptMaskError);
}

TEST(FacialMask, Examples) {
  RgbImage img(4, 3);
  for (auto v : nmfc_facial_mask(img).data) EXPECT_EQ(v, 0);
  img.at(2, 1)[1] = 9;
  const auto mask = nmfc_facial_mask(img);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) EXPECT_EQ(mask.at(x, y), x == 2 && y == 1);
  }
}

TEST(FacialMask, MatchesVisibilityWhenColorsAvoidBlack) {
  // mean face shifted so no centroid rounds to black
  const auto m = synthetic::make_model({.grid = 21, .identity_dim = 4, .expression_dim = 2, .seed = 1});
  const auto mask = rasterize_visibility(CameraPose{-0.3, 0.2, 0.1, 30, 34, 22}, FaceShape{m.mean_shape()},
                                         m.triangles(), 64, 64);
  NormalizedMeanFace nmf = normalized_mean_face(m);
  nmf.colors = (nmf.colors.array() * 0.9 + 0.05).matrix();
  const auto facial = nmfc_facial_mask(render_nmfc(mask, nmf, m.triangles()));
  std::size_t visible = 0;
  for (std::size_t i = 0; i < mask.triangle_index.size(); ++i) {
    EXPECT_EQ(facial.data[i] != 0, mask.triangle_index[i] != VisibilityMask::kNone);
    visible += mask.triangle_index[i] != VisibilityMask::kNone;
  }
  EXPECT_GT(visible, 500u);
}

TEST(Nmfc, TriangleColorIsPoseIndependent) {
  const auto m = synthetic::make_model({.grid = 21, .identity_dim = 4, .expression_dim = 2, .seed = 1});
  const TriangleColorTable table(normalized_mean_face(m), m.triangles());
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int f = 0; f < 10; ++f) {
    ShapeCoefficients c{Eigen::VectorXd(4), Eigen::VectorXd(2)};
    for (auto& v : c.identity) v = normal(rng);
    for (auto& v : c.expression) v = normal(rng);
    const CameraPose pose{0.1 * f - 0.5, 0.05 * f - 0.2, 0.02 * f, 32, 32, 20};
    const auto mask = rasterize_visibility(pose, assemble_shape(m, c), m.triangles(), 64, 64);
    const auto img = render_nmfc(mask, table);
    for (std::size_t i = 0; i < mask.triangle_index.size(); ++i) {
      const auto id = mask.triangle_index[i];
      if (id == VisibilityMask::kNone) continue;
      for (int k = 0; k < 3; ++k) EXPECT_EQ(img.data[3 * i + k], table[id][k]);
    }
  }
}

TEST(VisibilityMaskFile, WritesLittleEndianIndices) {
  testing::TempDir dir;
  VisibilityMask mask(3, 2);
  mask.triangle_index = {0, 1, VisibilityMask::kNone, 258, 7, 65536};
  write_visibility_mask(dir / "m.u32", mask);
  EXPECT_EQ(io::read_u32(dir / "m.u32", 6), mask.triangle_index);
  EXPECT_EQ(testing::slurp(dir / "m.u32").size(), 24u);
}

}  // namespace
}  // namespace h2h
