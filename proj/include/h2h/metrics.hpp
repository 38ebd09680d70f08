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
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"
#include "h2h/io.hpp"
#include "h2h/recon.hpp"

namespace h2h::metrics {

using FrameSequence = std::vector<RgbImage>;

namespace detail {

inline void check_sequences(std::span<const RgbImage> real, std::span<const RgbImage> fake) {
  if (real.empty()) throw EmptyInputError("empty frame sequence");
  if (real.size() != fake.size()) throw DimensionError("sequences have different frame counts");
  const int w = real.front().width, h = real.front().height;
  for (std::size_t t = 0; t < real.size(); ++t) {
    if (real[t].width != w || real[t].height != h || fake[t].width != w || fake[t].height != h) {
      throw DimensionError("frame " + std::to_string(t) + " has mismatched dimensions");
    }
  }
}

inline double pixel_distance(const std::uint8_t* a, const std::uint8_t* b) {
  const double dr = double(a[0]) - double(b[0]);
  const double dg = double(a[1]) - double(b[1]);
  const double db = double(a[2]) - double(b[2]);
  return std::sqrt(dr * dr + dg * dg + db * db);
}

}  // namespace detail

// Average pixel distance: mean RGB Euclidean distance over all pixels and frames.
inline double apd(std::span<const RgbImage> real, std::span<const RgbImage> fake) {
  detail::check_sequences(real, fake);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    const std::size_t pixels = real[t].data.size() / 3;
    for (std::size_t i = 0; i < pixels; ++i) {
      sum += detail::pixel_distance(&real[t].data[3 * i], &fake[t].data[3 * i]);
    }
    count += pixels;
  }
  return sum / static_cast<double>(count);
}

// Masked APD, pooled over all masked pixels of all frames.
inline double mapd(std::span<const RgbImage> real, std::span<const RgbImage> fake, std::span<const PixelMask> masks) {
  detail::check_sequences(real, fake);
  if (masks.size() != real.size()) throw DimensionError("mask count differs from frame count");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    if (masks[t].width != real[t].width || masks[t].height != real[t].height) {
      throw DimensionError("mask " + std::to_string(t) + " does not match frame size");
    }
    const std::size_t pixels = masks[t].data.size();
    for (std::size_t i = 0; i < pixels; ++i) {
      if (!masks[t].data[i]) continue;
      sum += detail::pixel_distance(&real[t].data[3 * i], &fake[t].data[3 * i]);
      ++count;
    }
  }
  if (count == 0) throw EmptyMaskError("all masks are empty");
  return sum / static_cast<double>(count);
}

// Average expression distance: mean per-frame L1 norm, unnormalized.
inline double aed(std::span<const Eigen::VectorXd> real, std::span<const Eigen::VectorXd> fake) {
  if (real.empty()) throw EmptyInputError("no expression vectors");
  if (real.size() != fake.size()) throw DimensionError("expression sequences have different lengths");
  double sum = 0.0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    if (real[t].size() != fake[t].size()) throw DimensionError("expression dimensions differ");
    sum += (real[t] - fake[t]).lpNorm<1>();
  }
  return sum / static_cast<double>(real.size());
}

inline double angle_difference_degrees(double a, double b) {
  return std::abs(wrap_angle(a - b)) * 180.0 / std::numbers::pi;
}

// Average rotation distance in degrees: per frame the mean absolute wrapped
// yaw/pitch/roll difference, averaged over frames.
inline double ard(std::span<const CameraPose> real, std::span<const CameraPose> fake) {
  if (real.empty()) throw EmptyInputError("no poses");
  if (real.size() != fake.size()) throw DimensionError("pose sequences have different lengths");
  double sum = 0.0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    sum += (angle_difference_degrees(real[t].yaw, fake[t].yaw) +
            angle_difference_degrees(real[t].pitch, fake[t].pitch) +
            angle_difference_degrees(real[t].roll, fake[t].roll)) /
           3.0;
  }
  return sum / static_cast<double>(real.size());
}

// Distance between average identities (L1).
inline double dai(std::span<const FrameRecovery> real, std::span<const FrameRecovery> fake) {
  const Eigen::VectorXd a = average_identity(real);
  const Eigen::VectorXd b = average_identity(fake);
  if (a.size() != b.size()) throw DimensionError("identity dimensions differ");
  return (a - b).lpNorm<1>();
}

// Average eye landmark distance over the 12 outline points and 2 pupils.
inline double aeld(std::span<const EyeFrame> real, std::span<const EyeFrame> fake) {
  if (real.empty()) throw EmptyInputError("no eye frames");
  if (real.size() != fake.size()) throw DimensionError("eye sequences have different lengths");
  double sum = 0.0;
  for (std::size_t t = 0; t < real.size(); ++t) {
    double frame = 0.0;
    for (int k = 0; k < 6; ++k) {
      frame += (real[t].landmarks.left[k] - fake[t].landmarks.left[k]).norm();
      frame += (real[t].landmarks.right[k] - fake[t].landmarks.right[k]).norm();
    }
    frame += (real[t].pupils.left - fake[t].pupils.left).norm();
    frame += (real[t].pupils.right - fake[t].pupils.right).norm();
    sum += frame / 14.0;
  }
  return sum / static_cast<double>(real.size());
}

// ---- feature-based metrics ----

// n x d matrix, one embedding per row.
using FeatureSet = Eigen::MatrixXd;

inline void check_features(const FeatureSet& f, Eigen::Index min_rows) {
  if (f.rows() < min_rows) {
    throw InvalidFeatureError("feature set needs at least " + std::to_string(min_rows) + " samples");
  }
  if (!f.allFinite()) throw InvalidFeatureError("feature set contains non-finite values");
}

// Frechet distance between Gaussian fits (unbiased covariances). The trace of
// (Sa Sb)^(1/2) is taken from the symmetric Sa^(1/2) Sb Sa^(1/2).
inline double fid_from_features(const FeatureSet& a, const FeatureSet& b) {
  check_features(a, 2);
  check_features(b, 2);
  if (a.cols() != b.cols()) throw DimensionError("feature dimensions differ");
  const Eigen::RowVectorXd mu_a = a.colwise().mean();
  const Eigen::RowVectorXd mu_b = b.colwise().mean();
  const Eigen::MatrixXd ca = a.rowwise() - mu_a;
  const Eigen::MatrixXd cb = b.rowwise() - mu_b;
  const Eigen::MatrixXd sigma_a = (ca.transpose() * ca) / static_cast<double>(a.rows() - 1);
  const Eigen::MatrixXd sigma_b = (cb.transpose() * cb) / static_cast<double>(b.rows() - 1);

  constexpr double kClip = 1e-10;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(sigma_a);
  const Eigen::VectorXd root_vals = eig_a.eigenvalues().unaryExpr([](double v) { return v < kClip ? 0.0 : std::sqrt(v); });
  const Eigen::MatrixXd sqrt_a = eig_a.eigenvectors() * root_vals.asDiagonal() * eig_a.eigenvectors().transpose();
  Eigen::MatrixXd inner = sqrt_a * sigma_b * sqrt_a;
  inner = 0.5 * (inner + inner.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_inner(inner, Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (double v : eig_inner.eigenvalues()) {
    if (v > kClip) trace_sqrt += std::sqrt(v);
  }
  const double mean_term = (mu_a - mu_b).squaredNorm();
  const double value = mean_term + sigma_a.trace() + sigma_b.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

struct MmdResult {
  double value = 0.0;
  double bandwidth = 0.0;
};

// Median over all ordered pairs (i, j) of the pooled set, self-pairs
// included, so duplicating every sample leaves the bandwidth unchanged.
inline double median_heuristic_bandwidth(const FeatureSet& pooled) {
  const Eigen::Index n = pooled.rows();
  std::vector<double> off;
  off.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) off.push_back((pooled.row(i) - pooled.row(j)).norm());
  }
  std::sort(off.begin(), off.end());
  const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  // k-th smallest of {n zeros} + {each off-diagonal distance twice}
  auto kth = [&](std::size_t k) { return k < static_cast<std::size_t>(n) ? 0.0 : off[(k - n) / 2]; };
  const double median = total % 2 == 1 ? kth(total / 2) : 0.5 * (kth(total / 2 - 1) + kth(total / 2));
  return median;
}

// Biased (V-statistic) squared MMD with a Gaussian RBF kernel
// k(x, y) = exp(-|x - y|^2 / (2 h^2)). h defaults to the median heuristic,
// floored at 1e-12.
inline MmdResult mmd2_from_features(const FeatureSet& a, const FeatureSet& b,
                                    std::optional<double> bandwidth = std::nullopt) {
  check_features(a, 1);
  check_features(b, 1);
  if (a.cols() != b.cols()) throw DimensionError("feature dimensions differ");
  double h = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ValidationError("MMD bandwidth must be positive");
    h = *bandwidth;
  } else {
    FeatureSet pooled(a.rows() + b.rows(), a.cols());
    pooled << a, b;
    h = median_heuristic_bandwidth(pooled);
  }
  h = std::max(h, 1e-12);
  const double gamma = 1.0 / (2.0 * h * h);
  auto mean_kernel = [gamma](const FeatureSet& x, const FeatureSet& y) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.rows(); ++j) sum += std::exp(-gamma * (x.row(i) - y.row(j)).squaredNorm());
    }
    return sum / (static_cast<double>(x.rows()) * static_cast<double>(y.rows()));
  };
  const double value = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
  return {std::max(0.0, value), h};
}

// features.f32: row-major n x d binary32 with a sidecar JSON {n, d}. The
// sidecar is <path>.json, or features.json next to features.f32.
inline std::filesystem::path feature_sidecar(const std::filesystem::path& path) {
  std::filesystem::path side = path;
  side += ".json";
  if (std::filesystem::exists(side)) return side;
  std::filesystem::path alt = path;
  alt.replace_extension(".json");
  return alt;
}

inline FeatureSet load_features(const std::filesystem::path& path) {
  const auto meta = io::read_json(feature_sidecar(path));
  std::size_t n = 0, d = 0;
  try {
    n = meta.at("n").get<std::size_t>();
    d = meta.at("d").get<std::size_t>();
  } catch (const io::Json::exception& e) {
    throw IngestError(feature_sidecar(path).string() + ": " + e.what());
  }
  if (n == 0 || d == 0) throw IngestError(path.string() + ": empty feature set");
  const auto values = io::read_f32(path, n * d);
  using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const FeatureSet f =
      Eigen::Map<const RowMajor>(values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d))
          .cast<double>();
  if (!f.allFinite()) throw InvalidFeatureError(path.string() + ": non-finite features");
  return f;
}

inline void save_features(const std::filesystem::path& path, const FeatureSet& f) {
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(f.size()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) values.push_back(static_cast<float>(f(i, j)));
  }
  io::write_le(path, values);
  std::filesystem::path side = path;
  side += ".json";
  io::write_json(side, {{"n", f.rows()}, {"d", f.cols()}});
}

// ---- report ----

struct MetricReport {
  std::optional<double> apd;
  std::optional<double> mapd;
  std::optional<double> aed;
  std::optional<double> ard_degrees;
  std::optional<double> dai;
  std::optional<double> aeld;
  std::optional<double> fid;
  std::optional<double> mmd2;
  io::Json provenance = io::Json::object();
};

inline io::Json report_to_json(const MetricReport& r) {
  io::Json metrics = io::Json::object();
  auto put = [&](const char* name, const std::optional<double>& v) {
    if (v) metrics[name] = *v;
  };
  put("apd", r.apd);
  put("mapd", r.mapd);
  put("aed", r.aed);
  put("ard_degrees", r.ard_degrees);
  put("dai", r.dai);
  put("aeld", r.aeld);
  put("fid", r.fid);
  put("mmd2", r.mmd2);
  return {{"metrics", metrics}, {"provenance", r.provenance}};
}

}  // namespace h2h::metrics
