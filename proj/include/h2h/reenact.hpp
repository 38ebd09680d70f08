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

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"
#include "h2h/model.hpp"
#include "h2h/parallel.hpp"
#include "h2h/raster.hpp"
#include "h2h/recon.hpp"

namespace h2h {

enum class ReenactmentMode { kSelf, kFace, kHead };

inline ReenactmentMode parse_mode(const std::string& s) {
  if (s == "self") return ReenactmentMode::kSelf;
  if (s == "face") return ReenactmentMode::kFace;
  if (s == "head") return ReenactmentMode::kHead;
  throw ValidationError("unknown reenactment mode '" + s + "' (expected self, face or head)");
}

inline const char* to_string(ReenactmentMode m) {
  switch (m) {
    case ReenactmentMode::kSelf: return "self";
    case ReenactmentMode::kFace: return "face";
    case ReenactmentMode::kHead: return "head";
  }
  return "?";
}

enum class EyeSource { kSource, kTarget };

struct RoutedFrame {
  ShapeCoefficients coeffs;
  CameraPose pose;
  EyeSource eyes = EyeSource::kSource;
  std::size_t frame_index = 0;  // index into whichever stream `eyes` selects
};

// Per-frame conditioning parameters. Identity is always the target average.
// HEAD and SELF drive expression, pose and eyes from the source; FACE takes
// expression from the source but pose and eyes from the target frame t.
inline std::vector<RoutedFrame> route_parameters(ReenactmentMode mode, std::span<const FrameRecovery> source,
                                                 std::span<const FrameRecovery> target,
                                                 const Eigen::VectorXd& target_avg_identity) {
  if (mode == ReenactmentMode::kFace && target.size() < source.size()) {
    throw TargetExhaustedError("face reenactment needs " + std::to_string(source.size()) +
                               " target frames, have " + std::to_string(target.size()));
  }
  std::vector<RoutedFrame> out;
  out.reserve(source.size());
  for (std::size_t t = 0; t < source.size(); ++t) {
    RoutedFrame f;
    f.coeffs.identity = target_avg_identity;
    f.coeffs.expression = source[t].coeffs.expression;
    f.frame_index = t;
    if (mode == ReenactmentMode::kFace) {
      f.pose = target[t].pose;
      f.eyes = EyeSource::kTarget;
    } else {
      f.pose = source[t].pose;
      f.eyes = EyeSource::kSource;
    }
    out.push_back(std::move(f));
  }
  return out;
}

// X_t = (NMFC_t, E_t).
struct ConditionalInput {
  NmfcImage nmfc;
  RgbImage eyes;
};

// Renders conditional inputs for one model. Holds the per-triangle color
// table so it is built once.
class ConditionalRenderer {
 public:
  ConditionalRenderer(const MorphableModel& model, int size = 256)
      : model_(&model), colors_(normalized_mean_face(model), model.triangles()), size_(size) {
    if (size <= 0) throw ValidationError("conditional input size must be positive");
  }

  int size() const { return size_; }
  const TriangleColorTable& colors() const { return colors_; }

  NmfcImage render_nmfc(const ShapeCoefficients& coeffs, const CameraPose& pose) const {
    const FaceShape shape = assemble_shape(*model_, coeffs);
    const VisibilityMask mask = rasterize_visibility(pose, shape, model_->triangles(), size_, size_);
    return h2h::render_nmfc(mask, colors_);
  }

  // A missing eye frame yields a black sketch.
  ConditionalInput render(const RoutedFrame& frame, const EyeFrame* eyes) const {
    ConditionalInput in;
    in.nmfc = render_nmfc(frame.coeffs, frame.pose);
    in.eyes = eyes ? render_eye_sketch(eyes->landmarks, eyes->pupils, size_).frame : RgbImage(size_, size_);
    return in;
  }

 private:
  const MorphableModel* model_;
  TriangleColorTable colors_;
  int size_;
};

// Frames render independently; results come back in frame order. Empty eye
// tracks produce black sketches.
inline std::vector<ConditionalInput> generate_conditional_input(const MorphableModel& model,
                                                                std::span<const RoutedFrame> routed,
                                                                std::span<const EyeFrame> source_eyes,
                                                                std::span<const EyeFrame> target_eyes, int size = 256,
                                                                unsigned threads = worker_count()) {
  const ConditionalRenderer renderer(model, size);
  for (const auto& f : routed) {
    const auto& track = f.eyes == EyeSource::kSource ? source_eyes : target_eyes;
    if (!track.empty() && f.frame_index >= track.size()) {
      throw DimensionError("eye track has no frame " + std::to_string(f.frame_index));
    }
  }
  return parallel_map(
      routed.size(),
      [&](std::size_t t) {
        const RoutedFrame& f = routed[t];
        const auto& track = f.eyes == EyeSource::kSource ? source_eyes : target_eyes;
        return renderer.render(f, track.empty() ? nullptr : &track[f.frame_index]);
      },
      threads);
}

// ---- nearest-neighbor baseline ----

struct TrainingPair {
  NmfcImage nmfc;
  RgbImage frame;
};

// Stand-in renderer: returns the training frame whose NMFC is closest in L2
// after 32 x 32 box downsampling. Ties go to the lowest training index.
class NearestNeighborRenderer {
 public:
  static constexpr int kGrid = 32;

  explicit NearestNeighborRenderer(std::span<const TrainingPair> pairs) : pairs_(pairs) {
    if (pairs.empty()) throw EmptyInputError("nearest-neighbor baseline needs training pairs");
    width_ = pairs.front().nmfc.width;
    height_ = pairs.front().nmfc.height;
    descriptors_.reserve(pairs.size());
    for (const auto& p : pairs) {
      if (p.nmfc.width != width_ || p.nmfc.height != height_) {
        throw DimensionError("training NMFC sizes differ");
      }
      descriptors_.push_back(describe(p.nmfc));
    }
  }

  static std::vector<double> describe(const NmfcImage& img) {
    std::vector<double> d(kGrid * kGrid * 3, 0.0);
    auto range = [](int cell, int extent) {
      const int lo = cell * extent / kGrid;
      const int hi = std::max(lo + 1, (cell + 1) * extent / kGrid);
      return std::pair{std::min(lo, extent - 1), std::min(hi, extent)};
    };
    for (int gy = 0; gy < kGrid; ++gy) {
      const auto [y0, y1] = range(gy, img.height);
      for (int gx = 0; gx < kGrid; ++gx) {
        const auto [x0, x1] = range(gx, img.width);
        std::array<long, 3> sum{};
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            const std::uint8_t* p = img.at(x, y);
            sum[0] += p[0];
            sum[1] += p[1];
            sum[2] += p[2];
          }
        }
        const double count = static_cast<double>((y1 - y0) * (x1 - x0));
        for (int c = 0; c < 3; ++c) d[(gy * kGrid + gx) * 3 + c] = static_cast<double>(sum[c]) / count;
      }
    }
    return d;
  }

  std::size_t nearest(const NmfcImage& query) const {
    if (query.width != width_ || query.height != height_) throw DimensionError("query NMFC size differs");
    const std::vector<double> q = describe(query);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < descriptors_.size(); ++i) {
      double dist = 0.0;
      const auto& d = descriptors_[i];
      for (std::size_t k = 0; k < d.size(); ++k) {
        const double diff = d[k] - q[k];
        dist += diff * diff;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    return best;
  }

  const RgbImage& render(const NmfcImage& query) const { return pairs_[nearest(query)].frame; }

 private:
  std::span<const TrainingPair> pairs_;
  std::vector<std::vector<double>> descriptors_;
  int width_ = 0;
  int height_ = 0;
};

inline RgbImage nn_baseline_render(std::span<const TrainingPair> train_pairs, const NmfcImage& query) {
  return NearestNeighborRenderer(train_pairs).render(query);
}

}  // namespace h2h
