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

// Implementations of the h2h command-line subcommands. Each takes plain
// option structs so they can be driven from tests as well as from main().

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "h2h/camera.hpp"
#include "h2h/error.hpp"
#include "h2h/eyes.hpp"
#include "h2h/image.hpp"
#include "h2h/io.hpp"
#include "h2h/metrics.hpp"
#include "h2h/model.hpp"
#include "h2h/parallel.hpp"
#include "h2h/raster.hpp"
#include "h2h/recon.hpp"
#include "h2h/reenact.hpp"
#include "h2h/roi.hpp"
#include "h2h/synthetic.hpp"

namespace h2h::cli {

namespace fs = std::filesystem;

inline std::vector<RgbImage> load_frames(const fs::path& dir, const std::string& prefix, unsigned threads) {
  const std::size_t n = io::count_sequence(dir, prefix, "png");
  if (n == 0) throw IngestError(dir.string() + ": no " + prefix + "_%06d.png frames");
  return parallel_map(n, [&](std::size_t t) { return read_png(dir / io::numbered(prefix, t, "png")); }, threads);
}

// ---- fit ----

struct FitOptions {
  fs::path model_dir;
  fs::path obs_dir;
  fs::path out;
};

inline std::vector<FrameRecovery> run_fit(const FitOptions& opt, std::ostream& log) {
  const MorphableModel model = load_model(opt.model_dir);
  const auto observations = load_observations(opt.obs_dir);
  for (const auto& o : observations) {
    if (o.vertices.size() != 3 * model.vertex_count()) {
      throw IngestError("observation vertex count does not match the model");
    }
  }
  auto recoveries = parallel_map(observations.size(),
                                 [&](std::size_t t) { return recover_frame(model, observations[t]); });
  for (const auto& r : recoveries) {
    if (!r.converged) log << to_string(Warning::kConvergence) << ": frame " << r.frame_index << "\n";
  }
  if (opt.out.has_parent_path()) fs::create_directories(opt.out.parent_path());
  io::write_json(opt.out, recoveries_to_json(recoveries));
  return recoveries;
}

// ---- nmfc ----

struct NmfcOptions {
  fs::path model_dir;
  fs::path recovery;
  int size = 256;
  fs::path out_dir;
  bool dump_masks = false;
};

inline std::size_t run_nmfc(const NmfcOptions& opt, std::ostream&) {
  const MorphableModel model = load_model(opt.model_dir);
  const auto recoveries = load_recoveries(opt.recovery);
  const TriangleColorTable colors(normalized_mean_face(model), model.triangles());
  fs::create_directories(opt.out_dir);
  parallel_map(recoveries.size(), [&](std::size_t t) {
    const FaceShape shape = assemble_shape(model, recoveries[t].coeffs);
    const VisibilityMask mask = rasterize_visibility(recoveries[t].pose, shape, model.triangles(), opt.size, opt.size);
    write_png(opt.out_dir / io::numbered("nmfc", t, "png"), render_nmfc(mask, colors));
    if (opt.dump_masks) write_visibility_mask(opt.out_dir / io::numbered("mask", t, "u32"), mask);
    return 0;
  });
  return recoveries.size();
}

// ---- eyes ----

struct EyesOptions {
  fs::path landmarks;
  fs::path frames_dir;
  fs::path out_dir;
  int size = 256;
};

inline std::vector<EyeFrame> run_eyes(const EyesOptions& opt, std::ostream& log) {
  const auto landmarks = read_landmarks_csv(opt.landmarks);
  const std::size_t n = io::count_sequence(opt.frames_dir, "frame", "png");
  if (n != landmarks.size()) {
    throw IngestError("landmark rows (" + std::to_string(landmarks.size()) + ") and frames (" + std::to_string(n) +
                      ") differ");
  }
  fs::create_directories(opt.out_dir);
  struct Result {
    EyeFrame eyes;
    bool sub_pixel = false;
    bool clipped = false;
  };
  const auto results = parallel_map(n, [&](std::size_t t) {
    const RgbImage frame = read_png(opt.frames_dir / io::numbered("frame", t, "png"));
    Result r;
    r.eyes.landmarks = eye_landmarks_from_68(landmarks[t]);
    r.eyes.pupils = detect_pupils(r.eyes.landmarks, to_gray(frame), &r.sub_pixel);
    const EyeSketch sketch = render_eye_sketch(r.eyes.landmarks, r.eyes.pupils, opt.size);
    r.clipped = sketch.clipped;
    write_png(opt.out_dir / io::numbered("eyes", t, "png"), sketch.frame);
    return r;
  });
  std::vector<EyeFrame> track;
  track.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (results[t].sub_pixel) log << to_string(Warning::kSubPixelEye) << ": frame " << t << "\n";
    if (results[t].clipped) log << to_string(Warning::kClip) << ": frame " << t << "\n";
    track.push_back(results[t].eyes);
  }
  write_eye_track(opt.out_dir / "eyes.csv", track);
  return track;
}

// ---- crop ----

struct CropOptions {
  fs::path frames_dir;
  fs::path boxes;
  int size = 256;
  fs::path out_dir;
};

inline BoundingBox run_crop(const CropOptions& opt, std::ostream&) {
  const auto boxes = read_boxes_csv(opt.boxes);
  const std::size_t n = io::count_sequence(opt.frames_dir, "frame", "png");
  if (n == 0) throw IngestError(opt.frames_dir.string() + ": no frames");
  if (n != boxes.size()) {
    throw IngestError("box rows (" + std::to_string(boxes.size()) + ") and frames (" + std::to_string(n) + ") differ");
  }
  const RgbImage first = read_png(opt.frames_dir / io::numbered("frame", 0, "png"));
  const BoundingBox roi = average_bounding_box(boxes, first.width, first.height);
  fs::create_directories(opt.out_dir);
  parallel_map(n, [&](std::size_t t) {
    const RgbImage frame = read_png(opt.frames_dir / io::numbered("frame", t, "png"));
    if (frame.width != first.width || frame.height != first.height) {
      throw IngestError("frame " + std::to_string(t) + " has a different size");
    }
    write_png(opt.out_dir / io::numbered("frame", t, "png"), crop_roi(frame, roi, opt.size));
    return 0;
  });
  io::write_json(opt.out_dir / "roi.json",
                 {{"x_min", roi.x_min}, {"y_min", roi.y_min}, {"x_max", roi.x_max}, {"y_max", roi.y_max}});
  return roi;
}

// ---- reenact ----

struct ReenactOptions {
  ReenactmentMode mode = ReenactmentMode::kSelf;
  fs::path model_dir;
  fs::path source_recovery;
  fs::path target_recovery;
  fs::path train_pairs;
  std::optional<fs::path> source_eyes;
  std::optional<fs::path> target_eyes;
  int size = 256;
  fs::path out_dir;
};

inline std::vector<TrainingPair> load_training_pairs(const fs::path& dir, unsigned threads) {
  const std::size_t n_nmfc = io::count_sequence(dir, "nmfc", "png");
  const std::size_t n_frames = io::count_sequence(dir, "frame", "png");
  if (n_nmfc != n_frames) throw IngestError(dir.string() + ": nmfc and frame streams differ in length");
  if (n_nmfc == 0) throw IngestError(dir.string() + ": no training pairs");
  return parallel_map(
      n_nmfc,
      [&](std::size_t t) {
        return TrainingPair{read_png(dir / io::numbered("nmfc", t, "png")),
                            read_png(dir / io::numbered("frame", t, "png"))};
      },
      threads);
}

inline std::size_t run_reenact(const ReenactOptions& opt, std::ostream&) {
  const unsigned threads = worker_count();
  const MorphableModel model = load_model(opt.model_dir);
  const auto source = load_recoveries(opt.source_recovery);
  const auto target = load_recoveries(opt.target_recovery);
  const std::vector<EyeFrame> source_eyes = opt.source_eyes ? read_eye_track(*opt.source_eyes) : std::vector<EyeFrame>{};
  const std::vector<EyeFrame> target_eyes = opt.target_eyes ? read_eye_track(*opt.target_eyes) : std::vector<EyeFrame>{};
  const auto pairs = load_training_pairs(opt.train_pairs, threads);

  const auto routed = route_parameters(opt.mode, source, target, average_identity(target));
  const auto inputs = generate_conditional_input(model, routed, source_eyes, target_eyes, opt.size, threads);
  const NearestNeighborRenderer baseline(pairs);

  fs::create_directories(opt.out_dir);
  parallel_map(
      inputs.size(),
      [&](std::size_t t) {
        write_png(opt.out_dir / io::numbered("nmfc", t, "png"), inputs[t].nmfc);
        write_png(opt.out_dir / io::numbered("eyes", t, "png"), inputs[t].eyes);
        write_png(opt.out_dir / io::numbered("frame", t, "png"), baseline.render(inputs[t].nmfc));
        return 0;
      },
      threads);

  std::vector<FrameRecovery> as_recovery(routed.size());
  for (std::size_t t = 0; t < routed.size(); ++t) {
    as_recovery[t].frame_index = t;
    as_recovery[t].pose = routed[t].pose;
    as_recovery[t].coeffs = routed[t].coeffs;
  }
  io::Json meta = {{"mode", to_string(opt.mode)}, {"frames", routed.size()}, {"training_pairs", pairs.size()},
                   {"renderer", "nearest_neighbor_nmfc_32x32"}, {"routed", recoveries_to_json(as_recovery)}};
  io::write_json(opt.out_dir / "reenact.json", meta);
  return routed.size();
}

// ---- metrics ----

struct MetricsOptions {
  fs::path real_dir;
  fs::path fake_dir;
  std::optional<fs::path> masks_from_nmfc;
  std::optional<fs::path> features_real;
  std::optional<fs::path> features_fake;
  std::optional<fs::path> recoveries_real;
  std::optional<fs::path> recoveries_fake;
  std::optional<fs::path> eyes_real;
  std::optional<fs::path> eyes_fake;
  std::optional<double> mmd_bandwidth;
  fs::path out;
};

inline metrics::MetricReport run_metrics(const MetricsOptions& opt, std::ostream&) {
  const unsigned threads = worker_count();
  metrics::MetricReport report;
  io::Json inputs = {{"real", opt.real_dir.string()}, {"fake", opt.fake_dir.string()}};
  io::Json decisions = {{"ard_aggregation", "mean_abs_wrapped_euler_degrees"},
                        {"mapd_pooling", "global_pixel_pool"},
                        {"aed_norm", "unnormalized_l1"},
                        {"apd_space", "rgb_0_255"}};

  const auto real = load_frames(opt.real_dir, "frame", threads);
  const auto fake = load_frames(opt.fake_dir, "frame", threads);
  report.apd = metrics::apd(real, fake);
  io::Json counts = {{"real_frames", real.size()}, {"fake_frames", fake.size()}};

  if (opt.masks_from_nmfc) {
    const auto nmfc = load_frames(*opt.masks_from_nmfc, "nmfc", threads);
    std::vector<PixelMask> masks;
    masks.reserve(nmfc.size());
    for (const auto& img : nmfc) masks.push_back(nmfc_facial_mask(img));
    report.mapd = metrics::mapd(real, fake, masks);
    inputs["masks_from_nmfc"] = opt.masks_from_nmfc->string();
    counts["mask_frames"] = nmfc.size();
  }
  if (opt.recoveries_real.has_value() != opt.recoveries_fake.has_value()) {
    throw ValidationError("--recoveries needs both a real and a fake recovery file");
  }
  if (opt.recoveries_real) {
    const auto rr = load_recoveries(*opt.recoveries_real);
    const auto rf = load_recoveries(*opt.recoveries_fake);
    if (rr.size() != rf.size()) throw DimensionError("recovery sequences differ in length");
    std::vector<Eigen::VectorXd> er, ef;
    std::vector<CameraPose> pr, pf;
    for (std::size_t t = 0; t < rr.size(); ++t) {
      er.push_back(rr[t].coeffs.expression);
      ef.push_back(rf[t].coeffs.expression);
      pr.push_back(rr[t].pose);
      pf.push_back(rf[t].pose);
    }
    report.aed = metrics::aed(er, ef);
    report.ard_degrees = metrics::ard(pr, pf);
    report.dai = metrics::dai(rr, rf);
    inputs["recoveries_real"] = opt.recoveries_real->string();
    inputs["recoveries_fake"] = opt.recoveries_fake->string();
    counts["recovery_frames"] = rr.size();
    decisions["aed_expression_dim"] = rr.empty() ? 0 : rr.front().coeffs.expression.size();
  }
  if (opt.eyes_real.has_value() != opt.eyes_fake.has_value()) {
    throw ValidationError("--eyes needs both a real and a fake eye track");
  }
  if (opt.eyes_real) {
    const auto a = read_eye_track(*opt.eyes_real);
    const auto b = read_eye_track(*opt.eyes_fake);
    report.aeld = metrics::aeld(a, b);
    inputs["eyes_real"] = opt.eyes_real->string();
    inputs["eyes_fake"] = opt.eyes_fake->string();
  }
  if (opt.features_real.has_value() != opt.features_fake.has_value()) {
    throw ValidationError("--features-real and --features-fake go together");
  }
  if (opt.features_real) {
    const auto fa = metrics::load_features(*opt.features_real);
    const auto fb = metrics::load_features(*opt.features_fake);
    report.fid = metrics::fid_from_features(fa, fb);
    const auto mmd = metrics::mmd2_from_features(fa, fb, opt.mmd_bandwidth);
    report.mmd2 = mmd.value;
    inputs["features_real"] = opt.features_real->string();
    inputs["features_fake"] = opt.features_fake->string();
    counts["features_real"] = fa.rows();
    counts["features_fake"] = fb.rows();
    decisions["mmd_bandwidth"] = opt.mmd_bandwidth ? "fixed" : "median_heuristic";
    decisions["mmd_bandwidth_value"] = mmd.bandwidth;
    decisions["mmd_estimator"] = "biased_v_statistic";
    decisions["fid_grouping"] = "single_sequence_pair";
  }
  report.provenance = {{"inputs", inputs}, {"counts", counts}, {"decisions", decisions}};
  if (opt.out.has_parent_path()) fs::create_directories(opt.out.parent_path());
  io::write_json(opt.out, metrics::report_to_json(report));
  return report;
}

// ---- synth ----

struct SynthOptions {
  fs::path out_dir;
  std::size_t frames = 100;
  int size = 256;
  std::uint64_t seed = 1;
  int grid = 71;
  double pixel_noise = 0.0;
};

// Writes model/, obs/, frames/, landmarks.csv, boxes.csv and truth.json.
inline void run_synth(const SynthOptions& opt, std::ostream&) {
  synthetic::ModelSpec ms;
  ms.grid = opt.grid;
  const MorphableModel model = synthetic::make_model(ms);
  synthetic::SequenceSpec ss;
  ss.frames = opt.frames;
  ss.size = opt.size;
  ss.seed = opt.seed;
  ss.pixel_noise = opt.pixel_noise;
  const auto seq = synthetic::make_sequence(model, ss);

  save_model(model, opt.out_dir / "model");
  save_observations(seq.observations, opt.out_dir / "obs");
  fs::create_directories(opt.out_dir / "frames");
  parallel_map(seq.frames.size(), [&](std::size_t t) {
    write_png(opt.out_dir / "frames" / io::numbered("frame", t, "png"), seq.frames[t]);
    return 0;
  });
  write_landmarks_csv(opt.out_dir / "landmarks.csv", seq.landmarks);
  write_boxes_csv(opt.out_dir / "boxes.csv", seq.boxes);
  std::vector<FrameRecovery> truth(seq.poses.size());
  for (std::size_t t = 0; t < truth.size(); ++t) {
    truth[t].frame_index = t;
    truth[t].pose = seq.poses[t];
    truth[t].coeffs = seq.coeffs[t];
  }
  io::write_json(opt.out_dir / "truth.json", recoveries_to_json(truth));
}

// ---- bench ----

struct BenchOptions {
  std::size_t frames = 500;
  int size = 256;
  int grid = 71;
};

struct BenchResult {
  std::size_t frames = 0;
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  double seconds = 0.0;
  double fps = 0.0;
};

// Single-threaded conditional-input path per frame: recover_frame, NMFC
// render and eye sketch. Excludes any neural rendering.
inline BenchResult run_bench(const BenchOptions& opt) {
  synthetic::ModelSpec ms;
  ms.grid = opt.grid;
  const MorphableModel model = synthetic::make_model(ms);
  synthetic::SequenceSpec ss;
  ss.frames = opt.frames;
  ss.size = opt.size;
  ss.render_frames = false;
  const auto seq = synthetic::make_sequence(model, ss);
  const ConditionalRenderer renderer(model, opt.size);

  std::size_t checksum = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < seq.observations.size(); ++t) {
    const FrameRecovery rec = recover_frame(model, seq.observations[t]);
    const NmfcImage nmfc = renderer.render_nmfc(rec.coeffs, rec.pose);
    const EyeLandmarks eyes = eye_landmarks_from_68(seq.landmarks[t]);
    const EyeSketch sketch = render_eye_sketch(eyes, seq.pupils[t], opt.size);
    checksum += nmfc.data[nmfc.data.size() / 2] + sketch.frame.data[0];
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  BenchResult r;
  r.frames = seq.observations.size();
  r.vertices = static_cast<std::size_t>(model.vertex_count());
  r.triangles = model.triangle_count();
  r.seconds = seconds;
  r.fps = seconds > 0.0 ? static_cast<double>(r.frames) / seconds : 0.0;
  (void)checksum;
  return r;
}

}  // namespace h2h::cli
