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
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "h2h/commands.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIngest = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace h2h;
  CLI::App app{"h2h: 3D face recovery, NMFC rendering, eye sketches and reenactment metrics"};
  app.require_subcommand(1);

  cli::FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Recover per-frame pose and 3DMM coefficients");
  fit_cmd->add_option("--model-dir", fit.model_dir)->required();
  fit_cmd->add_option("--obs-dir", fit.obs_dir)->required();
  fit_cmd->add_option("--out", fit.out)->required();

  cli::NmfcOptions nmfc;
  auto* nmfc_cmd = app.add_subcommand("nmfc", "Render NMFC images from a recovery file");
  nmfc_cmd->add_option("--model-dir", nmfc.model_dir)->required();
  nmfc_cmd->add_option("--recovery", nmfc.recovery)->required();
  nmfc_cmd->add_option("--size", nmfc.size)->check(CLI::PositiveNumber);
  nmfc_cmd->add_option("--out-dir", nmfc.out_dir)->required();
  nmfc_cmd->add_flag("--dump-masks", nmfc.dump_masks, "Also write mask_%06d.u32 visibility grids");

  cli::EyesOptions eyes;
  auto* eyes_cmd = app.add_subcommand("eyes", "Detect pupils and render eye sketches");
  eyes_cmd->add_option("--landmarks", eyes.landmarks)->required();
  eyes_cmd->add_option("--frames-dir", eyes.frames_dir)->required();
  eyes_cmd->add_option("--out-dir", eyes.out_dir)->required();
  eyes_cmd->add_option("--size", eyes.size)->check(CLI::PositiveNumber);

  cli::CropOptions crop;
  auto* crop_cmd = app.add_subcommand("crop", "Crop frames to the average face box");
  crop_cmd->add_option("--frames-dir", crop.frames_dir)->required();
  crop_cmd->add_option("--boxes", crop.boxes)->required();
  crop_cmd->add_option("--size", crop.size)->check(CLI::PositiveNumber);
  crop_cmd->add_option("--out-dir", crop.out_dir)->required();

  cli::ReenactOptions reenact;
  std::string mode = "self";
  std::string source_eyes, target_eyes;
  auto* reenact_cmd = app.add_subcommand("reenact", "Route parameters, render conditional inputs and baseline frames");
  reenact_cmd->add_option("--mode", mode)->check(CLI::IsMember({"self", "face", "head"}))->required();
  reenact_cmd->add_option("--model-dir", reenact.model_dir)->required();
  reenact_cmd->add_option("--source-recovery", reenact.source_recovery)->required();
  reenact_cmd->add_option("--target-recovery", reenact.target_recovery)->required();
  reenact_cmd->add_option("--train-pairs", reenact.train_pairs)->required();
  reenact_cmd->add_option("--source-eyes", source_eyes, "eyes.csv of the source sequence");
  reenact_cmd->add_option("--target-eyes", target_eyes, "eyes.csv of the target sequence");
  reenact_cmd->add_option("--size", reenact.size)->check(CLI::PositiveNumber);
  reenact_cmd->add_option("--out-dir", reenact.out_dir)->required();

  cli::MetricsOptions met;
  std::string masks, feat_real, feat_fake, eyes_real, eyes_fake;
  std::vector<std::string> recoveries, eye_tracks;
  double bandwidth = 0.0;
  auto* metrics_cmd = app.add_subcommand("metrics", "Evaluate a generated sequence against ground truth");
  metrics_cmd->add_option("--real", met.real_dir)->required();
  metrics_cmd->add_option("--fake", met.fake_dir)->required();
  metrics_cmd->add_option("--masks-from-nmfc", masks);
  metrics_cmd->add_option("--features-real", feat_real);
  metrics_cmd->add_option("--features-fake", feat_fake);
  metrics_cmd->add_option("--recoveries", recoveries, "REAL.json FAKE.json")->expected(2);
  metrics_cmd->add_option("--eyes", eye_tracks, "REAL_eyes.csv FAKE_eyes.csv")->expected(2);
  auto* bw = metrics_cmd->add_option("--mmd-bandwidth", bandwidth, "Fixed RBF bandwidth instead of the median heuristic")
                 ->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--out", met.out)->required();

  cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic model, observations, frames and annotations");
  synth_cmd->add_option("--out-dir", synth.out_dir)->required();
  synth_cmd->add_option("--frames", synth.frames);
  synth_cmd->add_option("--size", synth.size)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--grid", synth.grid)->check(CLI::Range(3, 1000));
  synth_cmd->add_option("--pixel-noise", synth.pixel_noise);

  cli::BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the conditional-input path on one thread");
  bench_cmd->add_option("--frames", bench.frames);
  bench_cmd->add_option("--size", bench.size)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--grid", bench.grid)->check(CLI::Range(3, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    std::ostream& log = std::cerr;
    if (*fit_cmd) {
      const auto rec = cli::run_fit(fit, log);
      std::cout << "fit: " << rec.size() << " frames -> " << fit.out.string() << "\n";
    } else if (*nmfc_cmd) {
      const auto n = cli::run_nmfc(nmfc, log);
      std::cout << "nmfc: " << n << " frames -> " << nmfc.out_dir.string() << "\n";
    } else if (*eyes_cmd) {
      const auto track = cli::run_eyes(eyes, log);
      std::cout << "eyes: " << track.size() << " frames -> " << eyes.out_dir.string() << "\n";
    } else if (*crop_cmd) {
      const auto roi = cli::run_crop(crop, log);
      std::printf("crop: roi (%.3f, %.3f, %.3f, %.3f) -> %s\n", roi.x_min, roi.y_min, roi.x_max, roi.y_max,
                  crop.out_dir.string().c_str());
    } else if (*reenact_cmd) {
      reenact.mode = parse_mode(mode);
      if (!source_eyes.empty()) reenact.source_eyes = source_eyes;
      if (!target_eyes.empty()) reenact.target_eyes = target_eyes;
      const auto n = cli::run_reenact(reenact, log);
      std::cout << "reenact (" << mode << "): " << n << " frames -> " << reenact.out_dir.string() << "\n";
    } else if (*metrics_cmd) {
      if (!masks.empty()) met.masks_from_nmfc = masks;
      if (!feat_real.empty()) met.features_real = feat_real;
      if (!feat_fake.empty()) met.features_fake = feat_fake;
      if (recoveries.size() == 2) {
        met.recoveries_real = recoveries[0];
        met.recoveries_fake = recoveries[1];
      }
      if (eye_tracks.size() == 2) {
        met.eyes_real = eye_tracks[0];
        met.eyes_fake = eye_tracks[1];
      }
      if (*bw) met.mmd_bandwidth = bandwidth;
      cli::run_metrics(met, log);
      std::cout << "metrics -> " << met.out.string() << "\n";
    } else if (*synth_cmd) {
      cli::run_synth(synth, log);
      std::cout << "synth: " << synth.frames << " frames -> " << synth.out_dir.string() << "\n";
    } else if (*bench_cmd) {
      const auto r = cli::run_bench(bench);
      std::printf(
          "bench: %zu frames, %zu vertices, %zu triangles, %dx%d: %.3f s, %.1f fps (single thread)\n"
          "note: covers recover_frame + NMFC render + eye sketch only; neural rendering is not part of this path\n",
          r.frames, r.vertices, r.triangles, bench.size, bench.size, r.seconds, r.fps);
    }
  } catch (const IngestError& e) {
    std::cerr << "ingest error: " << e.what() << "\n";
    return kExitIngest;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "ingest error: " << e.what() << "\n";
    return kExitIngest;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
