// Copyright 2026 The invpose Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// invpose: pose estimation experiments on the command line.
//
//   invpose render       synthetic photo + attribute planes at a pose
//   invpose loss         loss of a photo at a pose
//   invpose landscape    pairwise loss grids about a pose
//   invpose estimate     downhill simplex from a start pose
//   invpose reliability  banded random starts, per-band reliability
//   invpose fixture      write the toy car mesh and annotations
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "invpose/experiment.h"
#include "invpose/fixtures.h"
#include "invpose/invariant_loss.h"
#include "invpose/pose_loss.h"

namespace fs = std::filesystem;
using namespace invpose;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand; each maps onto a config key.
struct CommonFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::string> overrides;
  bool no_clip = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key=value configuration file");
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"--mesh", "mesh"},         {"--annotations", "annotations"},
        {"--photo", "photo"},       {"--pose", "pose"},
        {"--mode", "mode"},         {"--scenario", "scenario"},
        {"--width", "width"},       {"--height", "height"},
        {"--lighting", "lighting"}, {"--background-seed", "background_seed"},
        {"--bands", "bands"},       {"--trials", "trials"},
        {"--seed", "seed"},         {"--jobs", "jobs"},
        {"--out", "out"},           {"--trace", "trace"},
        {"--resolution", "resolution"}, {"--range", "range"},
    };
    for (const auto& [flag, key] : flags) {
      app->add_option(flag, values[key], "config key '" + key + "'");
    }
    app->add_flag("--no-clip", no_clip, "use every pixel instead of the model footprint");
    app->add_option("--set", overrides, "extra key=value setting (repeatable)");
  }

  ExperimentConfig build(CLI::App* app) const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& [key, value] : values) {
      const std::string flag = "--" + [&] {
        std::string f = key;
        for (char& c : f) {
          if (c == '_') c = '-';
        }
        return f;
      }();
      if (app->count(flag) > 0) apply_config_value(cfg, key, value);
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (no_clip) cfg.clip = false;
    if (!cfg.photo_path.empty()) cfg.scenario = Scenario::kPhoto;
    return cfg;
  }
};

// Photo for commands that take either a file or a synthetic scene. Adopts
// the photo's size when reading from a file.
GrayImage obtain_photo(ExperimentConfig& cfg, const Scene& scene, const Pose& truth) {
  if (cfg.scenario == Scenario::kPhoto) {
    GrayImage photo = read_gray_image(cfg.photo_path);
    cfg.width = photo.width();
    cfg.height = photo.height();
    return photo;
  }
  return synthesize_photo(scene, truth, cfg).photo;
}

// Reads the photo first so that a default pose uses the photo's size.
std::pair<GrayImage, Pose> photo_and_pose(ExperimentConfig& cfg, const Scene& scene) {
  if (cfg.scenario == Scenario::kPhoto) {
    GrayImage photo = obtain_photo(cfg, scene, Pose{});
    return {std::move(photo), configured_pose(cfg)};
  }
  const Pose pose = configured_pose(cfg);
  return {obtain_photo(cfg, scene, pose), pose};
}

int cmd_render(ExperimentConfig cfg) {
  if (cfg.scenario == Scenario::kPhoto) throw UsageError("render synthesizes photos; drop --photo");
  cfg.validate();
  const Scene scene = load_scene(cfg);
  const Pose pose = configured_pose(cfg);
  const SyntheticPhoto synth = synthesize_photo(scene, pose, cfg);
  fs::create_directories(cfg.out_dir);
  write_pgm(synth.photo, cfg.out_dir / "photo.pgm");
  write_float_image(synth.photo, cfg.out_dir / "photo.p2f");
  write_attribute_image(synth.attributes, cfg.out_dir / "attributes.attr4");
  GrayImage mask(cfg.width, cfg.height);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = synth.attributes.covered(i) ? 1.0 : 0.0;
  write_pgm(mask, cfg.out_dir / "coverage.pgm");
  std::cout << "pose " << format_pose(pose) << "\ncovered pixels "
            << synth.attributes.covered_count() << "\nwrote " << (cfg.out_dir / "photo.pgm").string()
            << ", photo.p2f, attributes.attr4, coverage.pgm\n";
  return 0;
}

int cmd_loss(ExperimentConfig cfg) {
  if (cfg.scenario != Scenario::kPhoto) throw UsageError("loss needs --photo");
  const Scene scene = load_scene(cfg);
  auto [photo, pose] = photo_and_pose(cfg, scene);
  cfg.validate();
  const double loss =
      pose_loss(photo, scene.mesh, scene.annotations, pose, cfg.mode, cfg.loss_options());
  std::printf("%.12g\n", loss);
  return 0;
}

int cmd_landscape(ExperimentConfig cfg) {
  const Scene scene = load_scene(cfg);
  auto [photo, center] = photo_and_pose(cfg, scene);
  cfg.validate();
  const auto grids = compute_landscape(photo, scene, center, cfg);
  const auto paths = write_landscape(grids, center, cfg);
  const int mid = cfg.landscape_resolution / 2;
  int centered = 0;
  for (const auto& g : grids) {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    g.loss.minCoeff(&i, &j);
    centered += (i == mid && j == mid);
  }
  std::cout << "wrote " << paths.size() << " grids to " << cfg.out_dir.string() << "\n"
            << "minimum at center in " << centered << "/" << grids.size() << " grids\n";
  return 0;
}

// Predicted photo on the clipped pixels (best linear lighting fit of the
// attributes), the photo itself elsewhere.
GrayImage fitted_overlay(const GrayImage& photo, const AttributeImage& attrs) {
  GrayImage out = photo;
  const auto pixels = clip_mask(attrs);
  if (!pixels) return out;
  const LinearFit fit =
      best_linear_fit(accumulate_stats(photo, attrs, *pixels), FitDirection::kPhotoFromAttributes);
  for (std::uint32_t p : *pixels) {
    const Attribute& a = attrs.attribute(p);
    const Eigen::Vector4d m(a[0], a[1], a[2], a[3]);
    out[p] = (fit.A * m + fit.b)(0);
  }
  return out;
}

int cmd_estimate(ExperimentConfig cfg, const std::string& start_text, double band,
                 const std::string& overlay_path) {
  const Scene scene = load_scene(cfg);
  auto [photo, truth] = photo_and_pose(cfg, scene);
  cfg.validate();
  Pose start;
  if (!start_text.empty()) {
    start = parse_pose(start_text);
  } else if (band > 0.0) {
    start = perturb(truth, band, cfg.seed, cfg.width, cfg.height);
  } else {
    start = truth;
  }
  if (start.dimension() != truth.dimension()) throw UsageError("start pose has the wrong length");

  SimplexConfig simplex = cfg.simplex;
  simplex.record_trace = !cfg.trace_path.empty();
  PoseLossEvaluator evaluator(photo, scene.mesh, scene.annotations, cfg.mode, cfg.loss_options());
  const Estimate est = estimate_pose(evaluator, start, simplex);

  std::cout << "start " << format_pose(est.start) << "\nfinal " << format_pose(est.pose)
            << "\nloss " << est.loss << "\nevaluations " << est.optim.evaluations
            << "\nrestarts " << est.optim.restarts_used << "\nconverged "
            << (est.optim.converged ? "yes" : "no") << "\n";
  if (cfg.scenario != Scenario::kPhoto) {
    std::cout << "deviation " << max_normalized_deviation(est.pose, truth, cfg.width, cfg.height)
              << "\n";
  }
  if (est.loss >= kPenaltyLoss) std::cout << "warning: final loss equals the penalty value\n";
  if (!cfg.trace_path.empty()) write_text_file(cfg.trace_path, format_trace_csv(est.optim.trace));
  if (!overlay_path.empty()) {
    evaluator(est.pose);
    write_pgm(fitted_overlay(photo, evaluator.last_attributes()), overlay_path);
  }
  return 0;
}

int cmd_reliability(ExperimentConfig cfg) {
  const Scene scene = load_scene(cfg);
  auto [photo, truth] = photo_and_pose(cfg, scene);
  cfg.validate();
  const ReliabilityReport report = run_reliability(photo, scene, truth, cfg);
  write_reliability(report, cfg);
  std::cout << format_summary(report) << "wrote trials.csv, summary.csv, config.txt to "
            << cfg.out_dir.string() << "\n";
  return 0;
}

int cmd_fixture(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  save_mesh(make_toy_car(), cfg.out_dir / "toy_car.mesh");
  save_annotations(toy_car_annotations(), cfg.out_dir / "toy_car.ann");
  std::cout << "wrote toy_car.mesh and toy_car.ann to " << cfg.out_dir.string() << "\n"
            << "reference pose (parallel, " << cfg.width << "x" << cfg.height << "): "
            << format_pose(toy_car_reference_pose(ProjectionMode::kParallel, cfg.width, cfg.height))
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Featureless 2D-3D pose estimation with an illumination-invariant loss"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* render = app.add_subcommand("render", "write a synthetic photo and attribute planes");
  auto* loss = app.add_subcommand("loss", "print the loss of --photo at --pose");
  auto* landscape = app.add_subcommand("landscape", "pairwise loss grids about --pose");
  auto* estimate = app.add_subcommand("estimate", "estimate the pose from a start pose");
  auto* reliability = app.add_subcommand("reliability", "banded reliability experiment");
  auto* fixture = app.add_subcommand("fixture", "write the toy car mesh and annotations");
  for (auto* sub : {render, loss, landscape, estimate, reliability, fixture}) flags.attach(sub);

  std::string start_text;
  double band = 0.0;
  std::string overlay_path;
  estimate->add_option("--start", start_text, "start pose (default: --band perturbation or truth)");
  estimate->add_option("--band", band, "perturb the truth by this percent band for the start");
  estimate->add_option("--overlay", overlay_path, "write the fitted overlay PGM here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* used = app.get_subcommands().front();
  try {
    ExperimentConfig cfg = flags.build(used);
    if (used == render) return cmd_render(cfg);
    if (used == loss) return cmd_loss(cfg);
    if (used == landscape) return cmd_landscape(cfg);
    if (used == estimate) return cmd_estimate(cfg, start_text, band, overlay_path);
    if (used == reliability) return cmd_reliability(cfg);
    return cmd_fixture(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "invpose: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "invpose: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "invpose: " << e.what() << "\n";
    return 2;
  }
}
