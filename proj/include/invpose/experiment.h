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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "invpose/fixtures.h"
#include "invpose/image.h"
#include "invpose/mesh.h"
#include "invpose/pose.h"
#include "invpose/pose_loss.h"
#include "invpose/render.h"
#include "invpose/simplex.h"

namespace invpose {

// Where the photo of an experiment comes from.
//   artificial  model shaded over a flat background level
//   background  model shaded over seeded smooth noise
//   photo       image file; ground truth unknown
enum class Scenario { kArtificial, kBackground, kPhoto };

const char* to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // Empty paths select the built-in toy car.
  std::filesystem::path mesh_path;
  std::filesystem::path annotations_path;
  std::filesystem::path photo_path;
  // Ground truth, landscape center or estimation start depending on the
  // command. Unset means the toy car reference pose.
  std::optional<Pose> pose;
  ProjectionMode mode = ProjectionMode::kParallel;
  Scenario scenario = Scenario::kArtificial;
  int width = 128;
  int height = 128;
  Lighting lighting = default_lighting();
  double background_level = 0.0;
  std::uint64_t background_seed = 7;
  std::vector<double> bands{1, 2, 4, 8, 16};
  int trials_per_band = 10;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::filesystem::path out_dir = ".";
  bool clip = true;
  std::filesystem::path trace_path;
  int landscape_resolution = 41;
  double landscape_range = 0.2;
  double success_threshold = 0.005;
  SimplexConfig simplex;

  // Throws ConfigError.
  void validate() const;
  LossOptions loss_options() const { return {clip, kMinPixelCount}; }
};

// key=value lines, '#' comments. Keys mirror the command-line flags
// (mesh, annotations, photo, pose, mode, scenario, width, height, lighting,
// background_level, background_seed, bands, trials, seed, jobs, out, clip,
// trace, resolution, range, success_threshold, and simplex.* overrides).
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
// Every setting that influences results, in parse_config syntax.
std::string format_config(const ExperimentConfig& config);

// "ambient diffuse lx ly lz [offset]"; the direction is normalized.
Lighting parse_lighting(const std::string& text);
std::string format_lighting(const Lighting& lighting);

struct Scene {
  Mesh mesh;
  ModelAnnotations annotations;
};

Scene load_scene(const ExperimentConfig& config);

// The configured pose, or the toy car reference for the configured image size.
Pose configured_pose(const ExperimentConfig& config);

struct SyntheticPhoto {
  GrayImage photo;
  AttributeImage attributes;
};

// Renders the scene at `truth` and shades it per the configured scenario
// (artificial or background). Throws InfeasiblePose.
SyntheticPhoto synthesize_photo(const Scene& scene, const Pose& truth,
                                const ExperimentConfig& config);

// Photo for an experiment: the file for the photo scenario, else synthetic.
GrayImage experiment_photo(const Scene& scene, const Pose& truth, const ExperimentConfig& config);

struct Estimate {
  Pose start;
  Pose pose;
  double loss = 0.0;
  OptimResult optim;
};

// Downhill simplex with restarts over the normalized pose.
Estimate estimate_pose(PoseLossEvaluator& evaluator, const Pose& start,
                       const SimplexConfig& simplex);

// Largest per-parameter difference in normalized units.
double max_normalized_deviation(const Pose& a, const Pose& b, int width, int height);

// Per-trial seed derived from the master seed and the global trial index.
std::uint64_t trial_seed(std::uint64_t master, std::size_t index);

struct TrialRecord {
  double band = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  Pose start;
  Pose final_pose;
  double final_loss = 0.0;
  int evaluations = 0;
  int restarts_used = 0;
  bool converged = false;
  // Per descent (initial run, then each restart).
  std::vector<int> descent_evaluations;
  std::vector<bool> descent_converged;
  double deviation = 0.0;  // max normalized deviation from the truth
  bool success = false;
};

struct BandSummary {
  double band = 0.0;
  int trials = 0;
  int successes = 0;
  double reliability = 0.0;
};

struct ReliabilityReport {
  // True when success means "final loss no worse than the reference pose's
  // loss" because no ground truth exists (photo scenario).
  bool loss_proxy = false;
  double reference_loss = 0.0;
  std::vector<BandSummary> bands;
  std::vector<TrialRecord> trials;
};

// Runs trials_per_band estimations per band from seeded perturbations of
// `truth`, up to config.jobs at a time. Output is independent of jobs.
ReliabilityReport run_reliability(const GrayImage& photo, const Scene& scene, const Pose& truth,
                                  const ExperimentConfig& config);

std::string trials_csv(const ReliabilityReport& report);
std::string summary_csv(const ReliabilityReport& report);
std::string format_summary(const ReliabilityReport& report);

// Writes trials.csv, summary.csv and config.txt into config.out_dir.
void write_reliability(const ReliabilityReport& report, const ExperimentConfig& config);

struct LandscapeGrid {
  int first = 0;   // parameter indices into the normalized pose
  int second = 1;
  std::vector<double> offsets;  // normalized offsets applied to both axes
  Eigen::MatrixXd loss;         // loss(i, j): first + offsets[i], second + offsets[j]
};

std::vector<std::string> pose_parameter_names(int dimension);

// One grid per unordered parameter pair about `center`.
std::vector<LandscapeGrid> compute_landscape(const GrayImage& photo, const Scene& scene,
                                             const Pose& center, const ExperimentConfig& config);

// Long format: "<first>,<second>,loss" with absolute normalized values.
std::string landscape_csv(const LandscapeGrid& grid, const Pose& center, int width, int height);
std::string landscape_file_name(const LandscapeGrid& grid, int dimension);

// Writes one CSV per grid into config.out_dir; returns the paths.
std::vector<std::filesystem::path> write_landscape(const std::vector<LandscapeGrid>& grids,
                                                   const Pose& center,
                                                   const ExperimentConfig& config);

}  // namespace invpose
