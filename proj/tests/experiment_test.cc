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

#include "invpose/experiment.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace invpose {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("invpose_experiment_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Cheap settings for end-to-end runs.
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.width = 64;
  c.height = 48;
  c.bands = {1, 2};
  c.trials_per_band = 2;
  c.simplex.max_evals = 60;
  c.simplex.max_restarts = 1;
  return c;
}

TEST(Config, ParseOverridesAndComments) {
  const ExperimentConfig c = parse_config(
      "# comment\n"
      "width = 320\n"
      "height=240  # trailing\n"
      "mode=perspective\n"
      "pose=100 120 80 -2 0.3 0.2 320\n"
      "bands=1,2,4\n"
      "clip=false\n"
      "lighting=0.2 0.8 0 0 2 0.1\n"
      "simplex.initial_step=0.1\n"
      "simplex.max_evals=300\n");
  EXPECT_EQ(c.width, 320);
  EXPECT_EQ(c.height, 240);
  EXPECT_EQ(c.mode, ProjectionMode::kPerspective);
  ASSERT_TRUE(c.pose.has_value());
  EXPECT_EQ(*c.pose->focal_distance, 320.0);
  EXPECT_EQ(c.bands, (std::vector<double>{1, 2, 4}));
  EXPECT_FALSE(c.clip);
  EXPECT_EQ(c.lighting.direction, Vec3::UnitZ());
  EXPECT_EQ(c.lighting.offset, 0.1);
  EXPECT_EQ(c.simplex.initial_step, std::vector<double>{0.1});
  EXPECT_EQ(c.simplex.max_evals, 300);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, FormatRoundTrip) {
  ExperimentConfig c = small_config();
  c.pose = toy_car_reference_pose(ProjectionMode::kParallel, 64, 48);
  c.scenario = Scenario::kBackground;
  c.simplex.restart_step = 0.125;
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text)), text);
  c.pose.reset();
  EXPECT_FALSE(parse_config(format_config(c)).pose.has_value());
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("nonsense=1\n"), ConfigError);
  EXPECT_THROW(parse_config("width\n"), ConfigError);
  EXPECT_THROW(parse_config("width=abc\n"), ConfigError);
  EXPECT_THROW(parse_config("mode=fisheye\n"), ConfigError);
  try {
    parse_config("width=10\n\nclip=maybe\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  ExperimentConfig c;
  c.bands = {2, 1};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.landscape_resolution = 40;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.mode = ProjectionMode::kPerspective;
  c.pose = toy_car_reference_pose(ProjectionMode::kParallel, 128, 128);
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.scenario = Scenario::kPhoto;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.simplex.shrink = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, LightingText) {
  const Lighting l = parse_lighting("0.3 0.7 3 0 4");
  EXPECT_NEAR(l.direction.x(), 0.6, 1e-15);
  EXPECT_NEAR(l.direction.z(), 0.8, 1e-15);
  EXPECT_EQ(l.offset, 0.0);
  const Lighting back = parse_lighting(format_lighting(l));
  EXPECT_LE((back.direction - l.direction).norm(), 1e-15);
  EXPECT_THROW(parse_lighting("1 1 0 0 0"), ConfigError);
  EXPECT_THROW(parse_lighting("1 1 0"), ConfigError);
}

TEST(Scenario, TextRoundTrip) {
  for (Scenario s : {Scenario::kArtificial, Scenario::kBackground, Scenario::kPhoto}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
  EXPECT_THROW(parse_scenario("studio"), ConfigError);
}

TEST(Scene, SyntheticScenariosDifferOnlyInTheBackground) {
  ExperimentConfig c = small_config();
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const SyntheticPhoto art = synthesize_photo(scene, truth, c);
  c.scenario = Scenario::kBackground;
  const SyntheticPhoto bg = synthesize_photo(scene, truth, c);
  int differing = 0;
  for (std::size_t i = 0; i < art.photo.size(); ++i) {
    if (art.attributes.covered(i)) {
      EXPECT_EQ(art.photo[i], bg.photo[i]);
    } else {
      EXPECT_EQ(art.photo[i], c.background_level);
      differing += bg.photo[i] != art.photo[i];
    }
  }
  EXPECT_GT(differing, 100);
}

TEST(Scene, LoadsMeshAndAnnotationFiles) {
  const fs::path dir = fresh_dir("scene");
  save_mesh(make_toy_car(), dir / "car.mesh");
  save_annotations(toy_car_annotations(), dir / "car.ann");
  ExperimentConfig c;
  c.mesh_path = dir / "car.mesh";
  c.annotations_path = dir / "car.ann";
  const Scene scene = load_scene(c);
  EXPECT_EQ(scene.mesh.triangle_count(), make_toy_car().triangle_count());
  c.annotations_path.clear();
  EXPECT_THROW(load_scene(c), ConfigError);
  fs::remove_all(dir);
}

TEST(Estimate, StartingAtTruthStaysThere) {
  const ExperimentConfig c = small_config();
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const GrayImage photo = experiment_photo(scene, truth, c);
  PoseLossEvaluator ev(photo, scene.mesh, scene.annotations, c.mode, c.loss_options());
  SimplexConfig s = c.simplex;
  s.max_evals = 200;
  const Estimate est = estimate_pose(ev, truth, s);
  EXPECT_LE(est.loss, 1e-9);
  EXPECT_EQ(est.optim.restarts_used, 0);
  EXPECT_LT(max_normalized_deviation(est.pose, truth, c.width, c.height), 1e-3);
}

TEST(Reliability, DeterministicAcrossJobCounts) {
  ExperimentConfig c = small_config();
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const GrayImage photo = experiment_photo(scene, truth, c);
  const ReliabilityReport one = run_reliability(photo, scene, truth, c);
  c.jobs = 3;
  const ReliabilityReport three = run_reliability(photo, scene, truth, c);
  EXPECT_EQ(trials_csv(one), trials_csv(three));
  EXPECT_EQ(summary_csv(one), summary_csv(three));

  ASSERT_EQ(one.trials.size(), 4u);
  ASSERT_EQ(one.bands.size(), 2u);
  for (const TrialRecord& t : one.trials) {
    EXPECT_EQ(t.success, t.deviation < c.success_threshold);
    EXPECT_NEAR(t.deviation, max_normalized_deviation(t.final_pose, truth, c.width, c.height),
                0.0);
    EXPECT_LE(t.evaluations, c.simplex.max_evals * (c.simplex.max_restarts + 1));
  }
  EXPECT_NE(trial_seed(1, 0), trial_seed(1, 1));
  EXPECT_NE(trial_seed(1, 0), trial_seed(2, 0));
  EXPECT_EQ(one.trials[1].seed, trial_seed(c.seed, 1));

  const std::string csv = trials_csv(one);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "band,trial,seed," + pose_csv_header(false, "start_") + "," +
                pose_csv_header(false, "final_") +
                ",final_loss,evaluations,restarts_used,converged,deviation,success");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Reliability, WritesOutputs) {
  ExperimentConfig c = small_config();
  c.bands = {1};
  c.trials_per_band = 1;
  c.out_dir = fresh_dir("reliability");
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const ReliabilityReport r =
      run_reliability(experiment_photo(scene, truth, c), scene, truth, c);
  write_reliability(r, c);
  EXPECT_TRUE(fs::exists(c.out_dir / "trials.csv"));
  EXPECT_EQ(slurp(c.out_dir / "summary.csv").substr(0, 34), "band,trials,successes,reliability\n");
  EXPECT_EQ(parse_config(slurp(c.out_dir / "config.txt")).width, 64);
  fs::remove_all(c.out_dir);
}

TEST(Landscape, GridsCoverEveryPairAndPeakAtTheCenter) {
  ExperimentConfig c = small_config();
  c.landscape_resolution = 5;
  c.landscape_range = 0.1;
  c.out_dir = fresh_dir("landscape");
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const GrayImage photo = experiment_photo(scene, truth, c);
  const auto grids = compute_landscape(photo, scene, truth, c);
  ASSERT_EQ(grids.size(), 15u);
  for (const LandscapeGrid& g : grids) {
    EXPECT_LT(g.first, g.second);
    EXPECT_EQ(g.offsets, (std::vector<double>{-0.1, -0.05, 0.0, 0.05, 0.1}));
    EXPECT_LE(g.loss(2, 2), 1e-9);
    EXPECT_EQ(g.loss.minCoeff(), g.loss(2, 2));
  }
  const auto paths = write_landscape(grids, truth, c);
  ASSERT_EQ(paths.size(), 15u);
  EXPECT_EQ(paths.front().filename(), "landscape_mu_x__mu_y.csv");
  const std::string csv = slurp(paths.front());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mu_x,mu_y,loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  EXPECT_EQ(pose_parameter_names(7).back(), "focal");
  fs::remove_all(c.out_dir);
}

// Further out the clipped loss saturates and the rays stop being monotone.
TEST(Landscape, MuYDeltaXRaysRiseNearTheCenter) {
  ExperimentConfig c;
  c.landscape_resolution = 21;
  c.landscape_range = 0.02;
  const Scene scene = load_scene(c);
  const Pose truth = configured_pose(c);
  const auto grids = compute_landscape(experiment_photo(scene, truth, c), scene, truth, c);
  const auto it = std::find_if(grids.begin(), grids.end(),
                               [](const LandscapeGrid& g) { return g.first == 1 && g.second == 2; });
  ASSERT_NE(it, grids.end());
  const Eigen::MatrixXd& l = it->loss;
  const int mid = 10;
  for (int k = 1; k <= mid; ++k) {
    EXPECT_GT(l(mid + k, mid), l(mid + k - 1, mid)) << k;
    EXPECT_GT(l(mid - k, mid), l(mid - k + 1, mid)) << k;
    EXPECT_GT(l(mid, mid + k), l(mid, mid + k - 1)) << k;
    EXPECT_GT(l(mid, mid - k), l(mid, mid - k + 1)) << k;
  }
}

}  // namespace
}  // namespace invpose
