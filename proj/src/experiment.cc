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
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace invpose {
namespace {

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a real number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int to_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  Int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

// Comma- or space-separated reals.
std::vector<double> to_reals(const std::string& key, const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<double> out;
  for (std::string tok; in >> tok;) out.push_back(to_real(key, tok));
  if (out.empty()) throw ConfigError(key + ": expected at least one value");
  return out;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (double x : v) {
    if (!s.empty()) s += ',';
    s += format_real(x);
  }
  return s;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Runs task(i) for i in [0, count) on up to `jobs` threads and rethrows the
// first failure.
template <typename MakeWorker>
void parallel_for(std::size_t count, int jobs, MakeWorker make_worker) {
  const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      auto task = make_worker();
      for (std::size_t i; (i = next++) < count;) task(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = count;
    }
  };
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kArtificial: return "artificial";
    case Scenario::kBackground: return "background";
    case Scenario::kPhoto: return "photo";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "artificial") return Scenario::kArtificial;
  if (text == "background") return Scenario::kBackground;
  if (text == "photo") return Scenario::kPhoto;
  throw ConfigError("unknown scenario '" + text + "' (artificial, background, photo)");
}

Lighting parse_lighting(const std::string& text) {
  const auto v = to_reals("lighting", text);
  if (v.size() != 5 && v.size() != 6) {
    throw ConfigError("lighting: expected 'ambient diffuse lx ly lz [offset]'");
  }
  Lighting l;
  l.ambient = v[0];
  l.diffuse = v[1];
  const Vec3 dir(v[2], v[3], v[4]);
  if (dir.norm() == 0.0) throw ConfigError("lighting: zero light direction");
  l.direction = dir.normalized();
  l.offset = v.size() == 6 ? v[5] : 0.0;
  return l;
}

std::string format_lighting(const Lighting& l) {
  return format_real(l.ambient) + ' ' + format_real(l.diffuse) + ' ' +
         format_real(l.direction.x()) + ' ' + format_real(l.direction.y()) + ' ' +
         format_real(l.direction.z()) + ' ' + format_real(l.offset);
}

void ExperimentConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("image size must be positive");
  if (trials_per_band < 1) throw ConfigError("trials per band must be at least 1");
  if (bands.empty()) throw ConfigError("at least one deviation band is required");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!(bands[i] > 0.0)) throw ConfigError("deviation bands must be positive");
    if (i > 0 && !(bands[i] > bands[i - 1])) {
      throw ConfigError("deviation bands must be sorted ascending without repeats");
    }
  }
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (landscape_resolution < 3 || landscape_resolution % 2 == 0) {
    throw ConfigError("landscape resolution must be odd and at least 3");
  }
  if (!(landscape_range > 0.0)) throw ConfigError("landscape range must be positive");
  if (!(success_threshold > 0.0)) throw ConfigError("success threshold must be positive");
  if (scenario == Scenario::kPhoto && photo_path.empty()) {
    throw ConfigError("the photo scenario needs a photo path");
  }
  if (pose && pose->focal_distance.has_value() != (mode == ProjectionMode::kPerspective)) {
    throw ConfigError(mode == ProjectionMode::kPerspective
                          ? "perspective mode needs a 7-value pose (with focal distance)"
                          : "parallel mode needs a 6-value pose (no focal distance)");
  }
  try {
    simplex.validate(mode == ProjectionMode::kPerspective ? 7 : 6);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_config_value(ExperimentConfig& c, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(value);
  try {
    if (key == "mesh") c.mesh_path = v;
    else if (key == "annotations") c.annotations_path = v;
    else if (key == "photo") c.photo_path = v;
    else if (key == "pose") c.pose = v.empty() ? std::nullopt : std::optional(parse_pose(v));
    else if (key == "mode") c.mode = parse_projection_mode(v);
    else if (key == "scenario") c.scenario = parse_scenario(v);
    else if (key == "width") c.width = to_integer<int>(key, v);
    else if (key == "height") c.height = to_integer<int>(key, v);
    else if (key == "lighting") c.lighting = parse_lighting(v);
    else if (key == "background_level") c.background_level = to_real(key, v);
    else if (key == "background_seed") c.background_seed = to_integer<std::uint64_t>(key, v);
    else if (key == "bands") c.bands = to_reals(key, v);
    else if (key == "trials") c.trials_per_band = to_integer<int>(key, v);
    else if (key == "seed") c.seed = to_integer<std::uint64_t>(key, v);
    else if (key == "jobs") c.jobs = to_integer<int>(key, v);
    else if (key == "out") c.out_dir = v;
    else if (key == "clip") c.clip = to_bool(key, v);
    else if (key == "trace") c.trace_path = v;
    else if (key == "resolution") c.landscape_resolution = to_integer<int>(key, v);
    else if (key == "range") c.landscape_range = to_real(key, v);
    else if (key == "success_threshold") c.success_threshold = to_real(key, v);
    else if (key == "simplex.initial_step") c.simplex.initial_step = to_reals(key, v);
    else if (key == "simplex.reflection") c.simplex.reflection = to_real(key, v);
    else if (key == "simplex.expansion") c.simplex.expansion = to_real(key, v);
    else if (key == "simplex.contraction") c.simplex.contraction = to_real(key, v);
    else if (key == "simplex.shrink") c.simplex.shrink = to_real(key, v);
    else if (key == "simplex.convergence_tol") c.simplex.convergence_tol = to_real(key, v);
    else if (key == "simplex.point_tol") c.simplex.point_tol = to_real(key, v);
    else if (key == "simplex.max_evals") c.simplex.max_evals = to_integer<int>(key, v);
    else if (key == "simplex.max_restarts") c.simplex.max_restarts = to_integer<int>(key, v);
    else if (key == "simplex.restart_step") c.simplex.restart_step = to_real(key, v);
    else throw ConfigError("unknown configuration key '" + key + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_config_value(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(read_text_file(path), std::move(base));
}

std::string format_config(const ExperimentConfig& c) {
  std::string s;
  auto put = [&s](const std::string& k, const std::string& v) { s += k + '=' + v + '\n'; };
  put("mesh", c.mesh_path.string());
  put("annotations", c.annotations_path.string());
  put("photo", c.photo_path.string());
  put("pose", c.pose ? format_pose(*c.pose) : "");
  put("mode", to_string(c.mode));
  put("scenario", to_string(c.scenario));
  put("width", std::to_string(c.width));
  put("height", std::to_string(c.height));
  put("lighting", format_lighting(c.lighting));
  put("background_level", format_real(c.background_level));
  put("background_seed", std::to_string(c.background_seed));
  put("bands", join_reals(c.bands));
  put("trials", std::to_string(c.trials_per_band));
  put("seed", std::to_string(c.seed));
  put("clip", c.clip ? "true" : "false");
  put("resolution", std::to_string(c.landscape_resolution));
  put("range", format_real(c.landscape_range));
  put("success_threshold", format_real(c.success_threshold));
  put("simplex.initial_step", join_reals(c.simplex.initial_step));
  put("simplex.reflection", format_real(c.simplex.reflection));
  put("simplex.expansion", format_real(c.simplex.expansion));
  put("simplex.contraction", format_real(c.simplex.contraction));
  put("simplex.shrink", format_real(c.simplex.shrink));
  put("simplex.convergence_tol", format_real(c.simplex.convergence_tol));
  put("simplex.point_tol", format_real(c.simplex.point_tol));
  put("simplex.max_evals", std::to_string(c.simplex.max_evals));
  put("simplex.max_restarts", std::to_string(c.simplex.max_restarts));
  put("simplex.restart_step", format_real(c.simplex.restart_step));
  return s;
}

Scene load_scene(const ExperimentConfig& config) {
  if (config.mesh_path.empty() != config.annotations_path.empty()) {
    throw ConfigError("mesh and annotations must be given together");
  }
  if (config.mesh_path.empty()) return {make_toy_car(), toy_car_annotations()};
  Mesh mesh = load_mesh(config.mesh_path);
  if (mesh.vertex_normals.empty()) mesh = compute_vertex_normals(std::move(mesh));
  return {std::move(mesh), load_annotations(config.annotations_path)};
}

Pose configured_pose(const ExperimentConfig& config) {
  if (config.pose) return *config.pose;
  return toy_car_reference_pose(config.mode, config.width, config.height);
}

SyntheticPhoto synthesize_photo(const Scene& scene, const Pose& truth,
                                const ExperimentConfig& config) {
  const Camera camera =
      pose_to_camera(truth, scene.annotations, config.mode, config.width, config.height);
  SyntheticPhoto out{GrayImage(config.width, config.height),
                     render_attributes(scene.mesh, camera)};
  switch (config.scenario) {
    case Scenario::kArtificial:
      out.photo = shade_phong(out.attributes, config.lighting, config.background_level);
      break;
    case Scenario::kBackground:
      out.photo = composite_over_background(
          shade_phong(out.attributes, config.lighting),
          out.attributes.coverage(),
          smooth_noise_background(config.width, config.height, config.background_seed));
      break;
    case Scenario::kPhoto:
      throw ConfigError("the photo scenario does not synthesize photos");
  }
  return out;
}

GrayImage experiment_photo(const Scene& scene, const Pose& truth, const ExperimentConfig& config) {
  if (config.scenario != Scenario::kPhoto) return synthesize_photo(scene, truth, config).photo;
  GrayImage photo = read_gray_image(config.photo_path);
  if (photo.width() != config.width || photo.height() != config.height) {
    throw ConfigError("photo is " + std::to_string(photo.width()) + "x" +
                      std::to_string(photo.height()) + " but the configuration says " +
                      std::to_string(config.width) + "x" + std::to_string(config.height));
  }
  return photo;
}

Estimate estimate_pose(PoseLossEvaluator& evaluator, const Pose& start,
                       const SimplexConfig& simplex) {
  const int w = evaluator.width();
  const int h = evaluator.height();
  Estimate est;
  est.start = start;
  est.optim = minimize_with_restarts(
      [&evaluator](const Eigen::VectorXd& x) { return evaluator.normalized(x); },
      normalize(start, w, h).values, simplex);
  est.pose = sanitize_pose(denormalize({est.optim.best_point}, w, h));
  est.loss = est.optim.best_value;
  return est;
}

double max_normalized_deviation(const Pose& a, const Pose& b, int width, int height) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("poses have different dimensions");
  }
  return (normalize(a, width, height).values - normalize(b, width, height).values)
      .cwiseAbs()
      .maxCoeff();
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t index) {
  return mix64(master + static_cast<std::uint64_t>(index));
}

ReliabilityReport run_reliability(const GrayImage& photo, const Scene& scene, const Pose& truth,
                                  const ExperimentConfig& config) {
  config.validate();
  const int w = photo.width();
  const int h = photo.height();
  ReliabilityReport report;
  report.loss_proxy = config.scenario == Scenario::kPhoto;
  if (report.loss_proxy) {
    report.reference_loss = pose_loss(photo, scene.mesh, scene.annotations, truth, config.mode,
                                      config.loss_options());
  }

  const std::size_t per_band = static_cast<std::size_t>(config.trials_per_band);
  report.trials.resize(config.bands.size() * per_band);
  parallel_for(report.trials.size(), config.jobs, [&] {
    auto evaluator = std::make_shared<PoseLossEvaluator>(photo, scene.mesh, scene.annotations,
                                                         config.mode, config.loss_options());
    return [&, evaluator](std::size_t i) {
      TrialRecord& rec = report.trials[i];
      rec.band = config.bands[i / per_band];
      rec.trial = static_cast<int>(i % per_band);
      rec.seed = trial_seed(config.seed, i);
      rec.start = perturb(truth, rec.band, rec.seed, w, h);
      const Estimate est = estimate_pose(*evaluator, rec.start, config.simplex);
      rec.final_pose = est.pose;
      rec.final_loss = est.loss;
      rec.evaluations = est.optim.evaluations;
      rec.restarts_used = est.optim.restarts_used;
      rec.converged = est.optim.converged;
      rec.descent_evaluations = est.optim.descent_evaluations;
      rec.descent_converged = est.optim.descent_converged;
      rec.deviation = max_normalized_deviation(rec.final_pose, truth, w, h);
      rec.success = report.loss_proxy ? rec.final_loss <= report.reference_loss
                                      : rec.deviation < config.success_threshold;
    };
  });

  for (std::size_t b = 0; b < config.bands.size(); ++b) {
    BandSummary s;
    s.band = config.bands[b];
    s.trials = config.trials_per_band;
    for (std::size_t t = 0; t < per_band; ++t) s.successes += report.trials[b * per_band + t].success;
    s.reliability = static_cast<double>(s.successes) / s.trials;
    report.bands.push_back(s);
  }
  return report;
}

std::string trials_csv(const ReliabilityReport& report) {
  const bool focal = !report.trials.empty() && report.trials.front().start.focal_distance;
  std::string s = "band,trial,seed," + pose_csv_header(focal, "start_") + ',' +
                  pose_csv_header(focal, "final_") +
                  ",final_loss,evaluations,restarts_used,converged,deviation,success\n";
  for (const auto& t : report.trials) {
    s += format_real(t.band) + ',' + std::to_string(t.trial) + ',' + std::to_string(t.seed) + ',' +
         pose_csv_row(t.start) + ',' + pose_csv_row(t.final_pose) + ',' +
         format_real(t.final_loss) + ',' + std::to_string(t.evaluations) + ',' +
         std::to_string(t.restarts_used) + ',' + (t.converged ? "1" : "0") + ',' +
         format_real(t.deviation) + ',' + (t.success ? "1" : "0") + '\n';
  }
  return s;
}

std::string summary_csv(const ReliabilityReport& report) {
  std::string s = "band,trials,successes,reliability\n";
  for (const auto& b : report.bands) {
    s += format_real(b.band) + ',' + std::to_string(b.trials) + ',' +
         std::to_string(b.successes) + ',' + format_real(b.reliability) + '\n';
  }
  return s;
}

std::string format_summary(const ReliabilityReport& report) {
  std::ostringstream out;
  if (report.loss_proxy) {
    out << "success rule: final loss <= reference pose loss " << report.reference_loss
        << " (proxy, no ground truth)\n";
  } else {
    out << "success rule: max normalized deviation from ground truth below threshold\n";
  }
  for (const auto& b : report.bands) {
    out << "band " << b.band << "%: " << b.successes << "/" << b.trials << " reliability "
        << b.reliability << '\n';
  }
  return out.str();
}

void write_reliability(const ReliabilityReport& report, const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  write_text_file(config.out_dir / "trials.csv", trials_csv(report));
  write_text_file(config.out_dir / "summary.csv", summary_csv(report));
  write_text_file(config.out_dir / "config.txt", format_config(config));
}

std::vector<std::string> pose_parameter_names(int dimension) {
  std::vector<std::string> names{"mu_x", "mu_y", "delta_x", "delta_y", "psi_x", "psi_y"};
  if (dimension == 7) names.push_back("focal");
  if (dimension != 6 && dimension != 7) throw std::invalid_argument("pose dimension must be 6 or 7");
  return names;
}

std::vector<LandscapeGrid> compute_landscape(const GrayImage& photo, const Scene& scene,
                                             const Pose& center, const ExperimentConfig& config) {
  config.validate();
  const Eigen::VectorXd c = normalize(center, photo.width(), photo.height()).values;
  const int dim = static_cast<int>(c.size());
  const int res = config.landscape_resolution;
  const int half = res / 2;

  std::vector<double> offsets(res);
  for (int i = 0; i < res; ++i) offsets[i] = config.landscape_range * (i - half) / half;

  std::vector<LandscapeGrid> grids;
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      grids.push_back({a, b, offsets, Eigen::MatrixXd(res, res)});
    }
  }
  parallel_for(grids.size(), config.jobs, [&] {
    auto evaluator = std::make_shared<PoseLossEvaluator>(photo, scene.mesh, scene.annotations,
                                                         config.mode, config.loss_options());
    return [&, evaluator](std::size_t g) {
      LandscapeGrid& grid = grids[g];
      Eigen::VectorXd x = c;
      for (int i = 0; i < res; ++i) {
        for (int j = 0; j < res; ++j) {
          x[grid.first] = c[grid.first] + offsets[i];
          x[grid.second] = c[grid.second] + offsets[j];
          grid.loss(i, j) = evaluator->normalized(x);
        }
      }
    };
  });
  return grids;
}

std::string landscape_file_name(const LandscapeGrid& grid, int dimension) {
  const auto names = pose_parameter_names(dimension);
  return "landscape_" + names[grid.first] + "__" + names[grid.second] + ".csv";
}

std::string landscape_csv(const LandscapeGrid& grid, const Pose& center, int width, int height) {
  const Eigen::VectorXd c = normalize(center, width, height).values;
  const auto names = pose_parameter_names(static_cast<int>(c.size()));
  std::string s = names[grid.first] + ',' + names[grid.second] + ",loss\n";
  for (std::size_t i = 0; i < grid.offsets.size(); ++i) {
    for (std::size_t j = 0; j < grid.offsets.size(); ++j) {
      s += format_real(c[grid.first] + grid.offsets[i]) + ',' +
           format_real(c[grid.second] + grid.offsets[j]) + ',' +
           format_real(grid.loss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) +
           '\n';
    }
  }
  return s;
}

std::vector<std::filesystem::path> write_landscape(const std::vector<LandscapeGrid>& grids,
                                                   const Pose& center,
                                                   const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& g : grids) {
    auto path = config.out_dir / landscape_file_name(g, center.dimension());
    write_text_file(path, landscape_csv(g, center, config.width, config.height));
    paths.push_back(std::move(path));
  }
  write_text_file(config.out_dir / "config.txt", format_config(config));
  return paths;
}

}  // namespace invpose
