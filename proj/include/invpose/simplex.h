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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace invpose {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct SimplexConfig {
  // Per-axis displacement of the initial simplex vertices. A single entry
  // is broadcast to every dimension.
  std::vector<double> initial_step{0.05};
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  // Converged when f_worst - f_best <= convergence_tol, or when the simplex
  // has collapsed below point_tol in every coordinate.
  double convergence_tol = 1e-5;
  double point_tol = 1e-10;
  int max_evals = 500;      // per descent
  int max_restarts = 8;
  double restart_step = 0.05;
  bool record_trace = false;

  // Throws std::invalid_argument when a coefficient or budget is out of range.
  void validate(int dimension) const;
};

struct TracePoint {
  int evaluation = 0;  // 1-based, counted across restarts
  double value = 0.0;
  double best = 0.0;   // best value seen so far
};

struct OptimResult {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  int evaluations = 0;
  int restarts_used = 0;      // restarts that improved the optimum
  int restart_attempts = 0;
  bool converged = false;
  std::vector<int> descent_evaluations;  // one entry per descent
  std::vector<bool> descent_converged;
  std::vector<TracePoint> trace;
};

// Plain Nelder-Mead downhill simplex from x0 plus per-axis steps.
// Throws std::domain_error if the objective returns a non-finite value.
OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                     const SimplexConfig& config);

// Repeats the descent from the incumbent with a fresh simplex of size
// restart_step for as long as that lowers the value by more than the
// convergence threshold, at most max_restarts times.
OptimResult minimize_with_restarts(const Objective& objective, const Eigen::VectorXd& x0,
                                   const SimplexConfig& config);

std::string format_trace_csv(const std::vector<TracePoint>& trace);

}  // namespace invpose
