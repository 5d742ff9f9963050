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

#include "invpose/simplex.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace invpose {

void SimplexConfig::validate(int dimension) const {
  if (dimension < 1) throw std::invalid_argument("simplex dimension must be at least 1");
  if (!(reflection > 0.0)) throw std::invalid_argument("reflection coefficient must be > 0");
  if (!(expansion > 1.0)) throw std::invalid_argument("expansion coefficient must be > 1");
  if (!(contraction > 0.0 && contraction < 1.0)) {
    throw std::invalid_argument("contraction coefficient must lie in (0, 1)");
  }
  if (!(shrink > 0.0 && shrink < 1.0)) {
    throw std::invalid_argument("shrink coefficient must lie in (0, 1)");
  }
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be > 0");
  if (point_tol < 0.0) {
    throw std::invalid_argument("point_tol must be >= 0");
  }
  if (max_evals < dimension + 1) {
    throw std::invalid_argument("max_evals must allow at least dimension + 1 evaluations");
  }
  if (max_restarts < 0) throw std::invalid_argument("max_restarts must be >= 0");
  if (!(restart_step > 0.0)) throw std::invalid_argument("restart_step must be > 0");
  if (initial_step.size() != 1 && initial_step.size() != static_cast<std::size_t>(dimension)) {
    throw std::invalid_argument("initial_step needs 1 or dimension entries");
  }
  for (double s : initial_step) {
    if (!(s != 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("initial_step entries must be finite and nonzero");
    }
  }
}

namespace {

class CountingObjective {
 public:
  CountingObjective(const Objective& fn, OptimResult& result, bool trace, int offset)
      : fn_(fn), result_(result), trace_(trace), offset_(offset) {}

  double operator()(const Eigen::VectorXd& x) {
    const double v = fn_(x);
    ++count_;
    if (!std::isfinite(v)) {
      throw std::domain_error("objective returned a non-finite value at evaluation " +
                              std::to_string(offset_ + count_));
    }
    best_ = count_ == 1 ? v : std::min(best_, v);
    if (trace_) result_.trace.push_back({offset_ + count_, v, best_});
    return v;
  }

  int count() const { return count_; }

 private:
  const Objective& fn_;
  OptimResult& result_;
  bool trace_;
  int offset_;
  int count_ = 0;
  double best_ = 0.0;
};

bool has_converged(const std::vector<double>& f, const std::vector<Eigen::VectorXd>& x,
                   const std::vector<int>& order, const SimplexConfig& cfg) {
  const double best = f[order.front()];
  const double worst = f[order.back()];
  if (worst - best <= cfg.convergence_tol) return true;
  double spread = 0.0;
  for (const Eigen::VectorXd& xi : x) {
    spread = std::max(spread, (xi - x[order.front()]).cwiseAbs().maxCoeff());
  }
  return spread <= cfg.point_tol;
}

// One descent; appends evaluations and trace entries to `out` (which may
// already hold earlier descents).
void descend(const Objective& objective, const Eigen::VectorXd& x0,
             const std::vector<double>& steps, const SimplexConfig& cfg, OptimResult& out) {
  const int n = static_cast<int>(x0.size());
  CountingObjective f(objective, out, cfg.record_trace, out.evaluations);
  const int budget = cfg.max_evals;

  std::vector<Eigen::VectorXd> x(n + 1, x0);
  std::vector<double> fx(n + 1);
  fx[0] = f(x[0]);
  for (int i = 0; i < n; ++i) {
    x[i + 1][i] += steps.size() == 1 ? steps[0] : steps[i];
    fx[i + 1] = f(x[i + 1]);
  }

  std::vector<int> order(n + 1);
  bool converged = false;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    // Stable sort keeps ties in vertex order, so runs are reproducible.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    if (has_converged(fx, x, order, cfg)) {
      converged = true;
      break;
    }
    if (f.count() >= budget) break;

    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[n - 1];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += x[order[i]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + cfg.reflection * (centroid - x[worst]);
    const double fr = f(xr);

    if (fr < fx[best]) {
      if (f.count() >= budget) {
        x[worst] = xr;
        fx[worst] = fr;
        continue;
      }
      const Eigen::VectorXd xe = centroid + cfg.expansion * (xr - centroid);
      const double fe = f(xe);
      if (fe < fr) {
        x[worst] = xe;
        fx[worst] = fe;
      } else {
        x[worst] = xr;
        fx[worst] = fr;
      }
      continue;
    }
    if (fr < fx[second_worst]) {
      x[worst] = xr;
      fx[worst] = fr;
      continue;
    }
    if (f.count() >= budget) {
      if (fr < fx[worst]) {
        x[worst] = xr;
        fx[worst] = fr;
      }
      continue;
    }

    bool accepted = false;
    if (fr < fx[worst]) {
      const Eigen::VectorXd xc = centroid + cfg.contraction * (xr - centroid);
      const double fc = f(xc);
      if (fc <= fr) {
        x[worst] = xc;
        fx[worst] = fc;
        accepted = true;
      }
    } else {
      const Eigen::VectorXd xcc = centroid + cfg.contraction * (x[worst] - centroid);
      const double fcc = f(xcc);
      if (fcc < fx[worst]) {
        x[worst] = xcc;
        fx[worst] = fcc;
        accepted = true;
      }
    }
    if (accepted) continue;

    for (int i = 1; i <= n && f.count() < budget; ++i) {
      const int k = order[i];
      x[k] = x[best] + cfg.shrink * (x[k] - x[best]);
      fx[k] = f(x[k]);
    }
  }

  const int best = order.front();
  const bool first = out.descent_evaluations.empty();
  out.evaluations += f.count();
  out.descent_evaluations.push_back(f.count());
  out.descent_converged.push_back(converged);
  // converged describes the descent that holds the incumbent.
  if (first || fx[best] < out.best_value) {
    out.best_point = x[best];
    out.best_value = fx[best];
    out.converged = converged;
  }
}

}  // namespace

OptimResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                     const SimplexConfig& config) {
  config.validate(static_cast<int>(x0.size()));
  OptimResult out;
  descend(objective, x0, config.initial_step, config, out);
  return out;
}

OptimResult minimize_with_restarts(const Objective& objective, const Eigen::VectorXd& x0,
                                   const SimplexConfig& config) {
  config.validate(static_cast<int>(x0.size()));
  OptimResult out;
  descend(objective, x0, config.initial_step, config, out);
  const std::vector<double> restart_steps{config.restart_step};
  for (int r = 0; r < config.max_restarts && out.converged; ++r) {
    const double before = out.best_value;
    descend(objective, out.best_point, restart_steps, config, out);
    ++out.restart_attempts;
    const double gain = before - out.best_value;
    if (!(gain > config.convergence_tol)) break;
    ++out.restarts_used;
  }
  return out;
}

std::string format_trace_csv(const std::vector<TracePoint>& trace) {
  std::string s = "evaluation,loss,best\n";
  char buf[32];
  for (const TracePoint& t : trace) {
    s += std::to_string(t.evaluation);
    s += ',';
    s.append(buf, std::to_chars(buf, buf + sizeof(buf), t.value).ptr);
    s += ',';
    s.append(buf, std::to_chars(buf, buf + sizeof(buf), t.best).ptr);
    s += '\n';
  }
  return s;
}

}  // namespace invpose
