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

#include "invpose/pose.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "invpose/fixtures.h"

namespace invpose {
namespace {

constexpr int kW = 640;
constexpr int kH = 480;

Pose random_pose(std::mt19937_64& rng, ProjectionMode mode) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  Pose p;
  p.mu = {40 + 560 * u(rng), 40 + 400 * u(rng)};
  const double len = 20 + 200 * u(rng);
  const double a = ang(rng);
  p.delta = {len * std::cos(a), len * std::sin(a)};
  const double r = 0.95 * std::sqrt(u(rng));
  const double b = ang(rng);
  p.psi_xy = {r * std::cos(b), r * std::sin(b)};
  if (mode == ProjectionMode::kPerspective) p.focal_distance = 200 + 1500 * u(rng);
  return p;
}

void expect_constraints(const Pose& pose, const ModelAnnotations& ann, ProjectionMode mode) {
  const Camera cam = pose_to_camera(pose, ann, mode, kW, kH);
  const Vec3 rear = cam.to_camera(ann.rear_wheel_center);
  const Vec3 front = cam.to_camera(ann.front_wheel_center);
  if (mode == ProjectionMode::kPerspective) {
    ASSERT_LT(rear.z(), 0.0);
    ASSERT_LT(front.z(), 0.0);
  }
  EXPECT_LE((cam.project(rear) - pose.mu).norm(), 1e-6);
  EXPECT_LE((cam.project(front) - pose.mu - pose.delta).norm(), 1e-6);
  EXPECT_LE((cam.rotation * ann.axle_direction - axle_vector(pose.psi_xy)).norm(), 1e-9);
  // Inverse consistency through the wheel-center projections.
  const Pose back = extract_pose(cam, ann);
  EXPECT_LE((back.mu - pose.mu).norm(), 1e-6);
  EXPECT_LE((back.delta - pose.delta).norm(), 1e-6);
  EXPECT_LE((back.psi_xy - pose.psi_xy).norm(), 1e-9);
}

TEST(PsiZ, ClosedForm) {
  EXPECT_EQ(psi_z({0, 0}), -1.0);
  EXPECT_EQ(psi_z({1, 0}), 0.0);
  EXPECT_NEAR(psi_z({0.6, 0.0}), -0.8, 1e-15);
  EXPECT_THROW(psi_z({0.8, 0.7}), std::domain_error);
}

TEST(PsiZ, UnitAxleOnOpenDisc) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(u(rng), u(rng));
    if (p.squaredNorm() >= 1.0) continue;
    EXPECT_NEAR(psi_z(p) * psi_z(p) + p.squaredNorm(), 1.0, 1e-12);
  }
}

TEST(ClampToDisc, PullsBackRadially) {
  const Vec2 c = clamp_to_disc({3.0, 4.0});
  EXPECT_NEAR(c.norm(), 1.0 - 1e-9, 1e-15);
  EXPECT_NEAR(c.x() / c.y(), 0.75, 1e-15);
  EXPECT_EQ(clamp_to_disc({0.3, 0.1}), Vec2(0.3, 0.1));
}

TEST(Normalize, Definition) {
  Pose p;
  p.mu = {kW, kH};
  p.delta = {kW / 2.0, 0};
  p.psi_xy = {0.1, -0.2};
  NormalizedPose n = normalize(p, kW, kH);
  EXPECT_EQ(n.values, (Eigen::VectorXd(6) << 1, 1, 0.5, 0, 0.1, -0.2).finished());
  p.mu = {320, 240};
  p.delta = {160, 0};
  p.focal_distance = 1280;
  n = normalize(p, kW, kH);
  EXPECT_EQ(n.values, (Eigen::VectorXd(7) << 0.5, 0.5, 0.25, 0, 0.1, -0.2, 2.0).finished());
  EXPECT_EQ(denormalize(n, kW, kH), p);
  EXPECT_THROW(denormalize({Eigen::VectorXd(5)}, kW, kH), std::invalid_argument);
}

TEST(Normalize, RoundTrip) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = random_pose(rng, ProjectionMode::kPerspective);
    const NormalizedPose n = normalize(p, kW, kH);
    const Pose back = denormalize(n, kW, kH);
    EXPECT_EQ(normalize(back, kW, kH).values, n.values);
    EXPECT_EQ(back.psi_xy, p.psi_xy);
    EXPECT_NEAR(back.mu.x(), p.mu.x(), 1e-12);
    EXPECT_NEAR(back.delta.y(), p.delta.y(), 1e-12);
  }
  // Normalized values themselves round-trip exactly.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd v(6);
    for (int k = 0; k < 6; ++k) v[k] = u(rng);
    const Pose p = denormalize({v}, kW, kH);
    const Pose q = denormalize(normalize(p, kW, kH), kW, kH);
    EXPECT_EQ(q, p);
  }
}

TEST(PoseToCamera, SideViewExample) {
  // Axle along -x in the model, wheelbase along +z.
  ModelAnnotations ann;
  ann.rear_wheel_center = {0, 0, 0};
  ann.front_wheel_center = {0, 0, 1};
  ann.axle_direction = {-1, 0, 0};
  Pose p;
  p.mu = {200, 300};
  p.delta = {100, 0};
  p.psi_xy = {-0.999, 0};
  expect_constraints(p, ann, ProjectionMode::kParallel);
  const Camera cam = pose_to_camera(p, ann, ProjectionMode::kParallel, kW, kH);
  EXPECT_GT(cam.scale, 100.0);
}

TEST(PoseToCamera, DoublingDeltaDoublesScale) {
  std::mt19937_64 rng(3);
  const ModelAnnotations ann = toy_car_annotations();
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    Pose p = random_pose(rng, ProjectionMode::kParallel);
    pose_detail::AxleSpin a;
    try {
      a = pose_detail::solve_axle_spin(p, ann, ProjectionMode::kParallel, kW, kH);
    } catch (const InfeasiblePose&) {
      continue;
    }
    p.delta *= 2.0;
    const pose_detail::AxleSpin b =
        pose_detail::solve_axle_spin(p, ann, ProjectionMode::kParallel, kW, kH);
    EXPECT_NEAR(a.gamma, b.gamma, 1e-12);
    EXPECT_NEAR(b.scale / a.scale, 2.0, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(PoseToCamera, AxleInImagePlane) {
  // Wheelbase perpendicular to the axle: spinning about an axle in the
  // image plane sweeps the wheelbase through the plane spanned by the view
  // axis and the image direction perpendicular to the axle.
  ModelAnnotations ann;
  ann.rear_wheel_center = {0, 0, 0};
  ann.front_wheel_center = {2, 0, 0};
  ann.axle_direction = {0, 1, 0};
  Pose p;
  p.mu = {320, 240};
  p.psi_xy = {1, 0};
  p.delta = {0, -50};
  expect_constraints(p, ann, ProjectionMode::kParallel);
  // Every spin keeps the wheelbase on the image y axis; the solver takes
  // the one with zero elevation, so the projected length is s |w|.
  const Camera cam = pose_to_camera(p, ann, ProjectionMode::kParallel, kW, kH);
  const Vec3 w = cam.rotation * ann.wheelbase();
  EXPECT_NEAR(std::abs(w.z()), 0.0, 1e-12);
  EXPECT_NEAR(cam.scale * ann.wheelbase().norm(), 50.0, 1e-9);
  // No spin can turn the wheelbase off the image y axis.
  p.delta = {50, 0};
  EXPECT_THROW(pose_to_camera(p, ann, ProjectionMode::kParallel, kW, kH), InfeasiblePose);
}

TEST(PoseToCamera, ZeroDeltaIsInfeasible) {
  Pose p;
  p.delta = {0, 0};
  EXPECT_THROW(pose_to_camera(p, toy_car_annotations(), ProjectionMode::kParallel, kW, kH),
               InfeasiblePose);
  p.delta = {10, 0};
  EXPECT_THROW(pose_to_camera(p, toy_car_annotations(), ProjectionMode::kPerspective, kW, kH),
               InfeasiblePose);
}

// Dense sweep over the spin angle: all gammas at which the projected
// wheelbase points along delta, refined by bisection.
std::vector<double> sweep_roots(const Pose& p, const ModelAnnotations& ann) {
  const Vec3 axle = axle_vector(p.psi_xy);
  const Mat3 r0 = pose_detail::minimal_rotation(ann.axle_direction, axle);
  const Vec2 dir = Vec2(p.delta.x(), -p.delta.y()).normalized();
  auto mismatch = [&](double g) {
    const Vec3 w = Eigen::AngleAxisd(g, axle) * (r0 * ann.wheelbase());
    return dir.x() * w.y() - dir.y() * w.x();
  };
  auto forward = [&](double g) {
    const Vec3 w = Eigen::AngleAxisd(g, axle) * (r0 * ann.wheelbase());
    return dir.dot(w.head<2>()) > 0.0;
  };
  std::vector<double> roots;
  constexpr int kSteps = 20000;
  const double pi = std::numbers::pi;
  for (int i = 0; i < kSteps; ++i) {
    double lo = -pi + 2 * pi * i / kSteps;
    double hi = -pi + 2 * pi * (i + 1) / kSteps;
    double flo = mismatch(lo);
    if ((flo > 0) == (mismatch(hi) > 0)) continue;
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
      const double mid = 0.5 * (lo + hi);
      if ((mismatch(mid) > 0) == (flo > 0)) {
        lo = mid;
        flo = mismatch(lo);
      } else {
        hi = mid;
      }
    }
    if (forward(lo)) roots.push_back(0.5 * (lo + hi));
  }
  return roots;
}

TEST(PoseToCamera, SpinRootMatchesDenseSweep) {
  std::mt19937_64 rng(4);
  const ModelAnnotations ann = toy_car_annotations();
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng, ProjectionMode::kParallel);
    const std::vector<double> roots = sweep_roots(p, ann);
    if (roots.empty()) {
      EXPECT_THROW(pose_detail::solve_axle_spin(p, ann, ProjectionMode::kParallel, kW, kH),
                   InfeasiblePose);
      continue;
    }
    double expected = roots.front();
    for (double g : roots) {
      if (std::abs(g) < std::abs(expected)) expected = g;
    }
    const auto spin = pose_detail::solve_axle_spin(p, ann, ProjectionMode::kParallel, kW, kH);
    EXPECT_NEAR(spin.gamma, expected, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

class PoseToCameraProperty : public ::testing::TestWithParam<ProjectionMode> {};

TEST_P(PoseToCameraProperty, ConstraintsHoldOnRandomFeasiblePoses) {
  std::mt19937_64 rng(5);
  const ModelAnnotations ann = toy_car_annotations();
  int feasible = 0;
  for (int i = 0; i < 1000; ++i) {
    const Pose p = random_pose(rng, GetParam());
    try {
      pose_to_camera(p, ann, GetParam(), kW, kH);
    } catch (const InfeasiblePose&) {
      continue;
    }
    expect_constraints(p, ann, GetParam());
    ++feasible;
  }
  EXPECT_GT(feasible, 200);
}

INSTANTIATE_TEST_SUITE_P(Modes, PoseToCameraProperty,
                         ::testing::Values(ProjectionMode::kParallel,
                                           ProjectionMode::kPerspective));

TEST(PoseToCamera, ReferencePoseIsFeasibleInBothModes) {
  for (ProjectionMode mode : {ProjectionMode::kParallel, ProjectionMode::kPerspective}) {
    const Pose p = toy_car_reference_pose(mode, kW, kH);
    expect_constraints(p, toy_car_annotations(), mode);
  }
}

TEST(Perturb, ShellsAndDeterminism) {
  const Pose base = toy_car_reference_pose(ProjectionMode::kPerspective, kW, kH);
  const Eigen::VectorXd n0 = normalize(base, kW, kH).values;
  for (double band : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Pose p = perturb(base, band, seed, kW, kH);
      EXPECT_EQ(p, perturb(base, band, seed, kW, kH));
      EXPECT_LT(p.psi_xy.squaredNorm(), 1.0);
      const Eigen::VectorXd d = (normalize(p, kW, kH).values - n0).cwiseAbs();
      EXPECT_LE(d.maxCoeff(), band / 100.0 + 1e-12);
      EXPECT_GT(d.minCoeff(), band / 200.0 - 1e-12);
    }
  }
  EXPECT_NE(perturb(base, 4, 1, kW, kH), perturb(base, 4, 2, kW, kH));
  EXPECT_THROW(perturb(base, 0.0, 1, kW, kH), std::invalid_argument);
}

TEST(PoseText, FormatParseAndCsv) {
  const Pose p = toy_car_reference_pose(ProjectionMode::kPerspective, kW, kH);
  EXPECT_EQ(parse_pose(format_pose(p)), p);
  EXPECT_EQ(pose_csv_header(true, "start_"),
            "start_mu_x,start_mu_y,start_delta_x,start_delta_y,start_psi_x,start_psi_y,"
            "start_focal");
  const std::string row = pose_csv_row(p);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
  EXPECT_THROW(parse_pose("1 2 3 4 5"), std::invalid_argument);
  EXPECT_THROW(parse_pose("1 2 3 4 5 x"), std::invalid_argument);
  EXPECT_THROW(parse_pose("1 2 3 4 5 inf"), std::invalid_argument);
}

}  // namespace
}  // namespace invpose
