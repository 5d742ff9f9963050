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
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "invpose/mesh.h"
#include "invpose/render.h"

namespace invpose {

// Wheel-based pose of a vehicle-like model in the image.
//   mu      rear wheel center in the projection (pixels)
//   delta   rear -> front wheel center vector in the projection (pixels)
//   psi_xy  first two camera-frame components of the unit axle direction;
//           the third is psi_z(psi_xy) <= 0
//   focal_distance  perspective mode only (pixels)
struct Pose {
  Vec2 mu = Vec2::Zero();
  Vec2 delta = Vec2::UnitX();
  Vec2 psi_xy = Vec2::Zero();
  std::optional<double> focal_distance;

  int dimension() const { return focal_distance ? 7 : 6; }
  bool operator==(const Pose&) const = default;
};

// (mu_x/W, mu_y/H, delta_x/W, delta_y/H, psi_x, psi_y[, focal/W]).
struct NormalizedPose {
  Eigen::VectorXd values;
};

class InfeasiblePose : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -sqrt(1 - psi_x^2 - psi_y^2); throws std::domain_error outside the disc.
double psi_z(const Vec2& psi_xy);
Vec3 axle_vector(const Vec2& psi_xy);

// Pulls psi back radially to norm 1 - 1e-9 when it lies outside.
Vec2 clamp_to_disc(const Vec2& psi_xy);

NormalizedPose normalize(const Pose& pose, int image_width, int image_height);
Pose denormalize(const NormalizedPose& normalized, int image_width, int image_height);

// Realizes the pose as a model -> camera transform. Guarantees that the
// rear wheel center projects to mu, the front wheel center to mu + delta,
// and that the rotated model axle equals (psi_x, psi_y, psi_z).
// Throws InfeasiblePose when no rotation about the axle can produce delta.
Camera pose_to_camera(const Pose& pose, const ModelAnnotations& annotations, ProjectionMode mode,
                      int width, int height);

// Reads mu, delta and psi back from a camera by projecting the annotations.
Pose extract_pose(const Camera& camera, const ModelAnnotations& annotations);

// Displaces every normalized component by a random amount whose magnitude
// lies in (band/2, band] percent of a unit range, with random sign.
// Draws that leave the psi disc (or collapse delta) are redrawn.
Pose perturb(const Pose& pose, double band_percent, std::uint64_t seed, int image_width,
             int image_height);

// "mu_x mu_y delta_x delta_y psi_x psi_y [focal]"
std::string format_pose(const Pose& pose);
Pose parse_pose(const std::string& text);
std::string pose_csv_header(bool with_focal, const std::string& prefix = "");
std::string pose_csv_row(const Pose& pose);

namespace pose_detail {
// Angle gamma about psi and scale/depth chosen by pose_to_camera; exposed
// for tests that check the root selection against brute force.
struct AxleSpin {
  double gamma = 0.0;
  double scale = 0.0;  // parallel: pixels per model unit; perspective: depth of the rear wheel
};
AxleSpin solve_axle_spin(const Pose& pose, const ModelAnnotations& annotations,
                         ProjectionMode mode, int width, int height);
// Rotation that maps the model axle onto psi, before any spin.
Mat3 minimal_rotation(const Vec3& from, const Vec3& to);
}  // namespace pose_detail

}  // namespace invpose
