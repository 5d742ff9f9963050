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
#include <vector>

#include <Eigen/Core>

#include "invpose/image.h"
#include "invpose/mesh.h"

namespace invpose {

using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;

enum class ProjectionMode { kParallel, kPerspective };

const char* to_string(ProjectionMode mode);
ProjectionMode parse_projection_mode(const std::string& text);

// Camera frame: x right, y up, viewing along -z. Pixel coordinates have
// their origin at the top-left image corner with y pointing down; pixel
// (i, j) has its center at (i + 0.5, j + 0.5). The principal point is the
// image center.
//
//   parallel:    u = cx + scale * x_c,          v = cy - scale * y_c
//   perspective: u = cx + focal * x_c / (-z_c), v = cy - focal * y_c / (-z_c)
struct Camera {
  ProjectionMode mode = ProjectionMode::kParallel;
  Mat3 rotation = Mat3::Identity();       // model -> camera
  Vec3 translation = Vec3::Zero();        // model units
  double scale = 1.0;                     // pixels per model unit (parallel)
  double focal_distance = 1.0;            // pixels (perspective)
  double near_plane = 1e-3;               // model units (perspective)
  int width = 1;
  int height = 1;

  Vec3 to_camera(const Vec3& model_point) const { return rotation * model_point + translation; }
  // Pixel position of a camera-frame point. For perspective, the point must
  // lie in front of the camera (z_c < 0).
  Vec2 project(const Vec3& camera_point) const;
  Vec2 project_model_point(const Vec3& model_point) const {
    return project(to_camera(model_point));
  }

  // Throws std::invalid_argument if scale/focal/viewport are out of range.
  void validate() const;
};

struct Lighting {
  double ambient = 1.0;                 // I_a
  double diffuse = 0.0;                 // I_d
  Vec3 direction = Vec3::UnitZ();       // L, unit length
  double offset = 0.0;                  // I_0
};

// Z-buffered rasterization of every triangle. Attribute channels are affine
// (screen-space) barycentric interpolations of vertex values; the
// interpolated normal is renormalized and then scaled by the interpolated
// k_d. Top-left fill rule, no anti-aliasing, no back-face culling.
AttributeImage render_attributes(const Mesh& mesh, const Camera& camera);

// Same as above but reuses the storage of `out` (resized if needed).
void render_attributes_into(const Mesh& mesh, const Camera& camera, AttributeImage& out);

// intensity = I_a * k_a + I_d * (L . k_d phi) + I_0 on covered pixels,
// `background` elsewhere.
GrayImage shade_phong(const AttributeImage& attrs, const Lighting& lighting,
                      double background = 0.0);

// Covered pixels from `fore`, the rest from `back`. The mask must have one
// entry per pixel.
GrayImage composite_over_background(const GrayImage& fore, const std::vector<std::uint8_t>& coverage,
                                    const GrayImage& back);

}  // namespace invpose
