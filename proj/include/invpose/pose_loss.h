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

#include <Eigen/Core>

#include "invpose/image.h"
#include "invpose/invariant_loss.h"
#include "invpose/mesh.h"
#include "invpose/pose.h"
#include "invpose/render.h"

namespace invpose {

// Loss reported when the pose cannot be evaluated (infeasible, off-screen,
// or too few clipped pixels): min{n, m} for a grey photo and 4 attributes.
inline constexpr double kPenaltyLoss = 1.0;
// Clipped sets smaller than this are scored with the penalty.
inline constexpr std::size_t kMinPixelCount = 64;

struct LossOptions {
  bool clip = true;
  std::size_t min_pixels = kMinPixelCount;
};

// Render -> clip -> accumulate -> invariant loss for one photo and model.
// Keeps the render target between calls; not thread-safe, use one
// evaluator per thread.
class PoseLossEvaluator {
 public:
  PoseLossEvaluator(const GrayImage& photo, const Mesh& mesh, const ModelAnnotations& annotations,
                    ProjectionMode mode, LossOptions options = {});

  double operator()(const Pose& pose);

  // Normalized-pose objective for the optimizer. psi is clamped into the
  // unit disc before denormalizing.
  double normalized(const Eigen::VectorXd& values);

  const AttributeImage& last_attributes() const { return attrs_; }
  int width() const { return photo_.width(); }
  int height() const { return photo_.height(); }
  ProjectionMode mode() const { return mode_; }

 private:
  const GrayImage& photo_;
  const Mesh& mesh_;
  const ModelAnnotations& annotations_;
  ProjectionMode mode_;
  LossOptions options_;
  AttributeImage attrs_;
  PixelSet all_pixels_;
};

double pose_loss(const GrayImage& photo, const Mesh& mesh, const ModelAnnotations& annotations,
                 const Pose& pose, ProjectionMode mode, LossOptions options = {});

// Pose with psi pulled back into the unit disc, the form actually rendered.
Pose sanitize_pose(const Pose& pose);

}  // namespace invpose
