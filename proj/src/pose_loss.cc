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

#include "invpose/pose_loss.h"

namespace invpose {

PoseLossEvaluator::PoseLossEvaluator(const GrayImage& photo, const Mesh& mesh,
                                     const ModelAnnotations& annotations, ProjectionMode mode,
                                     LossOptions options)
    : photo_(photo), mesh_(mesh), annotations_(annotations), mode_(mode), options_(options),
      attrs_(photo.width(), photo.height()) {
  if (!options_.clip) all_pixels_ = full_pixel_set(photo.width(), photo.height());
}

double PoseLossEvaluator::operator()(const Pose& pose) {
  Camera camera;
  try {
    camera = pose_to_camera(sanitize_pose(pose), annotations_, mode_, photo_.width(),
                            photo_.height());
  } catch (const InfeasiblePose&) {
    return kPenaltyLoss;
  }
  render_attributes_into(mesh_, camera, attrs_);

  if (attrs_.covered_count() < options_.min_pixels) return kPenaltyLoss;
  if (!options_.clip) return invariant_loss(accumulate_stats(photo_, attrs_, all_pixels_));
  const auto clipped = clip_mask(attrs_);
  if (!clipped) return kPenaltyLoss;
  return invariant_loss(accumulate_stats(photo_, attrs_, *clipped));
}

double PoseLossEvaluator::normalized(const Eigen::VectorXd& values) {
  return (*this)(denormalize({values}, photo_.width(), photo_.height()));
}

double pose_loss(const GrayImage& photo, const Mesh& mesh, const ModelAnnotations& annotations,
                 const Pose& pose, ProjectionMode mode, LossOptions options) {
  PoseLossEvaluator eval(photo, mesh, annotations, mode, options);
  return eval(pose);
}

Pose sanitize_pose(const Pose& pose) {
  Pose p = pose;
  p.psi_xy = clamp_to_disc(p.psi_xy);
  return p;
}

}  // namespace invpose
