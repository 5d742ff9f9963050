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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "invpose/image.h"

namespace invpose {

// Sufficient statistics of photo F (n channels) and attributes M (m
// channels) over a pixel set, population (1/|P|) convention.
struct PixelStats {
  std::size_t count = 0;
  Eigen::VectorXd mean_photo;  // n
  Eigen::VectorXd mean_attr;   // m
  Eigen::MatrixXd cov_photo;   // C_FF, n x n
  Eigen::MatrixXd cov_attr;    // C_MM, m x m
  Eigen::MatrixXd cross;       // C_FM, n x m (C_MF is its transpose)

  int photo_dim() const { return static_cast<int>(mean_photo.size()); }
  int attr_dim() const { return static_cast<int>(mean_attr.size()); }
};

// Row-major indices of the pixels taking part in the loss.
using PixelSet = std::vector<std::uint32_t>;

class EmptyPixelSet : public std::invalid_argument {
 public:
  EmptyPixelSet() : std::invalid_argument("pixel set is empty") {}
};

// Pixels carrying a model fragment (nonzero surface normal), row-major.
// Returns std::nullopt when nothing is covered.
std::optional<PixelSet> clip_mask(const AttributeImage& attrs);

// Every pixel of a width x height image; used when clipping is disabled.
PixelSet full_pixel_set(int width, int height);

// Two-pass accumulation (compensated means, then central moments). With
// partitions > 1 the set is split into contiguous chunks that are merged
// with the pairwise moment update; the result is deterministic for a given
// partition count.
PixelStats accumulate_stats(const GrayImage& photo, const AttributeImage& attrs,
                            const PixelSet& pixels, int partitions = 1);

// Same statistics from explicit samples: photo is n x N, attrs is m x N.
PixelStats accumulate_stats(const Eigen::MatrixXd& photo, const Eigen::MatrixXd& attrs);

// Combines statistics of two disjoint pixel sets.
PixelStats merge_stats(const PixelStats& a, const PixelStats& b);

// tr[C_FM C_MM^-1 C_MF C_FF^-1] with the regularized inverses. With
// photo_first = false the cyclically permuted product
// tr[C_MF C_FF^-1 C_FM C_MM^-1] is evaluated instead.
double correlation_trace(const PixelStats& stats, bool photo_first = true);

// min{n,m} - correlation_trace, clamped to [0, min{n,m}].
double invariant_loss(const PixelStats& stats);

// 1 - corr^2 for single-channel statistics; 1 when either side has zero
// variance.
double correlation_loss_1d(const PixelStats& stats);

enum class FitDirection {
  kPhotoFromAttributes,  // F ~ A M + b, A is n x m
  kAttributesFromPhoto,  // M ~ A F + b, A is m x n
};

struct LinearFit {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double residual = 0.0;
};

// E[|A X + b - Y|^2 in the C_YY^-1 norm] evaluated from the statistics.
double mahalanobis_objective(const PixelStats& stats, FitDirection direction,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// Closed-form minimizer A = C_YX C_XX^-1, b = mean_Y - A mean_X.
// Regressor channels with negligible variance get zero columns in A.
LinearFit best_linear_fit(const PixelStats& stats, FitDirection direction);

namespace loss_detail {
// Relative Tikhonov weight added as eps * trace(C) / dim * I.
inline constexpr double kRegularization = 1e-10;
// Channels whose variance is below this fraction of their mean square are
// treated as constant and removed.
inline constexpr double kVarianceFloor = 1e-12;
// Negative losses above this magnitude indicate a bug, not round-off.
inline constexpr double kNegativeTolerance = 1e-9;

// Indices of channels that carry usable variance.
std::vector<int> active_channels(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean);
}  // namespace loss_detail

}  // namespace invpose
