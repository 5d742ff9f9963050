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

#include "invpose/invariant_loss.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace invpose {
namespace {

constexpr int kJointDim = 1 + kAttributeChannels;  // grey photo + attributes
using JointVec = Eigen::Matrix<double, kJointDim, 1>;
using JointMat = Eigen::Matrix<double, kJointDim, kJointDim>;

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

PixelStats from_joint(std::size_t count, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                      int n) {
  const int m = static_cast<int>(mean.size()) - n;
  PixelStats s;
  s.count = count;
  s.mean_photo = mean.head(n);
  s.mean_attr = mean.tail(m);
  s.cov_photo = cov.topLeftCorner(n, n);
  s.cov_attr = cov.bottomRightCorner(m, m);
  s.cross = cov.topRightCorner(n, m);
  return s;
}

void joint_of(const PixelStats& s, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
  const int n = s.photo_dim();
  const int m = s.attr_dim();
  mean.resize(n + m);
  mean << s.mean_photo, s.mean_attr;
  cov.resize(n + m, n + m);
  cov.topLeftCorner(n, n) = s.cov_photo;
  cov.bottomRightCorner(m, m) = s.cov_attr;
  cov.topRightCorner(n, m) = s.cross;
  cov.bottomLeftCorner(m, n) = s.cross.transpose();
}

inline JointVec joint_sample(const GrayImage& photo, const AttributeImage& attrs,
                             std::uint32_t idx) {
  const Attribute& a = attrs.attribute(idx);
  JointVec z;
  z << photo[idx], a[0], a[1], a[2], a[3];
  return z;
}

PixelStats accumulate_chunk(const GrayImage& photo, const AttributeImage& attrs,
                            const std::uint32_t* begin, const std::uint32_t* end) {
  const std::size_t count = static_cast<std::size_t>(end - begin);
  std::array<CompensatedSum, kJointDim> sums{};
  for (const std::uint32_t* it = begin; it != end; ++it) {
    const JointVec z = joint_sample(photo, attrs, *it);
    for (int c = 0; c < kJointDim; ++c) sums[c].add(z[c]);
  }
  JointVec mean;
  for (int c = 0; c < kJointDim; ++c) mean[c] = sums[c].value() / static_cast<double>(count);

  JointMat m2 = JointMat::Zero();
  for (const std::uint32_t* it = begin; it != end; ++it) {
    const JointVec d = joint_sample(photo, attrs, *it) - mean;
    m2.selfadjointView<Eigen::Upper>().rankUpdate(d);
  }
  JointMat cov = m2.selfadjointView<Eigen::Upper>();
  cov /= static_cast<double>(count);
  return from_joint(count, mean, cov, 1);
}

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                       const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

std::vector<int> all_channels(int dim) {
  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) idx[i] = i;
  return idx;
}

void check_finite(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean, const char* side) {
  for (int i = 0; i < cov.rows(); ++i) {
    if (!std::isfinite(cov(i, i)) || !std::isfinite(mean[i]) || cov(i, i) < 0.0) {
      throw std::domain_error(std::string(side) + " channel " + std::to_string(i) +
                              " has a non-finite or negative variance");
    }
  }
}

// Factorization of a covariance block used as its (pseudo-)inverse. The
// block is used as-is when it is numerically well conditioned; otherwise
// eps * trace / dim is added to the diagonal.
class CovarianceInverse {
 public:
  explicit CovarianceInverse(const Eigen::MatrixXd& cov) {
    const Eigen::Index dim = cov.rows();
    if (dim == 0) return;
    ldlt_.compute(cov);
    if (ldlt_.info() == Eigen::Success && ldlt_.isPositive() &&
        ldlt_.vectorD().minCoeff() > 0.0 && ldlt_.rcond() > 1e-12) {
      return;
    }
    const double ridge = loss_detail::kRegularization * cov.trace() / static_cast<double>(dim);
    Eigen::MatrixXd reg = cov;
    reg.diagonal().array() += ridge;
    ldlt_.compute(reg);
    regularized_ = true;
    if (ldlt_.info() != Eigen::Success || !(ldlt_.vectorD().minCoeff() > 0.0)) {
      Eigen::Index worst = 0;
      ldlt_.vectorD().minCoeff(&worst);
      throw std::domain_error("covariance is singular beyond regularization (pivot " +
                              std::to_string(ldlt_.transpositionsP().indices()[worst]) + ")");
    }
  }

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return ldlt_.solve(rhs); }
  bool regularized() const { return regularized_; }

 private:
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool regularized_ = false;
};

}  // namespace

namespace loss_detail {

std::vector<int> active_channels(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean) {
  std::vector<int> idx;
  for (int i = 0; i < cov.rows(); ++i) {
    const double var = cov(i, i);
    const double mean_square = var + mean[i] * mean[i];
    if (var > 0.0 && var > kVarianceFloor * mean_square) idx.push_back(i);
  }
  return idx;
}

}  // namespace loss_detail

std::optional<PixelSet> clip_mask(const AttributeImage& attrs) {
  PixelSet set;
  set.reserve(attrs.covered_count());
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs.covered(i)) set.push_back(static_cast<std::uint32_t>(i));
  }
  if (set.empty()) return std::nullopt;
  return set;
}

PixelSet full_pixel_set(int width, int height) {
  PixelSet set(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < set.size(); ++i) set[i] = static_cast<std::uint32_t>(i);
  return set;
}

PixelStats accumulate_stats(const GrayImage& photo, const AttributeImage& attrs,
                            const PixelSet& pixels, int partitions) {
  if (photo.width() != attrs.width() || photo.height() != attrs.height()) {
    throw std::invalid_argument("photo is " + std::to_string(photo.width()) + "x" +
                                std::to_string(photo.height()) + " but attributes are " +
                                std::to_string(attrs.width()) + "x" +
                                std::to_string(attrs.height()));
  }
  if (pixels.empty()) throw EmptyPixelSet();
  for (std::uint32_t idx : pixels) {
    if (idx >= photo.size()) throw std::out_of_range("pixel index outside the image");
  }

  const std::size_t total = pixels.size();
  const std::size_t parts =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(partitions, 1)), 1, total);
  const std::uint32_t* base = pixels.data();
  PixelStats acc;
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t lo = total * p / parts;
    const std::size_t hi = total * (p + 1) / parts;
    PixelStats chunk = accumulate_chunk(photo, attrs, base + lo, base + hi);
    acc = p == 0 ? std::move(chunk) : merge_stats(acc, chunk);
  }
  return acc;
}

PixelStats accumulate_stats(const Eigen::MatrixXd& photo, const Eigen::MatrixXd& attrs) {
  if (photo.cols() != attrs.cols()) {
    throw std::invalid_argument("photo and attribute sample counts differ");
  }
  if (photo.cols() == 0) throw EmptyPixelSet();
  const Eigen::Index n = photo.rows();
  const Eigen::Index m = attrs.rows();
  const Eigen::Index count = photo.cols();
  Eigen::MatrixXd joint(n + m, count);
  joint << photo, attrs;

  Eigen::VectorXd mean(n + m);
  for (Eigen::Index c = 0; c < n + m; ++c) {
    CompensatedSum s;
    for (Eigen::Index k = 0; k < count; ++k) s.add(joint(c, k));
    mean[c] = s.value() / static_cast<double>(count);
  }
  const Eigen::MatrixXd centered = joint.colwise() - mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(count);
  return from_joint(static_cast<std::size_t>(count), mean, cov, static_cast<int>(n));
}

PixelStats merge_stats(const PixelStats& a, const PixelStats& b) {
  if (a.photo_dim() != b.photo_dim() || a.attr_dim() != b.attr_dim()) {
    throw std::invalid_argument("cannot merge statistics of different dimensions");
  }
  Eigen::VectorXd ma, mb;
  Eigen::MatrixXd ca, cb;
  joint_of(a, ma, ca);
  joint_of(b, mb, cb);
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  const Eigen::VectorXd delta = mb - ma;
  const Eigen::VectorXd mean = ma + delta * (nb / n);
  const Eigen::MatrixXd cov =
      (ca * na + cb * nb) / n + (delta * delta.transpose()) * (na * nb / (n * n));
  return from_joint(a.count + b.count, mean, cov, a.photo_dim());
}

double correlation_trace(const PixelStats& stats, bool photo_first) {
  check_finite(stats.cov_photo, stats.mean_photo, "photo");
  check_finite(stats.cov_attr, stats.mean_attr, "attribute");
  const auto photo_idx = loss_detail::active_channels(stats.cov_photo, stats.mean_photo);
  const auto attr_idx = loss_detail::active_channels(stats.cov_attr, stats.mean_attr);
  if (photo_idx.empty() || attr_idx.empty()) return 0.0;

  const Eigen::MatrixXd cff = select(stats.cov_photo, photo_idx, photo_idx);
  const Eigen::MatrixXd cmm = select(stats.cov_attr, attr_idx, attr_idx);
  const Eigen::MatrixXd cfm = select(stats.cross, photo_idx, attr_idx);
  const CovarianceInverse inv_ff(cff);
  const CovarianceInverse inv_mm(cmm);

  if (photo_first) {
    const Eigen::MatrixXd g = cfm * inv_mm.solve(cfm.transpose());
    return inv_ff.solve(g).trace();
  }
  const Eigen::MatrixXd g = cfm.transpose() * inv_ff.solve(cfm);
  return inv_mm.solve(g).trace();
}

double invariant_loss(const PixelStats& stats) {
  const double k = static_cast<double>(std::min(stats.photo_dim(), stats.attr_dim()));
  const double loss = k - correlation_trace(stats);
  if (loss < -loss_detail::kNegativeTolerance) {
    throw std::logic_error("invariant loss is negative (" + std::to_string(loss) +
                           "); covariance statistics are inconsistent");
  }
  return std::clamp(loss, 0.0, k);
}

double correlation_loss_1d(const PixelStats& stats) {
  if (stats.photo_dim() != 1 || stats.attr_dim() != 1) {
    throw std::invalid_argument("correlation_loss_1d needs single-channel statistics");
  }
  const double vf = stats.cov_photo(0, 0);
  const double vm = stats.cov_attr(0, 0);
  if (!(vf > 0.0) || !(vm > 0.0)) return 1.0;
  const double c = stats.cross(0, 0);
  const double corr2 = (c / vf) * (c / vm);
  return std::clamp(1.0 - corr2, 0.0, 1.0);
}

namespace {

struct FitBlocks {
  const Eigen::MatrixXd* cov_x;
  const Eigen::MatrixXd* cov_y;
  Eigen::MatrixXd cov_yx;
  const Eigen::VectorXd* mean_x;
  const Eigen::VectorXd* mean_y;
};

FitBlocks fit_blocks(const PixelStats& s, FitDirection direction) {
  if (direction == FitDirection::kPhotoFromAttributes) {
    return {&s.cov_attr, &s.cov_photo, s.cross, &s.mean_attr, &s.mean_photo};
  }
  return {&s.cov_photo, &s.cov_attr, s.cross.transpose(), &s.mean_photo, &s.mean_attr};
}

}  // namespace

double mahalanobis_objective(const PixelStats& stats, FitDirection direction,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const FitBlocks fb = fit_blocks(stats, direction);
  if (A.rows() != fb.cov_y->rows() || A.cols() != fb.cov_x->rows() || b.size() != A.rows()) {
    throw std::invalid_argument("linear map has the wrong shape for this fit direction");
  }
  const Eigen::MatrixXd cov_e = A * (*fb.cov_x) * A.transpose() - A * fb.cov_yx.transpose() -
                                fb.cov_yx * A.transpose() + *fb.cov_y;
  const Eigen::VectorXd mean_e = A * (*fb.mean_x) + b - *fb.mean_y;

  const auto y_idx = loss_detail::active_channels(*fb.cov_y, *fb.mean_y);
  if (y_idx.empty()) return 0.0;
  const CovarianceInverse inv_yy(select(*fb.cov_y, y_idx, y_idx));
  const Eigen::VectorXd me = select(mean_e, y_idx);
  return inv_yy.solve(select(cov_e, y_idx, y_idx)).trace() + me.dot(inv_yy.solve(me).col(0));
}

LinearFit best_linear_fit(const PixelStats& stats, FitDirection direction) {
  check_finite(stats.cov_photo, stats.mean_photo, "photo");
  check_finite(stats.cov_attr, stats.mean_attr, "attribute");
  const FitBlocks fb = fit_blocks(stats, direction);
  const Eigen::Index dim_y = fb.cov_y->rows();
  const Eigen::Index dim_x = fb.cov_x->rows();

  LinearFit fit;
  fit.A = Eigen::MatrixXd::Zero(dim_y, dim_x);
  const auto x_idx = loss_detail::active_channels(*fb.cov_x, *fb.mean_x);
  if (!x_idx.empty()) {
    const CovarianceInverse inv_xx(select(*fb.cov_x, x_idx, x_idx));
    const Eigen::MatrixXd cyx = select(fb.cov_yx, all_channels(static_cast<int>(dim_y)), x_idx);
    const Eigen::MatrixXd a_active = inv_xx.solve(cyx.transpose()).transpose();
    for (std::size_t j = 0; j < x_idx.size(); ++j) fit.A.col(x_idx[j]) = a_active.col(j);
  }
  fit.b = *fb.mean_y - fit.A * (*fb.mean_x);
  fit.residual = mahalanobis_objective(stats, direction, fit.A, fit.b);
  return fit;
}

}  // namespace invpose
