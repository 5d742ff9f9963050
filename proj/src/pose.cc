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
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Geometry>
#include <Eigen/QR>

namespace invpose {
namespace {

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Inverse of x -> x / dim that lands back on the same normalized value
// whenever such a double exists next to n * dim.
double scale_back(double n, double dim) {
  double x = n * dim;
  if (x / dim == n) return x;
  double up = x;
  double down = x;
  for (int i = 0; i < 4; ++i) {
    up = std::nextafter(up, HUGE_VAL);
    if (up / dim == n) return up;
    down = std::nextafter(down, -HUGE_VAL);
    if (down / dim == n) return down;
  }
  return x;
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap_angle(double g) {
  g = std::remainder(g, 2.0 * std::numbers::pi);
  return g;
}

Vec3 pixel_ray(const Vec2& q, double focal, int width, int height) {
  return {(q.x() - 0.5 * width) / focal, -(q.y() - 0.5 * height) / focal, -1.0};
}

// Rotated wheelbase decomposed for the spin about psi:
//   R(gamma) w = along + cos(gamma) radial + sin(gamma) tangent
struct SpinBasis {
  Mat3 base_rotation;
  Vec3 axle;
  Vec3 along;
  Vec3 radial;
  Vec3 tangent;

  Vec3 at(double gamma) const {
    return along + std::cos(gamma) * radial + std::sin(gamma) * tangent;
  }
};

SpinBasis spin_basis(const Pose& pose, const ModelAnnotations& ann) {
  SpinBasis sb;
  sb.axle = axle_vector(pose.psi_xy);
  sb.base_rotation = pose_detail::minimal_rotation(ann.axle_direction, sb.axle);
  const Vec3 w = sb.base_rotation * ann.wheelbase();
  sb.along = w.dot(sb.axle) * sb.axle;
  sb.radial = w - sb.along;
  sb.tangent = sb.axle.cross(sb.radial);
  return sb;
}

// Roots of c + a cos(g) + b sin(g) = 0.
std::vector<double> trig_roots(double a, double b, double c, double scale_ref) {
  const double rho = std::hypot(a, b);
  if (rho <= 1e-14 * scale_ref) return {};
  const double ratio = -c / rho;
  if (ratio > 1.0 + 1e-12 || ratio < -1.0 - 1e-12) return {};
  const double phi = std::atan2(b, a);
  const double alpha = std::acos(std::clamp(ratio, -1.0, 1.0));
  if (alpha == 0.0) return {wrap_angle(phi)};
  return {wrap_angle(phi + alpha), wrap_angle(phi - alpha)};
}

struct Candidate {
  double gamma;
  double scale;
};

const Candidate* pick(const std::vector<Candidate>& cands) {
  const Candidate* best = nullptr;
  for (const Candidate& c : cands) {
    if (!best || std::abs(c.gamma) < std::abs(best->gamma) ||
        (std::abs(c.gamma) == std::abs(best->gamma) && c.gamma < best->gamma)) {
      best = &c;
    }
  }
  return best;
}

}  // namespace

double psi_z(const Vec2& psi_xy) {
  const double r2 = psi_xy.squaredNorm();
  if (!(r2 <= 1.0)) {
    throw std::domain_error("axle components (" + format_real(psi_xy.x()) + ", " +
                            format_real(psi_xy.y()) + ") lie outside the unit disc");
  }
  return -std::sqrt(1.0 - r2);
}

Vec3 axle_vector(const Vec2& psi_xy) { return {psi_xy.x(), psi_xy.y(), psi_z(psi_xy)}; }

Vec2 clamp_to_disc(const Vec2& psi_xy) {
  constexpr double kMaxNorm = 1.0 - 1e-9;
  const double n = psi_xy.norm();
  if (n <= kMaxNorm) return psi_xy;
  return psi_xy * (kMaxNorm / n);
}

NormalizedPose normalize(const Pose& pose, int w, int h) {
  NormalizedPose out;
  out.values.resize(pose.dimension());
  out.values.head<6>() << pose.mu.x() / w, pose.mu.y() / h, pose.delta.x() / w,
      pose.delta.y() / h, pose.psi_xy.x(), pose.psi_xy.y();
  if (pose.focal_distance) out.values[6] = *pose.focal_distance / w;
  return out;
}

Pose denormalize(const NormalizedPose& n, int w, int h) {
  const Eigen::VectorXd& v = n.values;
  if (v.size() != 6 && v.size() != 7) {
    throw std::invalid_argument("normalized pose must have 6 or 7 components");
  }
  Pose p;
  p.mu = {scale_back(v[0], w), scale_back(v[1], h)};
  p.delta = {scale_back(v[2], w), scale_back(v[3], h)};
  p.psi_xy = {v[4], v[5]};
  if (v.size() == 7) p.focal_distance = scale_back(v[6], w);
  return p;
}

namespace pose_detail {

Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

AxleSpin solve_axle_spin(const Pose& pose, const ModelAnnotations& ann, ProjectionMode mode,
                         int width, int height) {
  const double dlen = pose.delta.norm();
  if (!(dlen > 0.0) || !std::isfinite(dlen)) {
    throw InfeasiblePose("wheel displacement delta has zero length");
  }
  const SpinBasis sb = spin_basis(pose, ann);
  const double wlen = ann.wheelbase().norm();
  std::vector<Candidate> cands;

  if (mode == ProjectionMode::kParallel) {
    // Camera-frame image direction of delta (image y points down).
    const Vec2 dir = Vec2(pose.delta.x(), -pose.delta.y()) / dlen;
    const Vec2 c = sb.along.head<2>();
    const Vec2 u = sb.radial.head<2>();
    const Vec2 v = sb.tangent.head<2>();
    const double ca = cross2(dir, u);
    const double cb = cross2(dir, v);
    const double cc = cross2(dir, c);

    std::vector<double> roots = trig_roots(ca, cb, cc, wlen);
    if (roots.empty() && std::hypot(ca, cb) <= 1e-14 * wlen && std::abs(cc) <= 1e-12 * wlen) {
      // Every spin keeps the wheelbase on the delta line (axle in the
      // image plane); take the spin with the longest projection.
      roots.push_back(std::atan2(dir.dot(v), dir.dot(u)));
    }
    for (double g : roots) {
      const double along_dir = dir.dot(sb.at(g).head<2>());
      if (along_dir > 1e-12 * wlen) cands.push_back({g, dlen / along_dir});
    }
  } else {
    if (!pose.focal_distance || !(*pose.focal_distance > 0.0)) {
      throw InfeasiblePose("perspective pose needs a positive focal distance");
    }
    const double f = *pose.focal_distance;
    const Vec3 r1 = pixel_ray(pose.mu, f, width, height);
    const Vec3 r2 = pixel_ray(pose.mu + pose.delta, f, width, height);
    const Vec3 nrm = r1.cross(r2).normalized();
    const std::vector<double> roots =
        trig_roots(nrm.dot(sb.radial), nrm.dot(sb.tangent), nrm.dot(sb.along), wlen);
    Eigen::Matrix<double, 3, 2> sys;
    sys.col(0) = r1;
    sys.col(1) = -r2;
    const auto qr = sys.colPivHouseholderQr();
    for (double g : roots) {
      // Z * r1 + R w = lambda * r2
      const Eigen::Vector2d depths = qr.solve(-sb.at(g));
      if (depths[0] > 0.0 && depths[1] > 0.0 && std::isfinite(depths[0])) {
        cands.push_back({g, depths[0]});
      }
    }
  }

  const Candidate* best = pick(cands);
  if (!best) {
    throw InfeasiblePose("no rotation about the axle projects the wheelbase onto delta");
  }
  return {best->gamma, best->scale};
}

}  // namespace pose_detail

Camera pose_to_camera(const Pose& pose, const ModelAnnotations& ann, ProjectionMode mode,
                      int width, int height) {
  const pose_detail::AxleSpin spin = pose_detail::solve_axle_spin(pose, ann, mode, width, height);
  const SpinBasis sb = spin_basis(pose, ann);

  Camera cam;
  cam.mode = mode;
  cam.width = width;
  cam.height = height;
  cam.rotation = Eigen::AngleAxisd(spin.gamma, sb.axle).toRotationMatrix() * sb.base_rotation;
  const Vec3 rear = cam.rotation * ann.rear_wheel_center;
  if (mode == ProjectionMode::kParallel) {
    cam.scale = spin.scale;
    cam.translation = {(pose.mu.x() - 0.5 * width) / spin.scale - rear.x(),
                       -(pose.mu.y() - 0.5 * height) / spin.scale - rear.y(), -rear.z()};
  } else {
    cam.focal_distance = *pose.focal_distance;
    const Vec3 rear_cam = spin.scale * pixel_ray(pose.mu, cam.focal_distance, width, height);
    cam.translation = rear_cam - rear;
  }
  return cam;
}

Pose extract_pose(const Camera& camera, const ModelAnnotations& ann) {
  Pose p;
  p.mu = camera.project_model_point(ann.rear_wheel_center);
  p.delta = camera.project_model_point(ann.front_wheel_center) - p.mu;
  p.psi_xy = (camera.rotation * ann.axle_direction).head<2>();
  if (camera.mode == ProjectionMode::kPerspective) p.focal_distance = camera.focal_distance;
  return p;
}

Pose perturb(const Pose& pose, double band_percent, std::uint64_t seed, int w, int h) {
  if (!(band_percent > 0.0)) throw std::invalid_argument("deviation band must be positive");
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };  // [0, 1)
  const Eigen::VectorXd base = normalize(pose, w, h).values;

  constexpr int kMaxDraws = 1000;
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    Eigen::VectorXd v = base;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      // magnitude in (band/2, band] percent
      const double magnitude = band_percent / 100.0 * (0.5 + 0.5 * (1.0 - unit()));
      const double sign = (rng() & 1u) ? 1.0 : -1.0;
      v[i] += sign * magnitude;
    }
    Pose p = denormalize({v}, w, h);
    if (p.psi_xy.squaredNorm() >= 1.0) continue;
    if (!(p.delta.norm() > 0.0)) continue;
    if (p.focal_distance && !(*p.focal_distance > 0.0)) continue;
    return p;
  }
  throw std::runtime_error("could not draw a valid perturbed pose");
}

std::string format_pose(const Pose& p) {
  std::string s = format_real(p.mu.x()) + ' ' + format_real(p.mu.y()) + ' ' +
                  format_real(p.delta.x()) + ' ' + format_real(p.delta.y()) + ' ' +
                  format_real(p.psi_xy.x()) + ' ' + format_real(p.psi_xy.y());
  if (p.focal_distance) s += ' ' + format_real(*p.focal_distance);
  return s;
}

Pose parse_pose(const std::string& text) {
  std::istringstream in(text);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw std::invalid_argument("invalid pose value '" + tok + "'");
    }
    vals.push_back(v);
  }
  if (vals.size() != 6 && vals.size() != 7) {
    throw std::invalid_argument("pose needs 6 or 7 values, got " + std::to_string(vals.size()));
  }
  Pose p;
  p.mu = {vals[0], vals[1]};
  p.delta = {vals[2], vals[3]};
  p.psi_xy = {vals[4], vals[5]};
  if (vals.size() == 7) p.focal_distance = vals[6];
  return p;
}

std::string pose_csv_header(bool with_focal, const std::string& prefix) {
  std::string s;
  for (const char* name : {"mu_x", "mu_y", "delta_x", "delta_y", "psi_x", "psi_y"}) {
    if (!s.empty()) s += ',';
    s += prefix + name;
  }
  if (with_focal) s += ',' + prefix + "focal";
  return s;
}

std::string pose_csv_row(const Pose& p) {
  std::string s = format_pose(p);
  for (char& c : s) {
    if (c == ' ') c = ',';
  }
  return s;
}

}  // namespace invpose
