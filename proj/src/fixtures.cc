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

#include "invpose/fixtures.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace invpose {
namespace {

double signed_pow(double t, double e) { return std::copysign(std::pow(std::abs(t), e), t); }

// Closed superquadric on a latitude/longitude grid with single pole vertices.
using Paint = std::function<Reflectance(const Vec3&)>;

void add_superquadric(Mesh& mesh, const Vec3& center, const Vec3& radii, double exponent,
                      int segments, int rings, const Paint& paint) {
  const int base = static_cast<int>(mesh.vertices.size());
  auto point = [&](double eta, double omega) {
    const double ce = signed_pow(std::cos(eta), exponent);
    return Vec3(center.x() + radii.x() * ce * signed_pow(std::cos(omega), exponent),
                center.y() + radii.y() * ce * signed_pow(std::sin(omega), exponent),
                center.z() + radii.z() * signed_pow(std::sin(eta), exponent));
  };
  const double pi = std::numbers::pi;
  mesh.vertices.push_back(center - Vec3(0, 0, radii.z()));  // south pole
  for (int r = 1; r < rings; ++r) {
    const double eta = -pi / 2 + pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      mesh.vertices.push_back(point(eta, 2 * pi * s / segments));
    }
  }
  mesh.vertices.push_back(center + Vec3(0, 0, radii.z()));  // north pole
  const int south = base;
  const int north = static_cast<int>(mesh.vertices.size()) - 1;
  auto ring_vertex = [&](int r, int s) { return base + 1 + (r - 1) * segments + (s % segments); };

  for (int s = 0; s < segments; ++s) {
    mesh.triangles.push_back({south, ring_vertex(1, s + 1), ring_vertex(1, s)});
  }
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_vertex(r, s);
      const int b = ring_vertex(r, s + 1);
      const int c = ring_vertex(r + 1, s + 1);
      const int d = ring_vertex(r + 1, s);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  for (int s = 0; s < segments; ++s) {
    mesh.triangles.push_back({north, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
  }
  for (std::size_t i = static_cast<std::size_t>(base); i < mesh.vertices.size(); ++i) {
    mesh.reflectance.push_back(paint(mesh.vertices[i]));
  }
}

// Cylinder along the y axis with flat caps (caps get their own vertices so
// their normals stay axial).
void add_wheel(Mesh& mesh, const Vec3& center, double radius, double half_width, int segments,
               Reflectance tyre, Reflectance hub) {
  const double pi = std::numbers::pi;
  auto rim = [&](int s, double y) {
    const double a = 2 * pi * s / segments;
    return Vec3(center.x() + radius * std::cos(a), center.y() + y,
                center.z() + radius * std::sin(a));
  };
  // Tread.
  const int tread = static_cast<int>(mesh.vertices.size());
  for (int s = 0; s < segments; ++s) {
    mesh.vertices.push_back(rim(s, -half_width));
    mesh.vertices.push_back(rim(s, half_width));
  }
  mesh.reflectance.resize(mesh.vertices.size(), tyre);
  for (int s = 0; s < segments; ++s) {
    const int a = tread + 2 * s;
    const int b = tread + 2 * ((s + 1) % segments);
    mesh.triangles.push_back({a, b, b + 1});
    mesh.triangles.push_back({a, b + 1, a + 1});
  }
  // Caps: hub vertex plus a ring of tyre-coloured vertices.
  for (double side : {-1.0, 1.0}) {
    const int hub_idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(center + Vec3(0, side * half_width, 0));
    mesh.reflectance.push_back(hub);
    for (int s = 0; s < segments; ++s) {
      mesh.vertices.push_back(rim(s, side * half_width));
      mesh.reflectance.push_back(tyre);
    }
    for (int s = 0; s < segments; ++s) {
      const int a = hub_idx + 1 + s;
      const int b = hub_idx + 1 + (s + 1) % segments;
      if (side < 0) {
        mesh.triangles.push_back({hub_idx, a, b});
      } else {
        mesh.triangles.push_back({hub_idx, b, a});
      }
    }
  }
}

constexpr double kWheelX = 1.3;
constexpr double kWheelY = 0.9;
constexpr double kWheelRadius = 0.36;

}  // namespace

Mesh make_toy_car() {
  Mesh mesh;
  // Two-tone body, darker towards the sills, with head and tail lights.
  auto body_paint = [](const Vec3& p) {
    const double t = std::clamp((p.z() - 0.3) / 0.6, 0.0, 1.0);
    const double u = (p.x() + 2.2) / 4.4;
    Reflectance r{0.15 + 0.45 * t + 0.35 * u, 0.9};
    if (std::abs(p.x()) > 1.9 && p.z() > 0.6 && p.z() < 0.85) r.ambient = p.x() > 0 ? 1.0 : 0.1;
    return r;
  };
  // Dark glass band under a bright roof.
  auto cabin_paint = [](const Vec3& p) {
    return p.z() > 1.2 ? Reflectance{0.85, 0.9} : Reflectance{0.2, 0.5};
  };
  add_superquadric(mesh, {0.0, 0.0, 0.62}, {2.2, 0.85, 0.38}, 0.7, 32, 16, body_paint);
  add_superquadric(mesh, {-0.2, 0.0, 1.0}, {1.1, 0.7, 0.32}, 0.7, 24, 10, cabin_paint);
  const Reflectance tyre{0.15, 0.3};
  const Reflectance hub{0.7, 0.8};
  for (double x : {-kWheelX, kWheelX}) {
    for (double y : {-kWheelY, kWheelY}) {
      add_wheel(mesh, {x, y, kWheelRadius}, kWheelRadius, 0.13, 20, tyre, hub);
    }
  }
  validate_mesh(mesh);
  return compute_vertex_normals(std::move(mesh));
}

ModelAnnotations toy_car_annotations() {
  ModelAnnotations ann;
  ann.rear_wheel_center = {-kWheelX, -kWheelY, kWheelRadius};
  ann.front_wheel_center = {kWheelX, -kWheelY, kWheelRadius};
  ann.axle_direction = {0.0, 1.0, 0.0};
  return ann;
}

Pose toy_car_reference_pose(ProjectionMode mode, int width, int height) {
  NormalizedPose n;
  if (mode == ProjectionMode::kParallel) {
    n.values.resize(6);
    n.values << 0.30, 0.64, 0.42, -0.03, 0.35, 0.30;
  } else {
    n.values.resize(7);
    n.values << 0.30, 0.64, 0.42, -0.03, 0.35, 0.30, 1.0;
  }
  return denormalize(n, width, height);
}

Lighting default_lighting() {
  Lighting l;
  l.ambient = 0.35;
  l.diffuse = 0.65;
  l.direction = Vec3(-0.4, 0.6, 0.7).normalized();
  l.offset = 0.0;
  return l;
}

GrayImage smooth_noise_background(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  GrayImage img(width, height, 0.0);
  double amplitude = 1.0;
  double total = 0.0;
  for (int cell : {32, 12, 5}) {
    const int gw = width / cell + 2;
    const int gh = height / cell + 2;
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = unit();
    for (int y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y) / cell;
      const int y0 = static_cast<int>(fy);
      double ty = fy - y0;
      ty = ty * ty * (3 - 2 * ty);
      for (int x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x) / cell;
        const int x0 = static_cast<int>(fx);
        double tx = fx - x0;
        tx = tx * tx * (3 - 2 * tx);
        auto at = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
        const double top = at(x0, y0) * (1 - tx) + at(x0 + 1, y0) * tx;
        const double bottom = at(x0, y0 + 1) * (1 - tx) + at(x0 + 1, y0 + 1) * tx;
        img.at(x, y) += amplitude * (top * (1 - ty) + bottom * ty);
      }
    }
    total += amplitude;
    amplitude *= 0.5;
  }
  for (double& v : img.data()) v /= total;
  return img;
}

}  // namespace invpose
