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

#include "invpose/render.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace invpose {

const char* to_string(ProjectionMode mode) {
  return mode == ProjectionMode::kParallel ? "parallel" : "perspective";
}

ProjectionMode parse_projection_mode(const std::string& text) {
  if (text == "parallel") return ProjectionMode::kParallel;
  if (text == "perspective") return ProjectionMode::kPerspective;
  throw std::invalid_argument("unknown projection mode '" + text + "'");
}

Vec2 Camera::project(const Vec3& p) const {
  const double cx = 0.5 * width;
  const double cy = 0.5 * height;
  if (mode == ProjectionMode::kParallel) {
    return {cx + scale * p.x(), cy - scale * p.y()};
  }
  const double inv_depth = 1.0 / -p.z();
  return {cx + focal_distance * p.x() * inv_depth, cy - focal_distance * p.y() * inv_depth};
}

void Camera::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("camera viewport must be at least 1x1");
  if (mode == ProjectionMode::kParallel && !(scale > 0.0)) {
    throw std::invalid_argument("parallel camera scale must be positive");
  }
  if (mode == ProjectionMode::kPerspective && !(focal_distance > 0.0)) {
    throw std::invalid_argument("perspective focal distance must be positive");
  }
}

namespace {

struct ScreenVertex {
  double u = 0.0;
  double v = 0.0;
  // Screen-space-linear depth key, smaller is nearer: -z_c for parallel,
  // 1/z_c for perspective.
  double key = 0.0;
  bool usable = true;
};

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left rule for y-down screens with the interior on the positive side.
inline bool is_top_left(double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

inline bool inside(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

}  // namespace

void render_attributes_into(const Mesh& mesh, const Camera& camera, AttributeImage& out) {
  camera.validate();
  const int width = camera.width;
  const int height = camera.height;
  if (out.width() != width || out.height() != height) {
    out = AttributeImage(width, height);
  } else {
    out.clear();
  }
  if (mesh.triangles.empty()) return;

  const bool perspective = camera.mode == ProjectionMode::kPerspective;

  std::vector<ScreenVertex> screen(mesh.vertices.size());
  std::vector<Vec3> normals(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 pc = camera.to_camera(mesh.vertices[i]);
    ScreenVertex& sv = screen[i];
    if (perspective && -pc.z() < camera.near_plane) {
      sv.usable = false;
      continue;
    }
    const Vec2 uv = camera.project(pc);
    sv.u = uv.x();
    sv.v = uv.y();
    sv.key = perspective ? 1.0 / pc.z() : -pc.z();
    normals[i] = camera.rotation * mesh.vertex_normals[i];
  }

  const std::size_t npix = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> zbuffer(npix, std::numeric_limits<double>::infinity());
  std::vector<int> winner(npix, -1);
  std::vector<double> bary1(npix, 0.0);
  std::vector<double> bary2(npix, 0.0);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    const ScreenVertex* s0 = &screen[tri.a];
    const ScreenVertex* s1 = &screen[tri.b];
    const ScreenVertex* s2 = &screen[tri.c];
    if (!s0->usable || !s1->usable || !s2->usable) continue;

    double area = edge(s0->u, s0->v, s1->u, s1->v, s2->u, s2->v);
    if (area == 0.0 || !std::isfinite(area)) continue;
    // Record barycentrics w.r.t. the original vertex order so attribute
    // lookup can stay oblivious of the orientation swap.
    bool swapped = false;
    if (area < 0.0) {
      std::swap(s1, s2);
      area = -area;
      swapped = true;
    }

    const double min_u = std::min({s0->u, s1->u, s2->u});
    const double max_u = std::max({s0->u, s1->u, s2->u});
    const double min_v = std::min({s0->v, s1->v, s2->v});
    const double max_v = std::max({s0->v, s1->v, s2->v});
    const int x0 = std::max(0, static_cast<int>(std::ceil(min_u - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_u - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(min_v - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_v - 0.5)));
    if (x0 > x1 || y0 > y1) continue;

    const bool tl0 = is_top_left(s1->u, s1->v, s2->u, s2->v);
    const bool tl1 = is_top_left(s2->u, s2->v, s0->u, s0->v);
    const bool tl2 = is_top_left(s0->u, s0->v, s1->u, s1->v);
    const double inv_area = 1.0 / area;

    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      std::size_t idx = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(x0);
      for (int x = x0; x <= x1; ++x, ++idx) {
        const double px = x + 0.5;
        const double w0 = edge(s1->u, s1->v, s2->u, s2->v, px, py);
        if (!inside(w0, tl0)) continue;
        const double w1 = edge(s2->u, s2->v, s0->u, s0->v, px, py);
        if (!inside(w1, tl1)) continue;
        const double w2 = edge(s0->u, s0->v, s1->u, s1->v, px, py);
        if (!inside(w2, tl2)) continue;

        const double l1 = w1 * inv_area;
        const double l2 = w2 * inv_area;
        const double l0 = 1.0 - l1 - l2;
        const double key = l0 * s0->key + l1 * s1->key + l2 * s2->key;
        if (key < zbuffer[idx]) {
          zbuffer[idx] = key;
          winner[idx] = static_cast<int>(t);
          bary1[idx] = swapped ? l2 : l1;
          bary2[idx] = swapped ? l1 : l2;
        }
      }
    }
  }

  // Resolve attributes only for the visible fragments.
  for (std::size_t idx = 0; idx < npix; ++idx) {
    const int t = winner[idx];
    if (t < 0) continue;
    const Triangle& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const double l1 = bary1[idx];
    const double l2 = bary2[idx];
    const double l0 = 1.0 - l1 - l2;

    const Reflectance& r0 = mesh.reflectance[tri.a];
    const Reflectance& r1 = mesh.reflectance[tri.b];
    const Reflectance& r2 = mesh.reflectance[tri.c];
    const double ka = l0 * r0.ambient + l1 * r1.ambient + l2 * r2.ambient;
    const double kd = l0 * r0.diffuse + l1 * r1.diffuse + l2 * r2.diffuse;

    Vec3 n = l0 * normals[tri.a] + l1 * normals[tri.b] + l2 * normals[tri.c];
    double len = n.norm();
    if (!(len > 1e-12)) {
      // Opposing vertex normals cancelled; fall back to the face normal.
      const Vec3 e1 = mesh.vertices[tri.b] - mesh.vertices[tri.a];
      const Vec3 e2 = mesh.vertices[tri.c] - mesh.vertices[tri.a];
      n = camera.rotation * e1.cross(e2);
      len = n.norm();
    }
    n *= kd / len;
    out.set(idx, Attribute{ka, n.x(), n.y(), n.z()});
  }
}

AttributeImage render_attributes(const Mesh& mesh, const Camera& camera) {
  AttributeImage out;
  render_attributes_into(mesh, camera, out);
  return out;
}

GrayImage shade_phong(const AttributeImage& attrs, const Lighting& lighting, double background) {
  GrayImage img(attrs.width(), attrs.height(), background);
  const double ia = lighting.ambient;
  const Vec3 gain = lighting.diffuse * lighting.direction;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!attrs.covered(i)) continue;
    const Attribute& a = attrs.attribute(i);
    img[i] = ia * a[0] + gain.x() * a[1] + gain.y() * a[2] + gain.z() * a[3] + lighting.offset;
  }
  return img;
}

GrayImage composite_over_background(const GrayImage& fore, const std::vector<std::uint8_t>& coverage,
                                    const GrayImage& back) {
  if (fore.width() != back.width() || fore.height() != back.height() ||
      coverage.size() != fore.size()) {
    throw std::invalid_argument("composite: dimension mismatch (" + std::to_string(fore.width()) +
                                "x" + std::to_string(fore.height()) + " vs " +
                                std::to_string(back.width()) + "x" +
                                std::to_string(back.height()) + ")");
  }
  GrayImage out = back;
  for (std::size_t i = 0; i < fore.size(); ++i) {
    if (coverage[i]) out[i] = fore[i];
  }
  return out;
}

}  // namespace invpose
