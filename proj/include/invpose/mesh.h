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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace invpose {

using Vec3 = Eigen::Vector3d;

// Thrown for malformed mesh or annotation text. Carries the 1-based line
// number when the problem is tied to a specific line (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Thrown when a structurally parsed mesh violates an invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Reflectance {
  double ambient = 1.0;  // k_a
  double diffuse = 1.0;  // k_d
};

struct Triangle {
  int a = 0;
  int b = 0;
  int c = 0;
};

// Triangulated surface with per-vertex unit normals and reflectance.
// Treated as immutable once validated; share freely across threads.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> vertex_normals;
  std::vector<Reflectance> reflectance;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

// Model-frame anchors for the wheel-based pose parameterization.
// axle_direction points from the visible wheel across to the hidden one.
struct ModelAnnotations {
  Vec3 rear_wheel_center = Vec3::Zero();
  Vec3 front_wheel_center = Vec3::Zero();
  Vec3 axle_direction = Vec3::UnitY();

  Vec3 wheelbase() const { return front_wheel_center - rear_wheel_center; }
};

// Mesh text format (one record per line, '#' starts a comment):
//   v  x y z      vertex position
//   vn x y z      vertex normal, i-th vn belongs to the i-th v
//   vr ka kd      vertex reflectance, i-th vr belongs to the i-th v
//   f  i j k      triangle, 1-based vertex indices
// vn and vr are all-or-nothing: either one per vertex or none at all.
Mesh parse_mesh(const std::string& text);
Mesh load_mesh(const std::filesystem::path& path);
std::string format_mesh(const Mesh& mesh);
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

// Throws ValidationError naming the first offending triangle or vertex.
void validate_mesh(const Mesh& mesh);

// Area-weighted average of incident face normals, renormalized.
// Throws ValidationError for a vertex without incident triangles.
Mesh compute_vertex_normals(Mesh mesh);

// Annotation text format:
//   rear_wheel  x y z
//   front_wheel x y z
//   axle        x y z
ModelAnnotations parse_annotations(const std::string& text);
ModelAnnotations load_annotations(const std::filesystem::path& path);
std::string format_annotations(const ModelAnnotations& annotations);
void save_annotations(const ModelAnnotations& annotations, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace invpose
