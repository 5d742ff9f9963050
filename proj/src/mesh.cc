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

#include "invpose/mesh.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include <Eigen/Geometry>

namespace invpose {
namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_real(std::string_view token, int line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError("invalid number '" + std::string(token) + "'", line);
  }
  return value;
}

int parse_index(std::string_view token, int line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("invalid vertex index '" + std::string(token) + "'", line);
  }
  return value;
}

Vec3 parse_vec3(const std::vector<std::string_view>& tokens, int line) {
  if (tokens.size() != 4) {
    throw ParseError("'" + std::string(tokens[0]) + "' expects 3 values", line);
  }
  return {parse_real(tokens[1], line), parse_real(tokens[2], line), parse_real(tokens[3], line)};
}

// Iterates non-empty, comment-stripped lines.
template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    fn(tokens, line_no);
  }
}

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Vec3 face_area_normal(const Mesh& mesh, const Triangle& t) {
  const Vec3& p0 = mesh.vertices[t.a];
  const Vec3& p1 = mesh.vertices[t.b];
  const Vec3& p2 = mesh.vertices[t.c];
  return (p1 - p0).cross(p2 - p0);  // length = 2 * area
}

}  // namespace

Mesh parse_mesh(const std::string& text) {
  Mesh mesh;
  for_each_record(text, [&](const std::vector<std::string_view>& tokens, int line) {
    const std::string_view tag = tokens[0];
    if (tag == "v") {
      mesh.vertices.push_back(parse_vec3(tokens, line));
    } else if (tag == "vn") {
      const Vec3 n = parse_vec3(tokens, line);
      if (n.norm() == 0.0) throw ParseError("zero-length normal", line);
      // Keep already-unit normals bit-exact so format/parse round-trips.
      mesh.vertex_normals.push_back(std::abs(n.norm() - 1.0) <= 1e-12 ? n : n.normalized());
    } else if (tag == "vr") {
      if (tokens.size() != 3) throw ParseError("'vr' expects 2 values", line);
      mesh.reflectance.push_back({parse_real(tokens[1], line), parse_real(tokens[2], line)});
    } else if (tag == "f") {
      if (tokens.size() != 4) throw ParseError("'f' expects exactly 3 indices", line);
      Triangle t{parse_index(tokens[1], line) - 1, parse_index(tokens[2], line) - 1,
                 parse_index(tokens[3], line) - 1};
      mesh.triangles.push_back(t);
    } else {
      throw ParseError("unknown record '" + std::string(tag) + "'", line);
    }
  });

  const std::size_t n = mesh.vertices.size();
  if (!mesh.vertex_normals.empty() && mesh.vertex_normals.size() != n) {
    throw ParseError("expected " + std::to_string(n) + " 'vn' records, found " +
                         std::to_string(mesh.vertex_normals.size()),
                     0);
  }
  if (!mesh.reflectance.empty() && mesh.reflectance.size() != n) {
    throw ParseError("expected " + std::to_string(n) + " 'vr' records, found " +
                         std::to_string(mesh.reflectance.size()),
                     0);
  }
  if (mesh.reflectance.empty()) mesh.reflectance.assign(n, Reflectance{});

  validate_mesh(mesh);
  if (mesh.vertex_normals.empty()) mesh = compute_vertex_normals(std::move(mesh));
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& path) { return parse_mesh(read_text_file(path)); }

void validate_mesh(const Mesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle& t = mesh.triangles[i];
    for (int idx : {t.a, t.b, t.c}) {
      if (idx < 0 || idx >= n) {
        throw ValidationError("triangle " + std::to_string(i + 1) + " references vertex " +
                              std::to_string(idx + 1) + " but mesh has " + std::to_string(n) +
                              " vertices");
      }
    }
    if (face_area_normal(mesh, t).norm() == 0.0) {
      throw ValidationError("triangle " + std::to_string(i + 1) + " is degenerate (zero area)");
    }
  }
  if (mesh.reflectance.size() != mesh.vertices.size()) {
    throw ValidationError("reflectance count does not match vertex count");
  }
  for (std::size_t i = 0; i < mesh.reflectance.size(); ++i) {
    const Reflectance& r = mesh.reflectance[i];
    if (!(r.ambient >= 0.0 && r.ambient <= 1.0 && r.diffuse >= 0.0 && r.diffuse <= 1.0)) {
      throw ValidationError("vertex " + std::to_string(i + 1) + " reflectance outside [0,1]");
    }
  }
  if (!mesh.vertex_normals.empty()) {
    if (mesh.vertex_normals.size() != mesh.vertices.size()) {
      throw ValidationError("normal count does not match vertex count");
    }
    for (std::size_t i = 0; i < mesh.vertex_normals.size(); ++i) {
      if (std::abs(mesh.vertex_normals[i].norm() - 1.0) > 1e-6) {
        throw ValidationError("vertex " + std::to_string(i + 1) + " normal is not unit length");
      }
    }
  }
}

Mesh compute_vertex_normals(Mesh mesh) {
  std::vector<Vec3> sums(mesh.vertices.size(), Vec3::Zero());
  std::vector<int> incident(mesh.vertices.size(), 0);
  for (const Triangle& t : mesh.triangles) {
    // The cross product already carries twice the area, so summing it
    // directly is area weighting.
    const Vec3 n = face_area_normal(mesh, t);
    for (int idx : {t.a, t.b, t.c}) {
      sums[idx] += n;
      ++incident[idx];
    }
  }
  mesh.vertex_normals.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (incident[i] == 0) {
      throw ValidationError("vertex " + std::to_string(i + 1) + " has no incident triangle");
    }
    const double len = sums[i].norm();
    if (len == 0.0) {
      throw ValidationError("vertex " + std::to_string(i + 1) +
                            " has incident face normals that cancel out");
    }
    mesh.vertex_normals[i] = sums[i] / len;
  }
  return mesh;
}

std::string format_mesh(const Mesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 96 + mesh.triangles.size() * 24);
  out += "# invpose mesh: ";
  out += std::to_string(mesh.vertices.size()) + " vertices, ";
  out += std::to_string(mesh.triangles.size()) + " triangles\n";
  auto put3 = [&](const char* tag, const Vec3& v) {
    out += tag;
    for (int k = 0; k < 3; ++k) {
      out += ' ';
      out += format_real(v[k]);
    }
    out += '\n';
  };
  for (const Vec3& v : mesh.vertices) put3("v", v);
  for (const Vec3& n : mesh.vertex_normals) put3("vn", n);
  for (const Reflectance& r : mesh.reflectance) {
    out += "vr " + format_real(r.ambient) + ' ' + format_real(r.diffuse) + '\n';
  }
  for (const Triangle& t : mesh.triangles) {
    out += "f " + std::to_string(t.a + 1) + ' ' + std::to_string(t.b + 1) + ' ' +
           std::to_string(t.c + 1) + '\n';
  }
  return out;
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  write_text_file(path, format_mesh(mesh));
}

ModelAnnotations parse_annotations(const std::string& text) {
  std::optional<Vec3> rear, front, axle;
  for_each_record(text, [&](const std::vector<std::string_view>& tokens, int line) {
    const std::string_view key = tokens[0];
    if (key == "rear_wheel") {
      rear = parse_vec3(tokens, line);
    } else if (key == "front_wheel") {
      front = parse_vec3(tokens, line);
    } else if (key == "axle") {
      axle = parse_vec3(tokens, line);
    } else {
      throw ParseError("unknown annotation key '" + std::string(key) + "'", line);
    }
  });
  if (!rear) throw ParseError("missing field 'rear_wheel'", 0);
  if (!front) throw ParseError("missing field 'front_wheel'", 0);
  if (!axle) throw ParseError("missing field 'axle'", 0);

  if (axle->norm() == 0.0) throw ValidationError("axle direction has zero length");
  if (*rear == *front) throw ValidationError("rear and front wheel centers coincide");

  ModelAnnotations ann;
  ann.rear_wheel_center = *rear;
  ann.front_wheel_center = *front;
  ann.axle_direction = axle->normalized();
  return ann;
}

ModelAnnotations load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path));
}

std::string format_annotations(const ModelAnnotations& a) {
  auto line = [](const char* key, const Vec3& v) {
    return std::string(key) + ' ' + format_real(v.x()) + ' ' + format_real(v.y()) + ' ' +
           format_real(v.z()) + '\n';
  };
  return line("rear_wheel", a.rear_wheel_center) + line("front_wheel", a.front_wheel_center) +
         line("axle", a.axle_direction);
}

void save_annotations(const ModelAnnotations& annotations, const std::filesystem::path& path) {
  write_text_file(path, format_annotations(annotations));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace invpose
