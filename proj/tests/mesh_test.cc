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

#include <filesystem>

#include <gtest/gtest.h>

#include "invpose/fixtures.h"

namespace invpose {
namespace {

const char* kTetrahedron = R"(# unit tetrahedron
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
vr 0.5 1
vr 0.5 1
vr 0.25 0.75
vr 1 0

f 1 3 2
f 1 2 4
f 1 4 3   # trailing comment
f 2 3 4
)";

TEST(ParseMesh, ReadsVerticesFacesAndReflectance) {
  const Mesh m = parse_mesh(kTetrahedron);
  ASSERT_EQ(m.vertex_count(), 4u);
  ASSERT_EQ(m.triangle_count(), 4u);
  EXPECT_EQ(m.vertices[1], Vec3(1, 0, 0));
  EXPECT_EQ(m.triangles[0].a, 0);
  EXPECT_EQ(m.triangles[0].b, 2);
  EXPECT_EQ(m.triangles[0].c, 1);
  EXPECT_DOUBLE_EQ(m.reflectance[2].ambient, 0.25);
  EXPECT_DOUBLE_EQ(m.reflectance[3].diffuse, 0.0);
  // Normals were not given, so they are computed and unit length.
  ASSERT_EQ(m.vertex_normals.size(), 4u);
  for (const Vec3& n : m.vertex_normals) EXPECT_NEAR(n.norm(), 1.0, 1e-12);
}

TEST(ParseMesh, MissingReflectanceDefaultsToOne) {
  const Mesh m = parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  for (const Reflectance& r : m.reflectance) {
    EXPECT_EQ(r.ambient, 1.0);
    EXPECT_EQ(r.diffuse, 1.0);
  }
}

TEST(ParseMesh, ErrorsCarryLineNumbers) {
  try {
    parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 x\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse_mesh("v 0 0 0\nq 1 2 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2\n"), ParseError);
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nvr 1 1\nf 1 2 3\n"), ParseError);
}

TEST(ValidateMesh, RejectsBadIndicesAndDegenerateTriangles) {
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"), ValidationError);
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"), ValidationError);
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nvr 1 1\nvr 1 1\nvr 1.5 1\nf 1 2 3\n"),
               ValidationError);
}

TEST(VertexNormals, OrphanVertexIsAnError) {
  EXPECT_THROW(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 5 5\nf 1 2 3\n"), ValidationError);
}

TEST(VertexNormals, AreaWeightedAverage) {
  // Two triangles sharing vertex 0: one in the xy plane with area 2, one in
  // the xz plane with area 0.5. Expected normal is (0, -0.5, 2) normalized.
  Mesh m;
  m.vertices = {{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {1, 0, 0}, {0, 0, 1}};
  m.triangles = {{0, 1, 2}, {0, 3, 4}};
  m.reflectance.assign(5, Reflectance{});
  m = compute_vertex_normals(std::move(m));
  const Vec3 expected = Vec3(0, -0.5, 2).normalized();
  EXPECT_NEAR((m.vertex_normals[0] - expected).norm(), 0.0, 1e-15);
  EXPECT_NEAR((m.vertex_normals[1] - Vec3::UnitZ()).norm(), 0.0, 1e-15);
}

TEST(FormatMesh, RoundTripIsExact) {
  const Mesh car = make_toy_car();
  const Mesh back = parse_mesh(format_mesh(car));
  ASSERT_EQ(back.vertex_count(), car.vertex_count());
  ASSERT_EQ(back.triangle_count(), car.triangle_count());
  for (std::size_t i = 0; i < car.vertex_count(); ++i) {
    EXPECT_EQ(back.vertices[i], car.vertices[i]);
    EXPECT_EQ(back.vertex_normals[i], car.vertex_normals[i]);
    EXPECT_EQ(back.reflectance[i].ambient, car.reflectance[i].ambient);
    EXPECT_EQ(back.reflectance[i].diffuse, car.reflectance[i].diffuse);
  }
  for (std::size_t i = 0; i < car.triangle_count(); ++i) {
    EXPECT_EQ(back.triangles[i].a, car.triangles[i].a);
    EXPECT_EQ(back.triangles[i].b, car.triangles[i].b);
    EXPECT_EQ(back.triangles[i].c, car.triangles[i].c);
  }
}

TEST(FormatMesh, SaveAndLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "invpose_mesh_test.mesh";
  const Mesh m = parse_mesh(kTetrahedron);
  save_mesh(m, path);
  const Mesh back = load_mesh(path);
  EXPECT_EQ(back.vertex_count(), 4u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_mesh(path), std::runtime_error);
}

TEST(Annotations, ParseAndNormalizeAxle) {
  const ModelAnnotations a =
      parse_annotations("rear_wheel -1 0 0.3\nfront_wheel 1.5 0 0.3\naxle 0 2 0\n");
  EXPECT_EQ(a.rear_wheel_center, Vec3(-1, 0, 0.3));
  EXPECT_EQ(a.axle_direction, Vec3(0, 1, 0));
  EXPECT_EQ(a.wheelbase(), Vec3(2.5, 0, 0));
  const ModelAnnotations back = parse_annotations(format_annotations(a));
  EXPECT_EQ(back.front_wheel_center, a.front_wheel_center);
}

TEST(Annotations, MissingOrDegenerateFields) {
  EXPECT_THROW(parse_annotations("rear_wheel 0 0 0\nfront_wheel 1 0 0\n"), ParseError);
  EXPECT_THROW(parse_annotations("rear_wheel 0 0 0\nfront_wheel 1 0 0\naxle 0 0 0\n"),
               ValidationError);
  EXPECT_THROW(parse_annotations("rear_wheel 1 0 0\nfront_wheel 1 0 0\naxle 0 1 0\n"),
               ValidationError);
  EXPECT_THROW(parse_annotations("rear_wheel 0 0 0\nwheel 1 0 0\n"), ParseError);
}

TEST(ToyCar, IsValidAndMatchesAnnotations) {
  const Mesh car = make_toy_car();
  EXPECT_NO_THROW(validate_mesh(car));
  EXPECT_GE(car.triangle_count(), 1000u);
  EXPECT_LE(car.triangle_count(), 2000u);
  const ModelAnnotations ann = toy_car_annotations();
  // Axle is perpendicular to the wheelbase and points from the visible
  // wheel pair to the hidden one.
  EXPECT_NEAR(ann.wheelbase().dot(ann.axle_direction), 0.0, 1e-15);
  EXPECT_LT(ann.rear_wheel_center.dot(ann.axle_direction), 0.0);
}

}  // namespace
}  // namespace invpose
