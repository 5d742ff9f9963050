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

#include <cstdint>

#include "invpose/image.h"
#include "invpose/mesh.h"
#include "invpose/pose.h"
#include "invpose/render.h"

namespace invpose {

// Procedural "toy car": rounded body, cabin and four cylinder wheels,
// about 1.7k triangles. Model frame: x points forward, y from the visible
// (left) side across to the hidden side, z up.
Mesh make_toy_car();
ModelAnnotations toy_car_annotations();

// Reference pose used by the synthetic experiments, expressed for an image
// of the given size. Perspective adds a focal distance equal to the width.
Pose toy_car_reference_pose(ProjectionMode mode, int width, int height);

// Ambient + one directional light, zero offset.
Lighting default_lighting();

// Seeded multi-octave value noise in [0, 1].
GrayImage smooth_noise_background(int width, int height, std::uint64_t seed);

}  // namespace invpose
