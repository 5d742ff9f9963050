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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace invpose {

// Scalar-per-pixel image, row-major, (x, y) with y growing downwards.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  double& at(int x, int y) { return data_[index(x, y)]; }
  double at(int x, int y) const { return data_[index(x, y)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Per-pixel attribute 4-vector (k_a, k_d * phi_x, k_d * phi_y, k_d * phi_z)
// with phi the unit camera-frame surface normal. Uncovered pixels hold
// exactly zero.
using Attribute = std::array<double, 4>;
inline constexpr int kAttributeChannels = 4;

class AttributeImage {
 public:
  AttributeImage() = default;
  AttributeImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return attributes_.size(); }

  const Attribute& at(int x, int y) const { return attributes_[index(x, y)]; }
  bool covered(int x, int y) const { return coverage_[index(x, y)] != 0; }

  const Attribute& attribute(std::size_t i) const { return attributes_[i]; }
  bool covered(std::size_t i) const { return coverage_[i] != 0; }

  void set(std::size_t i, const Attribute& a) {
    attributes_[i] = a;
    coverage_[i] = 1;
  }
  void clear();

  std::size_t covered_count() const;

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::vector<std::uint8_t>& coverage() const { return coverage_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Attribute> attributes_;
  std::vector<std::uint8_t> coverage_;
};

// Binary PGM (P5, maxval 255). Intensity 1.0 maps to 255; values are
// clamped to [0, 1] and rounded on write. Reading yields value / maxval.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

// Loss-exact float image text format:
//   P2F
//   <width> <height>
//   <height lines of width reals, shortest round-trip representation>
std::string format_float_image(const GrayImage& image);
GrayImage parse_float_image(const std::string& text);
void write_float_image(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_float_image(const std::filesystem::path& path);

// Reads either format, dispatching on the magic number.
GrayImage read_gray_image(const std::filesystem::path& path);

// Attribute debug dump:
//   ATTR4
//   <width> <height>
//   4 planes (k_a, k_d phi_x, k_d phi_y, k_d phi_z), each <height> lines.
// Coverage is recovered on read as "any channel nonzero".
std::string format_attribute_image(const AttributeImage& image);
AttributeImage parse_attribute_image(const std::string& text);
void write_attribute_image(const AttributeImage& image, const std::filesystem::path& path);

}  // namespace invpose
