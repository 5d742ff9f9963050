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

#include "invpose/image.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "invpose/mesh.h"

namespace invpose {
namespace {

std::string format_real(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Minimal whitespace tokenizer over a text buffer.
class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : text_(text) {}

  std::string_view next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw std::runtime_error("unexpected end of image data");
    return std::string_view(text_).substr(start, pos_ - start);
  }

  double real() {
    auto tok = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      throw std::runtime_error("invalid image value '" + std::string(tok) + "'");
    }
    return v;
  }

  int integer() {
    auto tok = next();
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw std::runtime_error("invalid integer '" + std::string(tok) + "'");
    }
    return v;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

void check_dims(int w, int h) {
  if (w < 1 || h < 1) throw std::runtime_error("image dimensions must be positive");
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

AttributeImage::AttributeImage(int width, int height)
    : width_(width), height_(height),
      attributes_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                  Attribute{0.0, 0.0, 0.0, 0.0}),
      coverage_(attributes_.size(), 0) {}

void AttributeImage::clear() {
  std::fill(attributes_.begin(), attributes_.end(), Attribute{0.0, 0.0, 0.0, 0.0});
  std::fill(coverage_.begin(), coverage_.end(), std::uint8_t{0});
}

std::size_t AttributeImage::covered_count() const {
  return static_cast<std::size_t>(std::count(coverage_.begin(), coverage_.end(), 1));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");

  auto next_token = [&]() {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok += c;
    }
    return tok;
  };

  if (next_token() != "P5") throw std::runtime_error("'" + path.string() + "' is not a P5 PGM");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  check_dims(w, h);
  if (maxval < 1 || maxval > 255) throw std::runtime_error("unsupported PGM maxval");

  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw std::runtime_error("truncated PGM '" + path.string() + "'");
  }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < bytes.size(); ++i) img[i] = bytes[i] / static_cast<double>(maxval);
  return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string format_float_image(const GrayImage& image) {
  std::string out = "P2F\n" + std::to_string(image.width()) + ' ' +
                    std::to_string(image.height()) + '\n';
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (x > 0) out += ' ';
      out += format_real(image.at(x, y));
    }
    out += '\n';
  }
  return out;
}

GrayImage parse_float_image(const std::string& text) {
  TokenReader reader(text);
  if (reader.next() != "P2F") throw std::runtime_error("not a P2F float image");
  const int w = reader.integer();
  const int h = reader.integer();
  check_dims(w, h);
  GrayImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = reader.real();
  return img;
}

void write_float_image(const GrayImage& image, const std::filesystem::path& path) {
  write_text_file(path, format_float_image(image));
}

GrayImage read_float_image(const std::filesystem::path& path) {
  return parse_float_image(read_text_file(path));
}

GrayImage read_gray_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  char magic[3] = {0, 0, 0};
  in.read(magic, 3);
  in.close();
  if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  if (magic[0] == 'P' && magic[1] == '2' && magic[2] == 'F') return read_float_image(path);
  throw std::runtime_error("'" + path.string() + "' is neither a P5 PGM nor a P2F float image");
}

std::string format_attribute_image(const AttributeImage& image) {
  std::string out = "ATTR4\n" + std::to_string(image.width()) + ' ' +
                    std::to_string(image.height()) + '\n';
  for (int c = 0; c < kAttributeChannels; ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        if (x > 0) out += ' ';
        out += format_real(image.at(x, y)[c]);
      }
      out += '\n';
    }
  }
  return out;
}

AttributeImage parse_attribute_image(const std::string& text) {
  TokenReader reader(text);
  if (reader.next() != "ATTR4") throw std::runtime_error("not an ATTR4 attribute dump");
  const int w = reader.integer();
  const int h = reader.integer();
  check_dims(w, h);
  std::vector<Attribute> planes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int c = 0; c < kAttributeChannels; ++c) {
    for (auto& a : planes) a[c] = reader.real();
  }
  AttributeImage img(w, h);
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const auto& a = planes[i];
    if (a[0] != 0.0 || a[1] != 0.0 || a[2] != 0.0 || a[3] != 0.0) img.set(i, a);
  }
  return img;
}

void write_attribute_image(const AttributeImage& image, const std::filesystem::path& path) {
  write_text_file(path, format_attribute_image(image));
}

}  // namespace invpose
