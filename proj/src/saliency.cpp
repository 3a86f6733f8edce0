/*
 * Copyright 2026 The D3 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "d3/saliency.hpp"

#include <cmath>
#include <string>

#include "d3/binio.hpp"
#include "d3/error.hpp"

namespace d3 {
namespace {

constexpr std::string_view kMagic = "D3SAL001";

std::string shape(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

}  // namespace

void SaliencyMap::validate() const {
  if (height <= 0 || width <= 0 ||
      weights.size() != static_cast<std::size_t>(height) * width) {
    throw DimensionError("saliency map " + shape(height, width) + " holds " +
                         std::to_string(weights.size()) + " weights");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw DimensionError("saliency weight " + std::to_string(i) + " is negative or not finite");
    }
  }
}

SaliencyMap uniform_saliency(const ImageTensor& img) {
  img.validate();
  return {img.height, img.width,
          std::vector<double>(static_cast<std::size_t>(img.height) * img.width, 1.0)};
}

SaliencyMap gradient_magnitude_saliency(const ImageTensor& img) {
  img.validate();
  SaliencyMap map{img.height, img.width,
                  std::vector<double>(static_cast<std::size_t>(img.height) * img.width, 0.0)};
  auto diff = [](double lo, double hi, int span) { return (hi - lo) / span; };
  for (int y = 0; y < img.height; ++y) {
    const int y0 = y > 0 ? y - 1 : y;
    const int y1 = y + 1 < img.height ? y + 1 : y;
    for (int x = 0; x < img.width; ++x) {
      const int x0 = x > 0 ? x - 1 : x;
      const int x1 = x + 1 < img.width ? x + 1 : x;
      double acc = 0.0;
      for (int c = 0; c < img.channels; ++c) {
        const double gx = x1 > x0 ? diff(img.at(y, x0, c), img.at(y, x1, c), x1 - x0) : 0.0;
        const double gy = y1 > y0 ? diff(img.at(y0, x, c), img.at(y1, x, c), y1 - y0) : 0.0;
        acc += gx * gx + gy * gy;
      }
      map.weights[static_cast<std::size_t>(y) * img.width + x] = std::sqrt(acc);
    }
  }
  return map;
}

void save_saliency(const SaliencyMap& map, const std::filesystem::path& path) {
  map.validate();
  binio::Writer w;
  w.magic(kMagic);
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u32(static_cast<std::uint32_t>(map.width));
  for (double v : map.weights) w.f32(static_cast<float>(v));
  binio::write_file(path, w.bytes());
}

SaliencyMap load_saliency_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing saliency file " + path.string());
  const auto bytes = binio::read_file(path);
  binio::Reader r(bytes, "saliency " + path.string());
  if (r.magic(kMagic.size()) != kMagic) throw FormatError("bad saliency magic in " + path.string());
  SaliencyMap map;
  map.height = static_cast<int>(r.u32());
  map.width = static_cast<int>(r.u32());
  const std::size_t n = static_cast<std::size_t>(map.height) * map.width;
  if (n * 4 != r.remaining()) {
    throw FormatError("saliency " + path.string() + ": payload does not match " +
                      shape(map.height, map.width));
  }
  map.weights.resize(n);
  for (double& v : map.weights) v = r.f32();
  try {
    map.validate();
  } catch (const DimensionError& e) {
    throw FormatError("saliency " + path.string() + ": " + e.what());
  }
  return map;
}

SaliencyMap load_saliency(const std::filesystem::path& dir, const std::string& image_id,
                          int height, int width) {
  SaliencyMap map = load_saliency_file(dir / (image_id + ".d3sal"));
  if (map.height != height || map.width != width) {
    throw DimensionError("saliency map " + image_id + " is " + shape(map.height, map.width) +
                         " but the image is " + shape(height, width));
  }
  return map;
}

SaliencyMap DirectorySaliency::compute(const ImageTensor& img, std::size_t index) const {
  if (index >= ids_.size()) {
    throw DimensionError("no saliency id for corpus image " + std::to_string(index));
  }
  return load_saliency(dir_, ids_[index], img.height, img.width);
}

}  // namespace d3
