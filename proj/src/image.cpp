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
#include "d3/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "d3/error.hpp"

namespace d3 {

ImageTensor::ImageTensor(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
  if (h <= 0 || w <= 0 || (c != 1 && c != 3)) {
    throw DimensionError("invalid image shape " + std::to_string(h) + "x" + std::to_string(w) +
                         "x" + std::to_string(c));
  }
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void ImageTensor::validate() const {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3)) {
    throw DimensionError("invalid image shape " + std::to_string(height) + "x" +
                         std::to_string(width) + "x" + std::to_string(channels));
  }
  if (data.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DimensionError("image data length " + std::to_string(data.size()) +
                         " does not match shape");
  }
}

void clamp_unit(ImageTensor& img) {
  for (double& v : img.data) {
    v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace d3
