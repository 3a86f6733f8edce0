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
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace d3 {

using Vector = std::vector<double>;

/// H x W x C image, row-major with interleaved channels. Values are nominally
/// in [0,1]; clamping happens at I/O and merge boundaries.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, double fill = 0.0);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height == other.height && width == other.width && channels == other.channels;
  }

  /// Throws DimensionError if data length or channel count is inconsistent.
  void validate() const;
};

void clamp_unit(ImageTensor& img);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace d3
