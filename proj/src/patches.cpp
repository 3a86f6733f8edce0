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
#include "d3/patches.hpp"

#include <algorithm>
#include <string>

#include "d3/error.hpp"

namespace d3 {
namespace {

void check_geometry(int height, int width, int patch_size, int stride) {
  if (patch_size < 1 || patch_size > std::min(height, width)) {
    throw DimensionError("patch size " + std::to_string(patch_size) + " out of range for " +
                         std::to_string(height) + "x" + std::to_string(width) + " image");
  }
  if (stride < 1 || stride > patch_size) {
    throw DimensionError("stride " + std::to_string(stride) + " out of range [1, " +
                         std::to_string(patch_size) + "]");
  }
}

}  // namespace

int default_stride(int patch_size) { return std::max(1, patch_size / 4); }

int window_count(int dim, int patch_size, int stride) { return (dim - patch_size) / stride + 1; }

void copy_window(const ImageTensor& img, int y, int x, int patch_size, Vector& out) {
  const std::size_t row_len = static_cast<std::size_t>(patch_size) * img.channels;
  out.resize(row_len * patch_size);
  for (int dy = 0; dy < patch_size; ++dy) {
    const double* src = img.data.data() + img.index(y + dy, x);
    std::copy(src, src + row_len, out.begin() + dy * row_len);
  }
}

PatchGrid extract_patches(const ImageTensor& img, int patch_size, int stride) {
  img.validate();
  check_geometry(img.height, img.width, patch_size, stride);
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.stride = stride;
  grid.channels = img.channels;
  grid.rows = window_count(img.height, patch_size, stride);
  grid.cols = window_count(img.width, patch_size, stride);
  grid.patches.resize(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (std::size_t k = 0; k < grid.patches.size(); ++k) {
    copy_window(img, grid.window_y(k), grid.window_x(k), patch_size, grid.patches[k]);
  }
  return grid;
}

std::size_t uncovered_pixels(int height, int width, int patch_size, int stride) {
  const auto covered_h = static_cast<std::size_t>((window_count(height, patch_size, stride) - 1) *
                                                      stride + patch_size);
  const auto covered_w = static_cast<std::size_t>((window_count(width, patch_size, stride) - 1) *
                                                      stride + patch_size);
  return static_cast<std::size_t>(height) * width - covered_h * covered_w;
}

std::vector<int> coverage_counts(int height, int width, int patch_size, int stride) {
  check_geometry(height, width, patch_size, stride);
  std::vector<int> counts(static_cast<std::size_t>(height) * width, 0);
  const int rows = window_count(height, patch_size, stride);
  const int cols = window_count(width, patch_size, stride);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int dy = 0; dy < patch_size; ++dy) {
        int* row = counts.data() + static_cast<std::size_t>(r * stride + dy) * width + c * stride;
        for (int dx = 0; dx < patch_size; ++dx) ++row[dx];
      }
    }
  }
  return counts;
}

ImageTensor merge_patches(const PatchGrid& grid, int height, int width,
                          const ImageTensor* fallback) {
  check_geometry(height, width, grid.patch_size, grid.stride);
  if (grid.rows != window_count(height, grid.patch_size, grid.stride) ||
      grid.cols != window_count(width, grid.patch_size, grid.stride) ||
      grid.patches.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
    throw DimensionError("patch grid " + std::to_string(grid.rows) + "x" +
                         std::to_string(grid.cols) + " does not fit a " + std::to_string(height) +
                         "x" + std::to_string(width) + " image");
  }
  ImageTensor out(height, width, grid.channels);
  if (fallback && !fallback->same_shape(out)) {
    throw DimensionError("fallback image shape does not match merge target");
  }
  std::vector<int> counts(static_cast<std::size_t>(height) * width, 0);
  const std::size_t row_len = static_cast<std::size_t>(grid.patch_size) * grid.channels;
  for (std::size_t k = 0; k < grid.patches.size(); ++k) {
    const Vector& patch = grid.patches[k];
    if (patch.size() != grid.patch_dim()) {
      throw DimensionError("patch " + std::to_string(k) + " has dimension " +
                           std::to_string(patch.size()) + ", expected " +
                           std::to_string(grid.patch_dim()));
    }
    const int y0 = grid.window_y(k);
    const int x0 = grid.window_x(k);
    for (int dy = 0; dy < grid.patch_size; ++dy) {
      double* dst = out.data.data() + out.index(y0 + dy, x0);
      const double* src = patch.data() + dy * row_len;
      for (std::size_t i = 0; i < row_len; ++i) dst[i] += src[i];
      int* cnt = counts.data() + static_cast<std::size_t>(y0 + dy) * width + x0;
      for (int dx = 0; dx < grid.patch_size; ++dx) ++cnt[dx];
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int n = counts[static_cast<std::size_t>(y) * width + x];
      for (int c = 0; c < grid.channels; ++c) {
        double& v = out.at(y, x, c);
        if (n > 0) {
          v /= n;
        } else {
          v = fallback ? fallback->at(y, x, c) : 0.0;
        }
      }
    }
  }
  clamp_unit(out);
  return out;
}

}  // namespace d3
