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

#include "d3/image.hpp"

namespace d3 {

/// Overlapping square windows of an image, flattened row-major with channels
/// interleaved. Patch k sits at window (k / cols, k % cols).
struct PatchGrid {
  int patch_size = 0;
  int stride = 0;
  int channels = 1;
  int rows = 0;
  int cols = 0;
  std::vector<Vector> patches;

  std::size_t patch_dim() const noexcept {
    return static_cast<std::size_t>(patch_size) * patch_size * channels;
  }
  int window_y(std::size_t k) const noexcept { return static_cast<int>(k / cols) * stride; }
  int window_x(std::size_t k) const noexcept { return static_cast<int>(k % cols) * stride; }
};

/// stride <= 0 selects the default max(1, P/4), i.e. 75% overlap.
int default_stride(int patch_size);

/// Window count along an axis: floor((dim - P) / stride) + 1.
int window_count(int dim, int patch_size, int stride);

PatchGrid extract_patches(const ImageTensor& img, int patch_size, int stride);

/// Copies window (y, x) into out (resized to P*P*C).
void copy_window(const ImageTensor& img, int y, int x, int patch_size, Vector& out);

/// Number of pixels not covered by any window. Non-zero only when the stride
/// does not divide (dim - P).
std::size_t uncovered_pixels(int height, int width, int patch_size, int stride);

/// Averages overlapping patches back into an image clamped to [0,1]. Pixels
/// outside every window are taken from `fallback` when given, otherwise 0.
ImageTensor merge_patches(const PatchGrid& grid, int height, int width,
                          const ImageTensor* fallback = nullptr);

/// Per-pixel count of windows covering it.
std::vector<int> coverage_counts(int height, int width, int patch_size, int stride);

}  // namespace d3
