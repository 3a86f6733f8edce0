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
#include <filesystem>
#include <string>
#include <vector>

#include "d3/image.hpp"

namespace d3 {

/// Non-negative per-pixel importance weights H(x).
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> weights;

  double at(int y, int x) const { return weights[static_cast<std::size_t>(y) * width + x]; }
  /// Throws DimensionError for negative or non-finite entries.
  void validate() const;
};

SaliencyMap uniform_saliency(const ImageTensor& img);

/// Per-pixel l2 norm (across channels) of the spatial gradient; central
/// differences inside, one-sided differences on the border.
SaliencyMap gradient_magnitude_saliency(const ImageTensor& img);

void save_saliency(const SaliencyMap& map, const std::filesystem::path& path);
SaliencyMap load_saliency_file(const std::filesystem::path& path);
/// Loads dir/<image_id>.d3sal and checks it against the image shape.
SaliencyMap load_saliency(const std::filesystem::path& dir, const std::string& image_id,
                          int height, int width);

class SaliencyProvider {
 public:
  virtual ~SaliencyProvider() = default;
  /// `index` identifies the image within the corpus being sampled.
  virtual SaliencyMap compute(const ImageTensor& img, std::size_t index) const = 0;
  virtual std::string name() const = 0;
};

class UniformSaliency final : public SaliencyProvider {
 public:
  SaliencyMap compute(const ImageTensor& img, std::size_t) const override {
    return uniform_saliency(img);
  }
  std::string name() const override { return "uniform"; }
};

class GradientMagnitudeSaliency final : public SaliencyProvider {
 public:
  SaliencyMap compute(const ImageTensor& img, std::size_t) const override {
    return gradient_magnitude_saliency(img);
  }
  std::string name() const override { return "gradmag"; }
};

/// Reads externally produced maps, e.g. classifier-gradient norms.
class DirectorySaliency final : public SaliencyProvider {
 public:
  DirectorySaliency(std::filesystem::path dir, std::vector<std::string> image_ids)
      : dir_(std::move(dir)), ids_(std::move(image_ids)) {}
  SaliencyMap compute(const ImageTensor& img, std::size_t index) const override;
  std::string name() const override { return "dir:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> ids_;
};

}  // namespace d3
