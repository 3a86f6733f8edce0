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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "d3/attack.hpp"
#include "d3/image.hpp"

// Desk-scale data: seeded crops from a handful of natural photographs, synthetic
// dead-leaves images (occluding shapes with power-law sizes, a standard
// stand-in for natural image statistics) and a small labeled classification
// task built from them.
namespace d3::desk {

struct LeavesConfig {
  int size = 32;
  int channels = 1;
  int shapes = 60;
  double min_radius = 1.5;
  double max_radius = 0.0;  // 0 selects size / 2
  double noise = 0.01;
};

ImageTensor dead_leaves(const LeavesConfig& cfg, Rng& rng);

std::vector<ImageTensor> corpus(std::size_t n, const LeavesConfig& cfg, std::uint64_t seed);

/// Sign-pattern noise with ||v|| = budget * ||x||, the shape of an FGSM step.
ImageTensor perturb_sign(const ImageTensor& x, double budget, Rng& rng);

/// Which rows of each source image a crop may come from. Train crops use the
/// top 5/8 of every source, eval crops the rest, so the two never overlap.
enum class Split { kTrain, kEval };

/// Loads every image in dir (sorted by name) as a single-channel tensor.
std::vector<ImageTensor> load_sources(const std::filesystem::path& dir);

/// n square crops of side size, drawn uniformly over sources and positions.
std::vector<ImageTensor> crops(std::span<const ImageTensor> sources, std::size_t n, int size,
                               Split split, std::uint64_t seed);

// Defaults give a task a toy MLP learns perfectly but that a 0.06 FGSM step
// still breaks: close prototypes, little pixel noise, many input dimensions.
struct TaskConfig {
  int classes = 10;
  int size = 48;
  int channels = 1;
  /// Per-class prototypes are dead-leaves images; samples add a random
  /// translation of up to max_shift pixels, a contrast jitter and pixel noise.
  int max_shift = 2;
  double contrast_jitter = 0.15;
  double noise = 0.005;
  /// Prototypes blend a shared base image with a class-specific one:
  /// (1 - separation) * base + separation * own.
  double separation = 0.3;
};

struct Task {
  std::vector<ImageTensor> prototypes;
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
};

Task make_task(const TaskConfig& cfg, std::size_t train_per_class, std::size_t test_per_class,
               std::uint64_t seed);

/// Gaussian-blob images: class c places a bright blob of width sigma near a
/// class-specific anchor on a dark background, plus pixel noise. With
/// separated anchors the classes are linearly separable.
std::vector<LabeledImage> blobs(int classes, std::size_t per_class, int size, double sigma,
                                double noise, std::uint64_t seed);

}  // namespace d3::desk
