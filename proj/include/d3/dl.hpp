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
#include <span>
#include <vector>

#include "d3/dictionary.hpp"
#include "d3/mp.hpp"
#include "d3/saliency.hpp"

namespace d3 {

struct LearnConfig {
  int patch_size = 8;
  int eta = 256;
  int kappa = 2;
  double epsilon = 0.85;
  /// Candidate draws allowed per level; 0 selects 200 * eta.
  int max_attempts = 0;
  std::uint64_t seed = 0;
  double center = 0.5;
  /// Keep the source patch of every admitted atom in the report.
  bool record_sources = false;

  int effective_max_attempts() const { return max_attempts > 0 ? max_attempts : 200 * eta; }
  void validate() const;
};

struct LevelReport {
  int level = 0;
  int admitted = 0;
  int rejected = 0;
  int zero_skipped = 0;
  int attempts = 0;
  double last_rejection_ratio = 0.0;
  /// Centered source patch s of each admitted atom (record_sources only). For
  /// level 1 the atom is s/||s||; for deeper levels it is the normalized
  /// residual of s against the earlier levels.
  std::vector<Vector> sources;
};

struct LearnResult {
  DictionarySet set;
  std::vector<LevelReport> levels;
};

/// Stride-1 window distribution proportional to the summed saliency inside
/// each window. An all-zero map degrades to the uniform law with a warning.
class WindowSampler {
 public:
  WindowSampler(const SaliencyMap& weights, int patch_size);

  /// Top-left (y, x) of a drawn window.
  std::pair<int, int> draw(Rng& rng) const;
  double probability(int y, int x) const;
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  bool uniform_fallback() const noexcept { return fallback_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  bool fallback_ = false;
  std::vector<double> cumulative_;
};

/// Draws one window according to the saliency weights. Zero-norm patches are
/// redrawn a bounded number of times; if every redraw is zero the zero patch
/// is returned and the caller skips it.
Vector sample_patch(const ImageTensor& img, const SaliencyMap& weights, int patch_size, Rng& rng);
Vector sample_patch(const ImageTensor& img, const WindowSampler& sampler, int patch_size, Rng& rng);

/// ||c - c~|| / ||c|| with c~ the one-level deterministic reconstruction of
/// the candidate from `existing`. Empty dictionary yields 1.
double admission_ratio(const Dictionary& existing, std::span<const double> candidate);

/// True iff the candidate is more than arcsin(epsilon) away from its best
/// one-atom reconstruction.
bool admission_test(const Dictionary& existing, std::span<const double> candidate, double epsilon);

/// Greedy saliency-sampled dictionary construction. Level 1 admits raw
/// (centered) patches, deeper levels admit residuals of the earlier levels.
LearnResult learn_dictionaries(std::span<const ImageTensor> corpus, const SaliencyProvider& saliency,
                               const LearnConfig& cfg);

/// FNV-1a over image shapes and pixel bits.
std::uint64_t corpus_hash(std::span<const ImageTensor> corpus);

}  // namespace d3
