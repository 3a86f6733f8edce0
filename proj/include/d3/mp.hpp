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
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "d3/dictionary.hpp"
#include "d3/patches.hpp"

namespace d3 {

using Rng = std::mt19937_64;

struct Deterministic {};

/// Test-time randomization: per level, restrict selection to a uniformly
/// drawn ceil(eta * subsample_fraction) subset of atoms, then pick uniformly
/// among the top_k most correlated atoms of that subset.
struct Randomized {
  double subsample_fraction = 0.2;
  int top_k = 2;
  std::uint64_t seed = 0;
};

using SelectionMode = std::variant<Deterministic, Randomized>;

inline bool is_randomized(const SelectionMode& m) { return std::holds_alternative<Randomized>(m); }
void validate(const SelectionMode& mode);

struct DenoiseConfig {
  /// Levels used at inference; 0 means every level of the set.
  int kappa = 0;
  SelectionMode mode = Deterministic{};
  /// 0 selects the default max(1, P/4).
  int stride = 0;
  double mr_delta = 0.03;
  /// Patches are coded as signed intensities x - center.
  double center = 0.5;

  int effective_kappa(const DictionarySet& set) const { return kappa == 0 ? set.kappa() : kappa; }
  int effective_stride(const DictionarySet& set) const {
    return stride > 0 ? stride : default_stride(set.patch_size);
  }
  void validate(const DictionarySet& set) const;
};

struct AtomChoice {
  std::size_t index = 0;
  double coefficient = 0.0;
};

/// Deterministic: argmax_k |<residual, s_k>| with the lowest index winning
/// exact ties. Randomized: see Randomized.
AtomChoice select_atom(const Dictionary& dict, std::span<const double> residual,
                       const SelectionMode& mode, Rng& rng);

struct TraceEntry {
  int level = 0;  // 1-based sparsity level
  std::size_t atom = 0;
  double coefficient = 0.0;
  double residual_norm = 0.0;  // after subtracting this level's atom
};

struct PatchCode {
  Vector reconstruction;
  std::vector<TraceEntry> trace;
};

/// Level-indexed matching pursuit: level i selects one atom of S_i against the
/// running residual. A zero residual emits (level, 0, 0) so the trace always
/// holds kappa entries.
PatchCode mp_denoise_patch(const DictionarySet& set, std::span<const double> patch,
                           const DenoiseConfig& cfg, Rng& rng);

/// Same as mp_denoise_patch for an explicit list of levels, deterministic
/// selection. Used by dictionary learning on partial sets.
Vector mp_reconstruct(std::span<const Dictionary> levels, std::span<const double> patch);

/// Per-patch RNG stream: seed XOR patch index.
inline Rng patch_rng(std::uint64_t seed, std::size_t patch_index) {
  return Rng(seed ^ static_cast<std::uint64_t>(patch_index));
}

/// Denoises every patch of `grid` (raw intensities) and returns the
/// reconstructed patches, again in raw intensities.
PatchGrid denoise_grid(const DictionarySet& set, const PatchGrid& grid, const DenoiseConfig& cfg,
                       std::uint64_t seed);

struct DenoiseResult {
  ImageTensor image;
  std::size_t uncovered_pixels = 0;
};

/// Divide, denoise, merge. Uncovered margin pixels are copied from the input.
/// `seed` drives randomized selection and is ignored in deterministic mode.
DenoiseResult denoise_image(const DictionarySet& set, const ImageTensor& img,
                            const DenoiseConfig& cfg, std::uint64_t seed = 0);

}  // namespace d3
