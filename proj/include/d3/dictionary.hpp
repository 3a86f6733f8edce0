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
#include <optional>
#include <span>
#include <vector>

#include "d3/image.hpp"

namespace d3 {

inline constexpr double kUnitNormTolerance = 1e-5;

/// One sparsity level S_i: eta unit-norm atoms stored contiguously
/// (column-major in the P^2*C x eta matrix view).
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::size_t atom_dim, int level) : atom_dim_(atom_dim), level_(level) {}
  Dictionary(std::size_t atom_dim, int level, std::vector<float> atoms);

  std::size_t atom_dim() const noexcept { return atom_dim_; }
  int level() const noexcept { return level_; }
  void set_level(int level) noexcept { level_ = level; }
  std::size_t size() const noexcept { return atom_dim_ == 0 ? 0 : atoms_.size() / atom_dim_; }
  bool empty() const noexcept { return atoms_.empty(); }

  std::span<const float> atom(std::size_t k) const {
    return {atoms_.data() + k * atom_dim_, atom_dim_};
  }
  const std::vector<float>& raw() const noexcept { return atoms_; }

  /// Appends v / ||v||. v must be non-zero and of atom_dim length.
  void append_normalized(std::span<const double> v);

  /// Index of the first atom whose norm deviates from 1 by more than tol.
  std::optional<std::size_t> first_non_unit(double tol = kUnitNormTolerance) const;

  friend bool operator==(const Dictionary&, const Dictionary&) = default;

 private:
  std::size_t atom_dim_ = 0;
  int level_ = 1;
  std::vector<float> atoms_;
};

/// Double-precision dot product of a patch vector with a stored atom, summed
/// left to right so every caller gets bit-identical correlations.
inline double dot_atom(const double* v, const float* s, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += v[i] * s[i];
  return acc;
}

/// a_k = <v, s_k>, accumulated in double precision. Same values as dot_atom;
/// four atoms are processed together for throughput.
Vector correlate(const Dictionary& dict, std::span<const double> v);
void correlate_into(const Dictionary& dict, std::span<const double> v, std::span<double> out);

/// Adds coefficient * atom k to out.
void axpy_atom(const Dictionary& dict, std::size_t k, double coefficient, std::span<double> out);

struct DictionarySet {
  int patch_size = 0;
  int channels = 1;
  std::vector<Dictionary> levels;
  /// Admission threshold used at build time. Not part of the file format.
  std::optional<double> epsilon;
  std::uint64_t corpus_hash = 0;
  std::uint64_t seed = 0;

  int kappa() const noexcept { return static_cast<int>(levels.size()); }
  std::size_t atom_dim() const noexcept {
    return static_cast<std::size_t>(patch_size) * patch_size * channels;
  }

  /// Throws FormatError naming the first violated invariant.
  void validate() const;

  /// Persisted fields only; epsilon is not compared.
  bool same_content(const DictionarySet& other) const;
};

std::vector<std::uint8_t> serialize(const DictionarySet& set);
DictionarySet deserialize(std::span<const std::uint8_t> bytes);

void save(const DictionarySet& set, const std::filesystem::path& path);
DictionarySet load(const std::filesystem::path& path);

struct LevelStats {
  int level = 0;
  std::size_t atoms = 0;
  double min_norm = 0.0;
  double max_norm = 0.0;
  double mean_norm = 0.0;
  /// Largest |<s_a, s_b>| over distinct atom pairs; 0 for single-atom levels.
  double max_coherence = 0.0;
};

std::vector<LevelStats> level_stats(const DictionarySet& set);

}  // namespace d3
