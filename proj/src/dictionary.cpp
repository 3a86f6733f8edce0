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
#include "d3/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "d3/binio.hpp"
#include "d3/error.hpp"

namespace d3 {
namespace {

constexpr std::string_view kMagic = "D3DICT01";
constexpr std::string_view kMagicFamily = "D3DICT";

double atom_norm(std::span<const float> atom) {
  double acc = 0.0;
  for (float v : atom) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

}  // namespace

Dictionary::Dictionary(std::size_t atom_dim, int level, std::vector<float> atoms)
    : atom_dim_(atom_dim), level_(level), atoms_(std::move(atoms)) {
  if (atom_dim_ == 0 || atoms_.size() % atom_dim_ != 0) {
    throw DimensionError("atom storage of " + std::to_string(atoms_.size()) +
                         " values is not a multiple of atom dimension " +
                         std::to_string(atom_dim_));
  }
}

void Dictionary::append_normalized(std::span<const double> v) {
  if (v.size() != atom_dim_) {
    throw DimensionError("atom of dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(atom_dim_));
  }
  const double norm = l2_norm(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DimensionError("cannot normalize a zero or non-finite atom");
  }
  for (double x : v) atoms_.push_back(static_cast<float>(x / norm));
}

std::optional<std::size_t> Dictionary::first_non_unit(double tol) const {
  for (std::size_t k = 0; k < size(); ++k) {
    const double n = atom_norm(atom(k));
    if (!(std::abs(n - 1.0) <= tol)) return k;
  }
  return std::nullopt;
}

void correlate_into(const Dictionary& dict, std::span<const double> v, std::span<double> out) {
  if (v.size() != dict.atom_dim()) {
    throw DimensionError("vector of dimension " + std::to_string(v.size()) +
                         " correlated with atoms of dimension " + std::to_string(dict.atom_dim()));
  }
  if (out.size() != dict.size()) throw DimensionError("correlation buffer has the wrong size");
  const float* base = dict.raw().data();
  const std::size_t dim = dict.atom_dim();
  const std::size_t n = dict.size();
  std::size_t k = 0;
  // Each sum still runs left to right; interleaving atoms only hides latency.
  for (; k + 4 <= n; k += 4) {
    const float* s0 = base + k * dim;
    const float* s1 = s0 + dim;
    const float* s2 = s1 + dim;
    const float* s3 = s2 + dim;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double x = v[i];
      a0 += x * s0[i];
      a1 += x * s1[i];
      a2 += x * s2[i];
      a3 += x * s3[i];
    }
    out[k] = a0;
    out[k + 1] = a1;
    out[k + 2] = a2;
    out[k + 3] = a3;
  }
  for (; k < n; ++k) out[k] = dot_atom(v.data(), base + k * dim, dim);
}

Vector correlate(const Dictionary& dict, std::span<const double> v) {
  Vector a(dict.size());
  correlate_into(dict, v, a);
  return a;
}

void axpy_atom(const Dictionary& dict, std::size_t k, double coefficient, std::span<double> out) {
  const auto s = dict.atom(k);
  for (std::size_t i = 0; i < s.size(); ++i) out[i] += coefficient * s[i];
}

void DictionarySet::validate() const {
  if (patch_size < 1 || (channels != 1 && channels != 3)) {
    throw FormatError("invalid dictionary geometry P=" + std::to_string(patch_size) +
                      " C=" + std::to_string(channels));
  }
  if (levels.empty()) throw FormatError("dictionary set has no levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const Dictionary& d = levels[i];
    const int level = static_cast<int>(i) + 1;
    if (d.level() != level) {
      throw FormatError("level " + std::to_string(level) + " carries index " +
                        std::to_string(d.level()));
    }
    if (d.atom_dim() != atom_dim()) {
      throw FormatError("level " + std::to_string(level) + " has atom dimension " +
                        std::to_string(d.atom_dim()) + ", expected " + std::to_string(atom_dim()));
    }
    if (d.empty()) throw FormatError("level " + std::to_string(level) + " has no atoms");
    if (auto bad = d.first_non_unit()) {
      throw FormatError("atom " + std::to_string(*bad) + " of level " + std::to_string(level) +
                        " not unit-norm");
    }
  }
}

bool DictionarySet::same_content(const DictionarySet& other) const {
  return patch_size == other.patch_size && channels == other.channels &&
         levels == other.levels && corpus_hash == other.corpus_hash && seed == other.seed;
}

std::vector<std::uint8_t> serialize(const DictionarySet& set) {
  set.validate();
  binio::Writer w;
  w.magic(kMagic);
  w.u32(static_cast<std::uint32_t>(set.patch_size));
  w.u32(static_cast<std::uint32_t>(set.channels));
  w.u32(static_cast<std::uint32_t>(set.kappa()));
  for (const Dictionary& d : set.levels) {
    w.u32(static_cast<std::uint32_t>(d.size()));
    for (float v : d.raw()) w.f32(v);
  }
  w.u64(set.corpus_hash);
  w.u64(set.seed);
  return w.bytes();
}

DictionarySet deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw FormatError("dictionary file is empty");
  binio::Reader r(bytes, "dictionary");
  const std::string magic = r.magic(kMagic.size());
  if (magic != kMagic) {
    if (magic.starts_with(kMagicFamily)) {
      throw FormatError("unsupported dictionary version '" + magic.substr(kMagicFamily.size()) +
                        "'");
    }
    throw FormatError("bad dictionary magic");
  }
  DictionarySet set;
  set.patch_size = static_cast<int>(r.u32());
  set.channels = static_cast<int>(r.u32());
  const std::uint32_t kappa = r.u32();
  if (set.patch_size < 1 || set.patch_size > 4096 || (set.channels != 1 && set.channels != 3) ||
      kappa == 0 || kappa > 1024) {
    throw FormatError("implausible dictionary header P=" + std::to_string(set.patch_size) +
                      " C=" + std::to_string(set.channels) + " kappa=" + std::to_string(kappa));
  }
  const std::size_t dim = set.atom_dim();
  for (std::uint32_t i = 0; i < kappa; ++i) {
    const std::uint32_t eta = r.u32();
    if (static_cast<std::size_t>(eta) * dim * 4 > r.remaining()) {
      throw FormatError("dictionary: truncated payload in level " + std::to_string(i + 1));
    }
    std::vector<float> atoms(static_cast<std::size_t>(eta) * dim);
    for (float& v : atoms) v = r.f32();
    set.levels.emplace_back(dim, static_cast<int>(i) + 1, std::move(atoms));
  }
  set.corpus_hash = r.u64();
  set.seed = r.u64();
  r.expect_end();
  set.validate();
  return set;
}

void save(const DictionarySet& set, const std::filesystem::path& path) {
  binio::write_file(path, serialize(set));
}

DictionarySet load(const std::filesystem::path& path) { return deserialize(binio::read_file(path)); }

std::vector<LevelStats> level_stats(const DictionarySet& set) {
  std::vector<LevelStats> out;
  for (const Dictionary& d : set.levels) {
    LevelStats st;
    st.level = d.level();
    st.atoms = d.size();
    st.min_norm = std::numeric_limits<double>::infinity();
    st.max_norm = 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double n = atom_norm(d.atom(k));
      st.min_norm = std::min(st.min_norm, n);
      st.max_norm = std::max(st.max_norm, n);
      sum += n;
      Vector ak(d.atom(k).begin(), d.atom(k).end());
      const Vector a = correlate(d, ak);
      for (std::size_t j = k + 1; j < a.size(); ++j) {
        st.max_coherence = std::max(st.max_coherence, std::abs(a[j]));
      }
    }
    st.mean_norm = d.empty() ? 0.0 : sum / static_cast<double>(d.size());
    if (d.empty()) st.min_norm = 0.0;
    out.push_back(st);
  }
  return out;
}

}  // namespace d3
