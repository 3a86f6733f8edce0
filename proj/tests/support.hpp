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

// Shared fixtures and independent reference implementations for the tests.
// The references are deliberately naive: plain loops, no shared helpers with
// the library beyond the data types.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "d3/dictionary.hpp"
#include "d3/image.hpp"
#include "d3/mp.hpp"

namespace d3::test {

inline ImageTensor random_image(int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor img(h, w, c);
  for (double& v : img.data) v = u(rng);
  return img;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (double& x : v) x = g(rng);
  return v;
}

/// eta random unit atoms of dimension dim.
inline Dictionary random_dictionary(std::size_t dim, std::size_t eta, int level, std::mt19937_64& rng) {
  Dictionary d(dim, level);
  for (std::size_t k = 0; k < eta; ++k) d.append_normalized(random_vector(dim, rng));
  return d;
}

/// Standard basis of R^dim.
inline Dictionary identity_dictionary(std::size_t dim, int level) {
  Dictionary d(dim, level);
  for (std::size_t k = 0; k < dim; ++k) {
    Vector e(dim, 0.0);
    e[k] = 1.0;
    d.append_normalized(e);
  }
  return d;
}

inline DictionarySet make_set(int patch, int channels, std::vector<Dictionary> levels) {
  DictionarySet s;
  s.patch_size = patch;
  s.channels = channels;
  s.levels = std::move(levels);
  return s;
}

/// A set whose every level is the standard basis: with kappa = P*P*C levels
/// any patch is reconstructed exactly.
inline DictionarySet identity_set(int patch, int channels, int kappa) {
  const std::size_t dim = static_cast<std::size_t>(patch) * patch * channels;
  std::vector<Dictionary> levels;
  for (int l = 1; l <= kappa; ++l) levels.push_back(identity_dictionary(dim, l));
  return make_set(patch, channels, std::move(levels));
}

// --- reference implementations -------------------------------------------

inline double naive_dot(const Dictionary& d, std::size_t k, const Vector& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * static_cast<double>(d.raw()[k * d.atom_dim() + i]);
  return acc;
}

/// Exhaustive argmax |<v, s_k>| scanning every atom; strict comparison keeps
/// the lowest index on ties.
inline std::pair<std::size_t, double> naive_select(const Dictionary& d, const Vector& v) {
  std::size_t best = 0;
  double best_a = naive_dot(d, 0, v);
  for (std::size_t k = 1; k < d.size(); ++k) {
    const double a = naive_dot(d, k, v);
    if (std::abs(a) > std::abs(best_a)) {
      best = k;
      best_a = a;
    }
  }
  return {best, best_a};
}

struct NaiveStep {
  std::size_t index;
  double coefficient;
};

/// Level-indexed matching pursuit written out directly.
inline std::vector<NaiveStep> naive_mp(const DictionarySet& set, Vector residual, int kappa) {
  std::vector<NaiveStep> steps;
  for (int l = 0; l < kappa; ++l) {
    const Dictionary& d = set.levels[static_cast<std::size_t>(l)];
    double norm2 = 0.0;
    for (double v : residual) norm2 += v * v;
    if (norm2 == 0.0) {
      steps.push_back({0, 0.0});
      continue;
    }
    const auto [k, a] = naive_select(d, residual);
    for (std::size_t i = 0; i < residual.size(); ++i) {
      residual[i] -= a * static_cast<double>(d.raw()[k * d.atom_dim() + i]);
    }
    steps.push_back({k, a});
  }
  return steps;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("d3_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace d3::test
