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
#include "d3/mp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "d3/error.hpp"
#include "d3/parallel.hpp"

namespace d3 {
namespace {

double correlate_one(const Dictionary& dict, std::size_t k, std::span<const double> v) {
  return dot_atom(v.data(), dict.atom(k).data(), dict.atom_dim());
}

AtomChoice select_deterministic(const Dictionary& dict, std::span<const double> residual) {
  thread_local Vector corr;
  corr.resize(dict.size());
  correlate_into(dict, residual, corr);
  AtomChoice best;
  double best_abs = -1.0;
  for (std::size_t k = 0; k < dict.size(); ++k) {
    const double a = corr[k];
    if (std::abs(a) > best_abs) {
      best_abs = std::abs(a);
      best = {k, a};
    }
  }
  return best;
}

std::size_t subsample_size(std::size_t eta, double fraction) {
  const auto m = static_cast<std::size_t>(std::ceil(static_cast<double>(eta) * fraction - 1e-9));
  return std::clamp<std::size_t>(m, 1, eta);
}

AtomChoice select_randomized(const Dictionary& dict, std::span<const double> residual,
                             const Randomized& mode, Rng& rng) {
  const std::size_t eta = dict.size();
  const std::size_t m = subsample_size(eta, mode.subsample_fraction);
  std::vector<std::size_t> order(eta);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eta - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<AtomChoice> subset(m);
  for (std::size_t i = 0; i < m; ++i) subset[i] = {order[i], correlate_one(dict, order[i], residual)};
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(mode.top_k), m);
  auto stronger = [](const AtomChoice& a, const AtomChoice& b) {
    const double fa = std::abs(a.coefficient);
    const double fb = std::abs(b.coefficient);
    return fa != fb ? fa > fb : a.index < b.index;
  };
  std::partial_sort(subset.begin(), subset.begin() + static_cast<std::ptrdiff_t>(k), subset.end(),
                    stronger);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  return subset[pick(rng)];
}

void check_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError("patch of dimension " + std::to_string(got) + ", dictionary expects " +
                         std::to_string(want));
  }
}

}  // namespace

void validate(const SelectionMode& mode) {
  if (const auto* r = std::get_if<Randomized>(&mode)) {
    if (!(r->subsample_fraction > 0.0 && r->subsample_fraction <= 1.0)) {
      throw DimensionError("subsample fraction must lie in (0, 1], got " +
                           std::to_string(r->subsample_fraction));
    }
    if (r->top_k < 1) throw DimensionError("top_k must be >= 1");
  }
}

void DenoiseConfig::validate(const DictionarySet& set) const {
  if (kappa < 0 || kappa > set.kappa()) {
    throw DimensionError("sparsity " + std::to_string(kappa) + " exceeds the " +
                         std::to_string(set.kappa()) + " available levels");
  }
  if (stride < 0 || stride > set.patch_size) {
    throw DimensionError("stride " + std::to_string(stride) + " outside [1, P=" +
                         std::to_string(set.patch_size) + "]");
  }
  d3::validate(mode);
}

AtomChoice select_atom(const Dictionary& dict, std::span<const double> residual,
                       const SelectionMode& mode, Rng& rng) {
  if (dict.empty()) throw DimensionError("cannot select from an empty dictionary");
  check_dim(residual.size(), dict.atom_dim());
  if (const auto* r = std::get_if<Randomized>(&mode)) return select_randomized(dict, residual, *r, rng);
  return select_deterministic(dict, residual);
}

PatchCode mp_denoise_patch(const DictionarySet& set, std::span<const double> patch,
                           const DenoiseConfig& cfg, Rng& rng) {
  cfg.validate(set);
  check_dim(patch.size(), set.atom_dim());
  const int kappa = cfg.effective_kappa(set);
  PatchCode code;
  code.reconstruction.assign(patch.size(), 0.0);
  code.trace.reserve(static_cast<std::size_t>(kappa));
  Vector residual(patch.begin(), patch.end());
  double residual_norm = l2_norm(residual);
  for (int i = 0; i < kappa; ++i) {
    const Dictionary& dict = set.levels[static_cast<std::size_t>(i)];
    if (residual_norm == 0.0) {
      code.trace.push_back({i + 1, 0, 0.0, 0.0});
      continue;
    }
    const AtomChoice c = select_atom(dict, residual, cfg.mode, rng);
    axpy_atom(dict, c.index, c.coefficient, code.reconstruction);
    axpy_atom(dict, c.index, -c.coefficient, residual);
    residual_norm = l2_norm(residual);
    code.trace.push_back({i + 1, c.index, c.coefficient, residual_norm});
  }
  return code;
}

Vector mp_reconstruct(std::span<const Dictionary> levels, std::span<const double> patch) {
  Vector q(patch.size(), 0.0);
  Vector residual(patch.begin(), patch.end());
  for (const Dictionary& dict : levels) {
    if (dict.empty()) continue;
    check_dim(patch.size(), dict.atom_dim());
    const AtomChoice c = select_deterministic(dict, residual);
    axpy_atom(dict, c.index, c.coefficient, q);
    axpy_atom(dict, c.index, -c.coefficient, residual);
  }
  return q;
}

PatchGrid denoise_grid(const DictionarySet& set, const PatchGrid& grid, const DenoiseConfig& cfg,
                       std::uint64_t seed) {
  cfg.validate(set);
  if (grid.patch_size != set.patch_size || grid.channels != set.channels) {
    throw DimensionError("patch grid P=" + std::to_string(grid.patch_size) + " C=" +
                         std::to_string(grid.channels) + " does not match dictionary P=" +
                         std::to_string(set.patch_size) + " C=" + std::to_string(set.channels));
  }
  PatchGrid out = grid;
  parallel_for(grid.patches.size(), [&](std::size_t k) {
    Vector centered = grid.patches[k];
    for (double& v : centered) v -= cfg.center;
    Rng rng = patch_rng(seed, k);
    Vector q = mp_denoise_patch(set, centered, cfg, rng).reconstruction;
    for (double& v : q) v += cfg.center;
    out.patches[k] = std::move(q);
  });
  return out;
}

DenoiseResult denoise_image(const DictionarySet& set, const ImageTensor& img,
                            const DenoiseConfig& cfg, std::uint64_t seed) {
  if (img.channels != set.channels) {
    throw DimensionError("image has " + std::to_string(img.channels) +
                         " channels, dictionary expects " + std::to_string(set.channels));
  }
  const int stride = cfg.effective_stride(set);
  const PatchGrid grid = extract_patches(img, set.patch_size, stride);
  const PatchGrid coded = denoise_grid(set, grid, cfg, seed);
  DenoiseResult r;
  r.image = merge_patches(coded, img.height, img.width, &img);
  r.uncovered_pixels = uncovered_pixels(img.height, img.width, set.patch_size, stride);
  return r;
}

}  // namespace d3
