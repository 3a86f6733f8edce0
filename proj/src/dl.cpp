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
#include "d3/dl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "d3/error.hpp"
#include "d3/parallel.hpp"
#include "d3/patches.hpp"

namespace d3 {
namespace {

constexpr int kZeroRedraws = 64;

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void LearnConfig::validate() const {
  if (patch_size < 1) throw DimensionError("patch size must be >= 1");
  if (eta < 1) throw DimensionError("eta must be >= 1");
  if (kappa < 1) throw DimensionError("kappa must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DimensionError("epsilon must lie in (0, 1), got " + std::to_string(epsilon));
  }
  if (effective_max_attempts() < eta) throw DimensionError("max_attempts must be >= eta");
}

WindowSampler::WindowSampler(const SaliencyMap& weights, int patch_size) {
  weights.validate();
  if (patch_size < 1 || patch_size > std::min(weights.height, weights.width)) {
    throw DimensionError("patch size " + std::to_string(patch_size) + " does not fit a " +
                         std::to_string(weights.height) + "x" + std::to_string(weights.width) +
                         " saliency map");
  }
  rows_ = weights.height - patch_size + 1;
  cols_ = weights.width - patch_size + 1;
  // Summed-area table for window sums.
  const int w1 = weights.width + 1;
  std::vector<double> sat(static_cast<std::size_t>(weights.height + 1) * w1, 0.0);
  for (int y = 0; y < weights.height; ++y) {
    for (int x = 0; x < weights.width; ++x) {
      sat[static_cast<std::size_t>(y + 1) * w1 + x + 1] =
          weights.at(y, x) + sat[static_cast<std::size_t>(y) * w1 + x + 1] +
          sat[static_cast<std::size_t>(y + 1) * w1 + x] - sat[static_cast<std::size_t>(y) * w1 + x];
    }
  }
  cumulative_.resize(static_cast<std::size_t>(rows_) * cols_);
  double total = 0.0;
  for (int y = 0; y < rows_; ++y) {
    for (int x = 0; x < cols_; ++x) {
      auto s = [&](int yy, int xx) { return sat[static_cast<std::size_t>(yy) * w1 + xx]; };
      const double mass = s(y + patch_size, x + patch_size) - s(y, x + patch_size) -
                          s(y + patch_size, x) + s(y, x);
      total += std::max(0.0, mass);
      cumulative_[static_cast<std::size_t>(y) * cols_ + x] = total;
    }
  }
  if (!(total > 0.0)) {
    log_warning("all-zero saliency map; sampling windows uniformly");
    fallback_ = true;
    for (std::size_t i = 0; i < cumulative_.size(); ++i) cumulative_[i] = static_cast<double>(i + 1);
  }
}

std::pair<int, int> WindowSampler::draw(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, cumulative_.back());
  const double r = u(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  if (it == cumulative_.end()) --it;
  const auto k = static_cast<int>(it - cumulative_.begin());
  return {k / cols_, k % cols_};
}

double WindowSampler::probability(int y, int x) const {
  const std::size_t k = static_cast<std::size_t>(y) * cols_ + x;
  const double prev = k == 0 ? 0.0 : cumulative_[k - 1];
  return (cumulative_[k] - prev) / cumulative_.back();
}

Vector sample_patch(const ImageTensor& img, const WindowSampler& sampler, int patch_size, Rng& rng) {
  Vector patch;
  for (int attempt = 0; attempt < kZeroRedraws; ++attempt) {
    const auto [y, x] = sampler.draw(rng);
    copy_window(img, y, x, patch_size, patch);
    if (l2_norm(patch) > 0.0) return patch;
  }
  return patch;
}

Vector sample_patch(const ImageTensor& img, const SaliencyMap& weights, int patch_size, Rng& rng) {
  if (weights.height != img.height || weights.width != img.width) {
    throw DimensionError("saliency map does not match image dimensions");
  }
  return sample_patch(img, WindowSampler(weights, patch_size), patch_size, rng);
}

double admission_ratio(const Dictionary& existing, std::span<const double> candidate) {
  const double norm = l2_norm(candidate);
  if (existing.empty() || norm == 0.0) return 1.0;
  const Vector recon = mp_reconstruct(std::span(&existing, 1), candidate);
  double acc = 0.0;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const double d = candidate[i] - recon[i];
    acc += d * d;
  }
  return std::sqrt(acc) / norm;
}

bool admission_test(const Dictionary& existing, std::span<const double> candidate, double epsilon) {
  return admission_ratio(existing, candidate) > epsilon;
}

std::uint64_t corpus_hash(std::span<const ImageTensor> corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const ImageTensor& img : corpus) {
    h = fnv1a(h, static_cast<std::uint64_t>(img.height));
    h = fnv1a(h, static_cast<std::uint64_t>(img.width));
    h = fnv1a(h, static_cast<std::uint64_t>(img.channels));
    for (double v : img.data) h = fnv1a(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

LearnResult learn_dictionaries(std::span<const ImageTensor> corpus, const SaliencyProvider& saliency,
                               const LearnConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw LearningError("empty training corpus");
  const int channels = corpus.front().channels;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    corpus[i].validate();
    if (corpus[i].height < cfg.patch_size || corpus[i].width < cfg.patch_size) {
      throw DimensionError("corpus image " + std::to_string(i) + " is smaller than patch size " +
                           std::to_string(cfg.patch_size));
    }
    if (corpus[i].channels != channels) {
      throw DimensionError("corpus mixes channel counts");
    }
  }

  LearnResult result;
  DictionarySet& set = result.set;
  set.patch_size = cfg.patch_size;
  set.channels = channels;
  set.epsilon = cfg.epsilon;
  set.corpus_hash = corpus_hash(corpus);
  set.seed = cfg.seed;
  const std::size_t dim = set.atom_dim();

  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_image(0, corpus.size() - 1);
  std::vector<std::optional<WindowSampler>> samplers(corpus.size());
  const int max_attempts = cfg.effective_max_attempts();

  for (int level = 1; level <= cfg.kappa; ++level) {
    Dictionary dict(dim, level);
    LevelReport report;
    report.level = level;
    const std::span<const Dictionary> earlier(set.levels.data(), set.levels.size());
    while (report.admitted < cfg.eta) {
      if (report.attempts >= max_attempts) {
        std::ostringstream msg;
        msg << "level " << level << ": admitted " << report.admitted << " of " << cfg.eta
            << " atoms in " << report.attempts << " attempts (last rejection ratio "
            << report.last_rejection_ratio
            << "); corpus too homogeneous or epsilon too large";
        throw LearningError(msg.str());
      }
      ++report.attempts;
      const std::size_t idx = pick_image(rng);
      auto& sampler = samplers[idx];
      if (!sampler) sampler.emplace(saliency.compute(corpus[idx], idx), cfg.patch_size);
      Vector s = sample_patch(corpus[idx], *sampler, cfg.patch_size, rng);
      for (double& v : s) v -= cfg.center;
      Vector candidate = s;
      if (level > 1) {
        const Vector approx = mp_reconstruct(earlier, s);
        for (std::size_t i = 0; i < dim; ++i) candidate[i] -= approx[i];
      }
      if (!(l2_norm(candidate) > 1e-12)) {
        ++report.zero_skipped;
        continue;
      }
      const double ratio = admission_ratio(dict, candidate);
      if (ratio > cfg.epsilon) {
        dict.append_normalized(candidate);
        ++report.admitted;
        if (cfg.record_sources) report.sources.push_back(std::move(s));
      } else {
        ++report.rejected;
        report.last_rejection_ratio = ratio;
      }
    }
    log_info("level " + std::to_string(level) + ": " + std::to_string(report.admitted) +
             " admitted, " + std::to_string(report.rejected) + " rejected");
    set.levels.push_back(std::move(dict));
    result.levels.push_back(std::move(report));
  }
  return result;
}

}  // namespace d3
