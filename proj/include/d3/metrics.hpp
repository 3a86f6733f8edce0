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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "d3/dl.hpp"
#include "d3/mp.hpp"

namespace d3 {

struct ImagePair {
  ImageTensor clean;
  ImageTensor perturbed;
};

struct MetricsReport {
  double mr = 0.0;
  double re = 0.0;
  std::size_t n_images = 0;
  std::size_t n_patches_per_image = 0;
  double delta = 0.0;
  std::string fingerprint;
};

/// Mean over pairs of the fraction of patches whose deterministic patch
/// transforms agree within delta in the l-infinity norm. With
/// `use_configured_mode` the configured (possibly randomized) selection is
/// used instead, seeded identically for both images of a pair.
double matching_rate(const DictionarySet& set, const DenoiseConfig& cfg,
                     std::span<const ImagePair> pairs, double delta,
                     bool use_configured_mode = false);

/// Mean of ||x - T(x)|| / ||x|| under the deterministic full pipeline.
/// Zero-norm images are skipped with a warning.
double reconstruction_error(const DictionarySet& set, const DenoiseConfig& cfg,
                            std::span<const ImageTensor> images);

MetricsReport evaluate_metrics(const DictionarySet& set, const DenoiseConfig& cfg,
                               std::span<const ImageTensor> images,
                               std::span<const ImagePair> pairs);

std::string config_fingerprint(const DictionarySet& set, const DenoiseConfig& cfg);

enum class SweepAxis { kKappa, kPatchSize, kEpsilon };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepSetup {
  std::span<const ImageTensor> corpus;
  const SaliencyProvider* saliency = nullptr;
  LearnConfig learn;
  DenoiseConfig denoise;
  std::span<const ImageTensor> images;
  std::span<const ImagePair> pairs;
  /// Reused by the kappa axis when present; otherwise a set is learned with
  /// kappa = max(values).
  const DictionarySet* prebuilt = nullptr;
};

struct SweepPoint {
  double value = 0.0;
  std::optional<MetricsReport> report;
  std::string error;
};

/// One report per value. Build failures are recorded per point and the
/// sweep continues.
std::vector<SweepPoint> metric_sweep(const SweepSetup& setup, SweepAxis axis,
                                     std::span<const double> values);

std::string sweep_csv(SweepAxis axis, std::span<const SweepPoint> points);

}  // namespace d3
