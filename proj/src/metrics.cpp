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
#include "d3/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "d3/error.hpp"
#include "d3/parallel.hpp"

namespace d3 {
namespace {

DenoiseConfig deterministic(DenoiseConfig cfg) {
  cfg.mode = Deterministic{};
  return cfg;
}

std::uint64_t mode_seed(const DenoiseConfig& cfg) {
  if (const auto* r = std::get_if<Randomized>(&cfg.mode)) return r->seed;
  return 0;
}

double linf(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

double matching_rate(const DictionarySet& set, const DenoiseConfig& cfg,
                     std::span<const ImagePair> pairs, double delta, bool use_configured_mode) {
  if (pairs.empty()) throw DimensionError("matching rate needs at least one image pair");
  const DenoiseConfig run = use_configured_mode ? cfg : deterministic(cfg);
  const int stride = run.effective_stride(set);
  std::vector<double> gamma(pairs.size(), 0.0);
  parallel_for(pairs.size(), [&](std::size_t i) {
    const ImagePair& p = pairs[i];
    if (!p.clean.same_shape(p.perturbed)) {
      throw DimensionError("pair " + std::to_string(i) + " has mismatched image shapes");
    }
    const std::uint64_t seed = mix_seed(mode_seed(run) + i);
    const PatchGrid a = denoise_grid(set, extract_patches(p.clean, set.patch_size, stride), run, seed);
    const PatchGrid b =
        denoise_grid(set, extract_patches(p.perturbed, set.patch_size, stride), run, seed);
    std::size_t matched = 0;
    for (std::size_t k = 0; k < a.patches.size(); ++k) {
      if (linf(a.patches[k], b.patches[k]) <= delta) ++matched;
    }
    gamma[i] = static_cast<double>(matched) / static_cast<double>(a.patches.size());
  });
  double sum = 0.0;
  for (double g : gamma) sum += g;
  return sum / static_cast<double>(pairs.size());
}

double reconstruction_error(const DictionarySet& set, const DenoiseConfig& cfg,
                            std::span<const ImageTensor> images) {
  if (images.empty()) throw DimensionError("reconstruction error needs at least one image");
  const DenoiseConfig run = deterministic(cfg);
  std::vector<double> ratio(images.size(), -1.0);
  parallel_for(images.size(), [&](std::size_t i) {
    const ImageTensor& x = images[i];
    const double norm = l2_norm(x.data);
    if (norm == 0.0) return;
    const ImageTensor t = denoise_image(set, x, run).image;
    double acc = 0.0;
    for (std::size_t j = 0; j < x.data.size(); ++j) {
      const double d = x.data[j] - t.data[j];
      acc += d * d;
    }
    ratio[i] = std::sqrt(acc) / norm;
  });
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < ratio.size(); ++i) {
    if (ratio[i] < 0.0) {
      log_warning("skipping zero-norm image " + std::to_string(i) + " in reconstruction error");
      continue;
    }
    sum += ratio[i];
    ++used;
  }
  if (used == 0) throw DimensionError("every image has zero norm");
  return sum / static_cast<double>(used);
}

std::string config_fingerprint(const DictionarySet& set, const DenoiseConfig& cfg) {
  std::ostringstream out;
  out << "P=" << set.patch_size << " C=" << set.channels << " stride=" << cfg.effective_stride(set)
      << " kappa=" << cfg.effective_kappa(set) << " center=" << cfg.center
      << " corpus=" << std::hex << std::setw(16) << std::setfill('0') << set.corpus_hash
      << std::dec << " seed=" << set.seed;
  if (const auto* r = std::get_if<Randomized>(&cfg.mode)) {
    out << " randomized(fraction=" << r->subsample_fraction << ",top_k=" << r->top_k
        << ",seed=" << r->seed << ")";
  } else {
    out << " deterministic";
  }
  return out.str();
}

MetricsReport evaluate_metrics(const DictionarySet& set, const DenoiseConfig& cfg,
                               std::span<const ImageTensor> images,
                               std::span<const ImagePair> pairs) {
  MetricsReport r;
  r.mr = matching_rate(set, cfg, pairs, cfg.mr_delta);
  r.re = reconstruction_error(set, cfg, images);
  r.n_images = images.size();
  const int stride = cfg.effective_stride(set);
  r.n_patches_per_image = static_cast<std::size_t>(
      window_count(images.front().height, set.patch_size, stride) *
      window_count(images.front().width, set.patch_size, stride));
  r.delta = cfg.mr_delta;
  r.fingerprint = config_fingerprint(set, cfg);
  return r;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "kappa") return SweepAxis::kKappa;
  if (name == "patch_size" || name == "patch") return SweepAxis::kPatchSize;
  if (name == "epsilon" || name == "eps") return SweepAxis::kEpsilon;
  throw DimensionError("unknown sweep axis '" + name + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kKappa:
      return "kappa";
    case SweepAxis::kPatchSize:
      return "patch_size";
    case SweepAxis::kEpsilon:
      return "epsilon";
  }
  return "unknown";
}

std::vector<SweepPoint> metric_sweep(const SweepSetup& setup, SweepAxis axis,
                                     std::span<const double> values) {
  if (!setup.saliency && !(axis == SweepAxis::kKappa && setup.prebuilt)) {
    throw DimensionError("sweep needs a saliency provider to build dictionaries");
  }
  std::vector<SweepPoint> points;
  std::optional<DictionarySet> shared;
  if (axis == SweepAxis::kKappa) {
    if (setup.prebuilt) {
      shared = *setup.prebuilt;
    } else {
      LearnConfig lc = setup.learn;
      lc.kappa = static_cast<int>(*std::max_element(values.begin(), values.end()));
      try {
        shared = learn_dictionaries(setup.corpus, *setup.saliency, lc).set;
      } catch (const Error& e) {
        for (double v : values) points.push_back({v, std::nullopt, e.what()});
        return points;
      }
    }
  }
  for (double v : values) {
    SweepPoint point{v, std::nullopt, {}};
    try {
      DenoiseConfig dc = setup.denoise;
      if (axis == SweepAxis::kKappa) {
        dc.kappa = static_cast<int>(v);
        point.report = evaluate_metrics(*shared, dc, setup.images, setup.pairs);
      } else {
        LearnConfig lc = setup.learn;
        if (axis == SweepAxis::kPatchSize) {
          lc.patch_size = static_cast<int>(v);
          dc.stride = 0;
        } else {
          lc.epsilon = v;
        }
        const DictionarySet set = learn_dictionaries(setup.corpus, *setup.saliency, lc).set;
        point.report = evaluate_metrics(set, dc, setup.images, setup.pairs);
      }
    } catch (const Error& e) {
      point.error = e.what();
      log_warning(to_string(axis) + "=" + std::to_string(v) + ": " + e.what());
    }
    points.push_back(std::move(point));
  }
  return points;
}

std::string sweep_csv(SweepAxis axis, std::span<const SweepPoint> points) {
  std::ostringstream out;
  out << to_string(axis) << ",mr,one_minus_re,re,n_images,patches_per_image,error\n";
  out << std::setprecision(8);
  for (const SweepPoint& p : points) {
    out << p.value << ',';
    if (p.report) {
      out << p.report->mr << ',' << 1.0 - p.report->re << ',' << p.report->re << ','
          << p.report->n_images << ',' << p.report->n_patches_per_image << ',';
    } else {
      out << ",,,,,";
    }
    std::string err = p.error;
    std::replace(err.begin(), err.end(), ',', ';');
    out << err << '\n';
  }
  return out.str();
}

}  // namespace d3
