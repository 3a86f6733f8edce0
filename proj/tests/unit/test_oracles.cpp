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
// Library results against the plain-loop references in support.hpp and a
// from-scratch pipeline written below.

#include <algorithm>
#include <map>

#include "d3/dl.hpp"
#include "d3/metrics.hpp"
#include "d3/mp.hpp"
#include "d3/patches.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace d3;

namespace {

Vector naive_reconstruct(const DictionarySet& set, const Vector& v, int kappa) {
  Vector q(v.size(), 0.0);
  const auto steps = test::naive_mp(set, v, kappa);
  for (std::size_t l = 0; l < steps.size(); ++l) {
    const auto& step = steps[l];
    const Dictionary& d = set.levels[l];
    for (std::size_t i = 0; i < v.size(); ++i) {
      q[i] += step.coefficient * static_cast<double>(d.raw()[step.index * d.atom_dim() + i]);
    }
  }
  return q;
}

// Divide, code each centered window, average overlaps, clamp, copy margins.
ImageTensor naive_defense(const DictionarySet& set, const ImageTensor& img, int stride, double center) {
  const int p = set.patch_size, c = img.channels;
  std::vector<double> sum(img.size(), 0.0), cnt(img.size(), 0.0);
  for (int y = 0; y + p <= img.height; y += stride) {
    for (int x = 0; x + p <= img.width; x += stride) {
      Vector v;
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          for (int ch = 0; ch < c; ++ch) v.push_back(img.at(y + dy, x + dx, ch) - center);
        }
      }
      const Vector q = naive_reconstruct(set, v, set.kappa());
      std::size_t k = 0;
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t idx = (static_cast<std::size_t>(y + dy) * img.width + (x + dx)) * c + ch;
            sum[idx] += q[k++] + center;
            cnt[idx] += 1.0;
          }
        }
      }
    }
  }
  ImageTensor out = img;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (cnt[i] > 0) out.data[i] = std::clamp(sum[i] / cnt[i], 0.0, 1.0);
  }
  return out;
}

DictionarySet random_set(int patch, int channels, int kappa, std::size_t eta, std::mt19937_64& g) {
  std::vector<Dictionary> levels;
  const auto dim = static_cast<std::size_t>(patch * patch * channels);
  for (int l = 1; l <= kappa; ++l) levels.push_back(test::random_dictionary(dim, eta, l, g));
  return test::make_set(patch, channels, std::move(levels));
}

}  // namespace

TEST_SUITE("oracles") {
  TEST_CASE("correlate matches the naive dot product") {
    std::mt19937_64 g(1);
    const Dictionary d = test::random_dictionary(48, 70, 1, g);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector v = test::random_vector(48, g);
      const Vector a = correlate(d, v);
      REQUIRE(a.size() == 70);
      for (std::size_t k = 0; k < 70; ++k) REQUIRE(a[k] == doctest::Approx(test::naive_dot(d, k, v)).scale(1e-12));
    }
  }

  TEST_CASE("matching pursuit agrees with brute force on 1000 instances") {
    std::mt19937_64 g(2);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int kappa = 1 + static_cast<int>(g() % 4);
      const std::size_t eta = 1 + g() % 20;
      const DictionarySet set = random_set(3, 1, kappa, eta, g);
      const Vector v = test::random_vector(9, g);
      Rng rng(0);
      const PatchCode code = mp_denoise_patch(set, v, DenoiseConfig{}, rng);
      const auto ref = test::naive_mp(set, v, kappa);
      REQUIRE(code.trace.size() == ref.size());
      for (std::size_t l = 0; l < ref.size(); ++l) {
        if (code.trace[l].atom != ref[l].index ||
            std::abs(code.trace[l].coefficient - ref[l].coefficient) > 1e-9) {
          ++mismatches;
        }
      }
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("a replayed trace reproduces every residual norm") {
    std::mt19937_64 g(3);
    const DictionarySet set = random_set(4, 2, 5, 30, g);
    DenoiseConfig cfg;
    cfg.mode = Randomized{0.5, 2, 0};
    for (int trial = 0; trial < 100; ++trial) {
      const Vector v = test::random_vector(32, g);
      Rng rng(g());
      const PatchCode code = mp_denoise_patch(set, v, cfg, rng);
      Vector residual = v;
      for (const TraceEntry& t : code.trace) {
        const Dictionary& d = set.levels[static_cast<std::size_t>(t.level - 1)];
        // The recorded coefficient is the correlation with the running residual.
        REQUIRE(t.coefficient == doctest::Approx(test::naive_dot(d, t.atom, residual)).scale(1e-12));
        for (std::size_t i = 0; i < residual.size(); ++i) {
          residual[i] -= t.coefficient * static_cast<double>(d.raw()[t.atom * d.atom_dim() + i]);
        }
        REQUIRE(l2_norm(residual) == doctest::Approx(t.residual_norm).scale(1e-12));
      }
    }
  }

  TEST_CASE("the full defense matches a from-scratch pipeline") {
    std::mt19937_64 g(4);
    for (int trial = 0; trial < 12; ++trial) {
      const int p = 2 + static_cast<int>(g() % 4);
      const int c = g() % 2 == 0 ? 1 : 3;
      const int stride = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(p));
      const DictionarySet set = random_set(p, c, 3, 25, g);
      const ImageTensor img = test::random_image(p + 7, p + 9, c, g());
      DenoiseConfig cfg;
      cfg.stride = stride;
      const ImageTensor lib = denoise_image(set, img, cfg).image;
      const ImageTensor ref = naive_defense(set, img, stride, 0.5);
      CAPTURE(trial);
      CHECK(test::max_abs_diff(lib.data, ref.data) <= 1e-9);
    }
  }

  TEST_CASE("reconstruction error and matching rate match their definitions") {
    std::mt19937_64 g(5);
    const DictionarySet set = random_set(4, 1, 2, 40, g);
    std::vector<ImageTensor> imgs;
    std::vector<ImagePair> pairs;
    for (int i = 0; i < 4; ++i) {
      imgs.push_back(test::random_image(12, 12, 1, g()));
      ImageTensor noisy = imgs.back();
      for (double& v : noisy.data) v = std::clamp(v + 0.02 * std::normal_distribution<double>()(g), 0.0, 1.0);
      pairs.push_back({imgs.back(), noisy});
    }
    const int stride = default_stride(4);
    double re = 0.0;
    for (const auto& x : imgs) {
      const ImageTensor t = naive_defense(set, x, stride, 0.5);
      Vector diff(x.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x.data[i] - t.data[i];
      re += l2_norm(diff) / l2_norm(x.data);
    }
    CHECK(reconstruction_error(set, DenoiseConfig{}, imgs) == doctest::Approx(re / 4).epsilon(1e-9));

    for (const double delta : {0.01, 0.03, 0.1}) {
      double mr = 0.0;
      for (const auto& pr : pairs) {
        int match = 0, total = 0;
        for (int y = 0; y + 4 <= 12; y += stride) {
          for (int x = 0; x + 4 <= 12; x += stride) {
            Vector a, b;
            for (int dy = 0; dy < 4; ++dy) {
              for (int dx = 0; dx < 4; ++dx) {
                a.push_back(pr.clean.at(y + dy, x + dx) - 0.5);
                b.push_back(pr.perturbed.at(y + dy, x + dx) - 0.5);
              }
            }
            const double d = test::max_abs_diff(naive_reconstruct(set, a, 2), naive_reconstruct(set, b, 2));
            match += d <= delta;
            ++total;
          }
        }
        mr += static_cast<double>(match) / total;
      }
      CAPTURE(delta);
      CHECK(matching_rate(set, DenoiseConfig{}, pairs, delta) == doctest::Approx(mr / 4).epsilon(1e-12));
    }
  }

  TEST_CASE("admission ratio matches its geometric definition") {
    std::mt19937_64 g(6);
    for (int trial = 0; trial < 200; ++trial) {
      const Dictionary d = test::random_dictionary(9, 1 + g() % 10, 1, g);
      const Vector v = test::random_vector(9, g);
      const auto [k, a] = test::naive_select(d, v);
      Vector r = v;
      for (std::size_t i = 0; i < 9; ++i) r[i] -= a * static_cast<double>(d.raw()[k * 9 + i]);
      REQUIRE(admission_ratio(d, v) == doctest::Approx(l2_norm(r) / l2_norm(v)).scale(1e-12));
    }
  }

  TEST_CASE("window sampler probabilities are normalized window sums") {
    std::mt19937_64 g(7);
    SaliencyMap m{7, 9, {}};
    for (int i = 0; i < 63; ++i) m.weights.push_back(std::uniform_real_distribution<double>(0, 1)(g));
    const int p = 3;
    const WindowSampler s(m, p);
    std::vector<double> sums;
    double total = 0.0;
    for (int y = 0; y + p <= 7; ++y) {
      for (int x = 0; x + p <= 9; ++x) {
        double w = 0.0;
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) w += m.at(y + dy, x + dx);
        }
        sums.push_back(w);
        total += w;
      }
    }
    std::size_t k = 0;
    for (int y = 0; y + p <= 7; ++y) {
      for (int x = 0; x + p <= 9; ++x) CHECK(s.probability(y, x) == doctest::Approx(sums[k++] / total));
    }
  }
}
