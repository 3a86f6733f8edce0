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
#include <map>

#include "d3/error.hpp"
#include "d3/parallel.hpp"
#include "d3/mp.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace d3;

TEST_SUITE("mp") {
  TEST_CASE("a scaled atom is recovered exactly at kappa=1") {
    std::mt19937_64 rng(1);
    DictionarySet set = test::make_set(4, 1, {test::random_dictionary(16, 8, 1, rng)});
    // Orthogonalize so the scaled atom is the unique maximum.
    set.levels[0] = test::identity_dictionary(16, 1);
    const double c = -0.73;
    Vector p(16, 0.0);
    p[3] = c;
    DenoiseConfig cfg;
    Rng r(0);
    const PatchCode code = mp_denoise_patch(set, p, cfg, r);
    CHECK(test::max_abs_diff(code.reconstruction, p) <= 1e-6);
    REQUIRE(code.trace.size() == 1);
    CHECK(code.trace[0].level == 1);
    CHECK(code.trace[0].atom == 3);
    CHECK(code.trace[0].coefficient == doctest::Approx(c));
    CHECK(code.trace[0].residual_norm <= 1e-6);
  }

  TEST_CASE("standard basis picks the largest magnitude coordinate") {
    const DictionarySet set = test::make_set(2, 1, {test::identity_dictionary(4, 1)});
    const Vector p{0.9, 0.1, -0.2, 0.0};
    Rng r(0);
    const PatchCode code = mp_denoise_patch(set, p, DenoiseConfig{}, r);
    CHECK(code.reconstruction == Vector{0.9, 0.0, 0.0, 0.0});
    CHECK(code.trace[0].atom == 0);
  }

  TEST_CASE("a zero patch yields zero output and zero coefficients at every level") {
    const DictionarySet set = test::identity_set(2, 1, 3);
    Rng r(0);
    const PatchCode code = mp_denoise_patch(set, Vector(4, 0.0), DenoiseConfig{}, r);
    CHECK(code.reconstruction == Vector(4, 0.0));
    REQUIRE(code.trace.size() == 3);
    for (const TraceEntry& t : code.trace) CHECK(t.coefficient == 0.0);
  }

  TEST_CASE("zero residual mid-loop keeps the trace at kappa entries") {
    const DictionarySet set = test::identity_set(2, 1, 4);
    const Vector p{0.0, 0.5, 0.0, 0.0};
    Rng r(0);
    const PatchCode code = mp_denoise_patch(set, p, DenoiseConfig{}, r);
    REQUIRE(code.trace.size() == 4);
    CHECK(code.trace[0].atom == 1);
    for (int i = 1; i < 4; ++i) {
      CHECK(code.trace[static_cast<std::size_t>(i)].atom == 0);
      CHECK(code.trace[static_cast<std::size_t>(i)].coefficient == 0.0);
      CHECK(code.trace[static_cast<std::size_t>(i)].level == i + 1);
    }
  }

  TEST_CASE("select_atom on an orthonormal dictionary") {
    const Dictionary d = test::identity_dictionary(8, 1);
    Vector v(8, 0.0);
    v[5] = 1.0;
    Rng r(0);
    const AtomChoice c = select_atom(d, v, Deterministic{}, r);
    CHECK(c.index == 5);
    CHECK(c.coefficient == 1.0);
  }

  TEST_CASE("exact ties go to the lowest index") {
    const Dictionary d = test::identity_dictionary(2, 1);
    Rng r(0);
    const AtomChoice c = select_atom(d, Vector{0.7, -0.7}, Deterministic{}, r);
    CHECK(c.index == 0);
    CHECK(c.coefficient == 0.7);
    const AtomChoice c2 = select_atom(d, Vector{-0.7, 0.7}, Deterministic{}, r);
    CHECK(c2.index == 0);
    CHECK(c2.coefficient == -0.7);
  }

  TEST_CASE("randomized selection is reproducible for a fixed seed") {
    std::mt19937_64 g(2);
    const Dictionary d = test::random_dictionary(16, 40, 1, g);
    const Vector v = test::random_vector(16, g);
    const Randomized mode{0.2, 2, 0};
    Rng a(99), b(99);
    for (int i = 0; i < 20; ++i) {
      const AtomChoice x = select_atom(d, v, mode, a);
      const AtomChoice y = select_atom(d, v, mode, b);
      CHECK(x.index == y.index);
      CHECK(x.coefficient == y.coefficient);
    }
  }

  TEST_CASE("randomized with full subset and top_k=2 picks one of the top two, both often") {
    std::mt19937_64 g(3);
    const Dictionary d = test::random_dictionary(16, 30, 1, g);
    const Vector v = test::random_vector(16, g);
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k = 0; k < d.size(); ++k) ranked.push_back({-std::abs(test::naive_dot(d, k, v)), k});
    std::sort(ranked.begin(), ranked.end());
    std::map<std::size_t, int> hits;
    Rng r(5);
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      const AtomChoice c = select_atom(d, v, Randomized{1.0, 2, 0}, r);
      ++hits[c.index];
      CHECK(c.coefficient == doctest::Approx(test::naive_dot(d, c.index, v)).epsilon(1e-12));
    }
    CHECK(hits.size() == 2);
    CHECK(hits[ranked[0].second] > n * 0.45);
    CHECK(hits[ranked[1].second] > n * 0.45);
  }

  TEST_CASE("a subset of one atom makes the choice uniform over atoms") {
    // ceil(5 * 0.2) = 1: the pick is whichever atom the subset drew.
    std::mt19937_64 g(4);
    const Dictionary d = test::random_dictionary(8, 5, 1, g);
    const Vector v = test::random_vector(8, g);
    std::vector<int> hits(5, 0);
    Rng r(6);
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++hits[select_atom(d, v, Randomized{0.2, 2, 0}, r).index];
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - n / 5.0) * (h - n / 5.0) / (n / 5.0);
    CHECK(chi2 < 13.28);  // 4 dof, p = 0.01
  }

  TEST_CASE("invalid randomization parameters") {
    CHECK_THROWS_AS(validate(SelectionMode{Randomized{0.0, 2, 0}}), DimensionError);
    CHECK_THROWS_AS(validate(SelectionMode{Randomized{1.5, 2, 0}}), DimensionError);
    CHECK_THROWS_AS(validate(SelectionMode{Randomized{0.2, 0, 0}}), DimensionError);
    CHECK_NOTHROW(validate(SelectionMode{Randomized{1.0, 1, 0}}));
  }

  TEST_CASE("config validation against the set") {
    const DictionarySet set = test::identity_set(2, 1, 2);
    DenoiseConfig cfg;
    CHECK_NOTHROW(cfg.validate(set));
    cfg.kappa = 3;
    CHECK_THROWS_AS(cfg.validate(set), DimensionError);
    cfg.kappa = -1;
    CHECK_THROWS_AS(cfg.validate(set), DimensionError);
    cfg.kappa = 1;
    cfg.stride = 3;
    CHECK_THROWS_AS(cfg.validate(set), DimensionError);
  }

  TEST_CASE("dimension mismatch and empty dictionary") {
    const DictionarySet set = test::identity_set(2, 1, 1);
    Rng r(0);
    CHECK_THROWS_AS(mp_denoise_patch(set, Vector(5, 0.1), DenoiseConfig{}, r), DimensionError);
    CHECK_THROWS_AS(select_atom(Dictionary(4, 1), Vector(4, 0.1), Deterministic{}, r), Error);
  }

  TEST_CASE("inference kappa below the build kappa uses the leading levels") {
    std::mt19937_64 g(7);
    std::vector<Dictionary> levels;
    for (int l = 1; l <= 3; ++l) levels.push_back(test::random_dictionary(9, 12, l, g));
    const DictionarySet set = test::make_set(3, 1, std::move(levels));
    const Vector p = test::random_vector(9, g);
    DenoiseConfig cfg;
    cfg.kappa = 2;
    Rng r(0);
    const PatchCode code = mp_denoise_patch(set, p, cfg, r);
    REQUIRE(code.trace.size() == 2);
    const auto ref = test::naive_mp(set, p, 2);
    CHECK(code.trace[1].atom == ref[1].index);
  }

  TEST_CASE("an image built from atoms is reproduced by denoise_image") {
    // Every level is the full basis, so kappa = P*P levels reconstruct any
    // patch; the merged image is the input.
    const DictionarySet set = test::identity_set(2, 1, 4);
    const ImageTensor img = test::random_image(9, 9, 1, 8);
    DenoiseConfig cfg;
    cfg.stride = 1;
    const DenoiseResult r = denoise_image(set, img, cfg);
    CHECK(r.uncovered_pixels == 0);
    CHECK(test::max_abs_diff(r.image.data, img.data) <= 1e-6);
  }

  TEST_CASE("denoise_image reports and copies uncovered margins") {
    const DictionarySet set = test::make_set(4, 1, {test::identity_dictionary(16, 1)});
    const ImageTensor img = test::random_image(10, 10, 1, 9);
    DenoiseConfig cfg;
    cfg.stride = 4;
    const DenoiseResult r = denoise_image(set, img, cfg);
    CHECK(r.uncovered_pixels == 36);
    CHECK(r.image.at(9, 9) == img.at(9, 9));
  }

  TEST_CASE("denoise_image rejects channel mismatch and undersized images") {
    const DictionarySet set = test::identity_set(4, 1, 1);
    CHECK_THROWS_AS(denoise_image(set, ImageTensor(8, 8, 3, 0.5), DenoiseConfig{}), DimensionError);
    CHECK_THROWS_AS(denoise_image(set, ImageTensor(3, 8, 1, 0.5), DenoiseConfig{}), DimensionError);
  }

  TEST_CASE("randomized denoising depends on the seed, deterministic does not") {
    std::mt19937_64 g(10);
    std::vector<Dictionary> levels;
    for (int l = 1; l <= 2; ++l) levels.push_back(test::random_dictionary(16, 40, l, g));
    const DictionarySet set = test::make_set(4, 1, std::move(levels));
    const ImageTensor img = test::random_image(12, 12, 1, 11);
    DenoiseConfig det;
    CHECK(denoise_image(set, img, det, 1).image.data == denoise_image(set, img, det, 2).image.data);
    DenoiseConfig rnd;
    rnd.mode = Randomized{};
    CHECK(denoise_image(set, img, rnd, 1).image.data == denoise_image(set, img, rnd, 1).image.data);
    CHECK(denoise_image(set, img, rnd, 1).image.data != denoise_image(set, img, rnd, 2).image.data);
  }

  TEST_CASE("results do not depend on the worker count") {
    std::mt19937_64 g(12);
    std::vector<Dictionary> levels;
    for (int l = 1; l <= 2; ++l) levels.push_back(test::random_dictionary(16, 40, l, g));
    const DictionarySet set = test::make_set(4, 1, std::move(levels));
    const ImageTensor img = test::random_image(20, 20, 1, 13);
    DenoiseConfig rnd;
    rnd.mode = Randomized{};
    const int before = thread_count();
    set_thread_count(1);
    const Vector a = denoise_image(set, img, rnd, 3).image.data;
    set_thread_count(4);
    const Vector b = denoise_image(set, img, rnd, 3).image.data;
    set_thread_count(before);
    CHECK(a == b);
  }
}
