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
#include <cmath>
#include <fstream>

#include "d3/desk.hpp"
#include "d3/dl.hpp"
#include "d3/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace d3;

namespace {

std::vector<ImageTensor> desk_crops(std::size_t n, int size, std::uint64_t seed) {
  static const std::vector<ImageTensor> sources = desk::load_sources(D3_TEST_DATA "/desk");
  return desk::crops(sources, n, size, desk::Split::kTrain, seed);
}

}  // namespace

TEST_SUITE("dl") {
  TEST_CASE("a single-patch corpus with eta=1 yields that patch normalized") {
    const ImageTensor img = test::random_image(4, 4, 1, 1);
    LearnConfig cfg;
    cfg.patch_size = 4;
    cfg.eta = 1;
    cfg.kappa = 1;
    const LearnResult r = learn_dictionaries(std::span(&img, 1), UniformSaliency{}, cfg);
    REQUIRE(r.set.levels.size() == 1);
    Vector centered = img.data;
    for (double& v : centered) v -= cfg.center;
    const double n = l2_norm(centered);
    const auto atom = r.set.levels[0].atom(0);
    for (std::size_t i = 0; i < 16; ++i) CHECK(atom[i] == doctest::Approx(centered[i] / n).epsilon(1e-6));
    CHECK(r.levels[0].admitted == 1);
    CHECK(r.levels[0].attempts == 1);
  }

  TEST_CASE("admission test geometry") {
    Dictionary d(3, 1);
    SUBCASE("empty dictionary admits any non-zero candidate") {
      CHECK(admission_test(d, Vector{0.1, 0.0, 0.0}, 0.85));
      CHECK(admission_ratio(d, Vector{0.1, 0.0, 0.0}) == 1.0);
    }
    d.append_normalized(Vector{1.0, 2.0, 2.0});
    SUBCASE("a copy or a rescaled copy of an atom is rejected") {
      CHECK(admission_ratio(d, Vector{1.0, 2.0, 2.0}) == doctest::Approx(0.0).epsilon(1e-6));
      CHECK_FALSE(admission_test(d, Vector{1.7, 3.4, 3.4}, 0.85));
      CHECK_FALSE(admission_test(d, Vector{-1.7, -3.4, -3.4}, 0.85));
    }
    SUBCASE("an orthogonal candidate is admitted") {
      CHECK(admission_ratio(d, Vector{2.0, -1.0, 0.0}) == doctest::Approx(1.0));
      CHECK(admission_test(d, Vector{2.0, -1.0, 0.0}, 0.85));
    }
    SUBCASE("admitted iff sin(theta) > eps") {
      Dictionary e(2, 1);
      e.append_normalized(Vector{1.0, 0.0});
      const double eps = 0.85, edge = std::asin(eps);
      for (double delta : {-0.05, -0.01, 0.01, 0.05}) {
        const double t = edge + delta;
        const Vector c{std::cos(t), std::sin(t)};
        CHECK(admission_ratio(e, c) == doctest::Approx(std::sin(t)).epsilon(1e-6));
        CHECK(admission_test(e, c, eps) == (std::sin(t) > eps));
      }
    }
  }

  TEST_CASE("uniform window sampling passes a chi-square test") {
    // 5x5 image, P=3: a 3x3 grid of windows, 9 cells, 8 degrees of freedom.
    const ImageTensor img = test::random_image(5, 5, 1, 2);
    const WindowSampler s(uniform_saliency(img), 3);
    REQUIRE(s.rows() == 3);
    REQUIRE(s.cols() == 3);
    Rng rng(3);
    std::vector<int> hits(9, 0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto [y, x] = s.draw(rng);
      ++hits[static_cast<std::size_t>(y * 3 + x)];
    }
    double chi2 = 0.0;
    for (int h : hits) chi2 += (h - n / 9.0) * (h - n / 9.0) / (n / 9.0);
    CHECK(chi2 < 20.09);  // p = 0.01
  }

  TEST_CASE("window probabilities are proportional to summed saliency") {
    const ImageTensor img = test::random_image(6, 7, 1, 4);
    SaliencyMap m = uniform_saliency(img);
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (double& w : m.weights) w = u(g);
    const int p = 3;
    const WindowSampler s(m, p);
    double total = 0.0;
    std::vector<double> mass;
    for (int y = 0; y + p <= 6; ++y) {
      for (int x = 0; x + p <= 7; ++x) {
        double sum = 0.0;
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) sum += m.at(y + a, x + b);
        }
        mass.push_back(sum);
        total += sum;
      }
    }
    std::size_t k = 0;
    for (int y = 0; y + p <= 6; ++y) {
      for (int x = 0; x + p <= 7; ++x) CHECK(s.probability(y, x) == doctest::Approx(mass[k++] / total));
    }
  }

  TEST_CASE("saliency concentrated on one window always draws it") {
    // The corner pixel belongs to window (0, 0) only.
    const ImageTensor img = test::random_image(6, 6, 1, 6);
    SaliencyMap m = uniform_saliency(img);
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    m.weights[0] = 1.0;
    const WindowSampler s(m, 3);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) CHECK(s.draw(rng) == std::pair<int, int>{0, 0});
  }

  TEST_CASE("all-zero saliency falls back to uniform") {
    const ImageTensor img = test::random_image(6, 6, 1, 8);
    SaliencyMap m = uniform_saliency(img);
    std::fill(m.weights.begin(), m.weights.end(), 0.0);
    const WindowSampler s(m, 3);
    CHECK(s.uniform_fallback());
    CHECK(s.probability(2, 1) == doctest::Approx(1.0 / 16.0));
  }

  TEST_CASE("a fixed seed gives an identical draw sequence") {
    const ImageTensor img = test::random_image(9, 9, 1, 9);
    const SaliencyMap m = gradient_magnitude_saliency(img);
    Rng a(11), b(11);
    for (int i = 0; i < 50; ++i) CHECK(sample_patch(img, m, 4, a) == sample_patch(img, m, 4, b));
  }

  TEST_CASE("zero-norm patches are redrawn") {
    // Windows in the top three rows see only zeros: 21 of 49 draws would be
    // zero patches without the redraw.
    ImageTensor img(8, 8, 1, 0.0);
    for (int y = 4; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) img.at(y, x) = 0.8;
    }
    const SaliencyMap m = uniform_saliency(img);
    Rng rng(12);
    for (int i = 0; i < 100; ++i) CHECK(l2_norm(sample_patch(img, m, 2, rng)) > 0.0);
  }

  TEST_CASE("sample_patch checks the map shape") {
    const ImageTensor img(6, 6, 1, 0.3);
    Rng rng(0);
    CHECK_THROWS_AS(sample_patch(img, uniform_saliency(ImageTensor(6, 5, 1)), 3, rng), DimensionError);
  }

  TEST_CASE("exhausting max_attempts reports level, count and ratio") {
    // A nearly constant corpus offers one direction only.
    ImageTensor img(8, 8, 1, 0.7);
    LearnConfig cfg;
    cfg.patch_size = 4;
    cfg.eta = 4;
    cfg.kappa = 1;
    cfg.max_attempts = 50;
    try {
      learn_dictionaries(std::span(&img, 1), UniformSaliency{}, cfg);
      FAIL("expected a learning error");
    } catch (const LearningError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("level 1") != std::string::npos);
      CHECK(msg.find("admitted 1 of 4") != std::string::npos);
      CHECK(msg.find("rejection ratio") != std::string::npos);
      CHECK(e.exit_code() == 5);
    }
  }

  TEST_CASE("invalid configurations and corpora") {
    const ImageTensor img = test::random_image(8, 8, 1, 13);
    LearnConfig cfg;
    cfg.patch_size = 4;
    cfg.eta = 4;
    cfg.kappa = 1;
    auto run = [&](const LearnConfig& c) { learn_dictionaries(std::span(&img, 1), UniformSaliency{}, c); };
    LearnConfig bad = cfg;
    bad.epsilon = 1.0;
    CHECK_THROWS_AS(run(bad), DimensionError);
    bad = cfg;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(run(bad), DimensionError);
    bad = cfg;
    bad.eta = 0;
    CHECK_THROWS_AS(run(bad), DimensionError);
    bad = cfg;
    bad.max_attempts = 3;
    CHECK_THROWS_AS(run(bad), DimensionError);
    bad = cfg;
    bad.patch_size = 9;
    CHECK_THROWS_AS(run(bad), DimensionError);
    CHECK_THROWS_AS(learn_dictionaries(std::span<const ImageTensor>{}, UniformSaliency{}, cfg), LearningError);
  }

  TEST_CASE("learned sets are unit-norm, full and reproducible") {
    const auto corpus = desk_crops(60, 24, 14);
    LearnConfig cfg;
    cfg.eta = 48;
    cfg.kappa = 2;
    cfg.seed = 15;
    const LearnResult a = learn_dictionaries(corpus, GradientMagnitudeSaliency{}, cfg);
    const LearnResult b = learn_dictionaries(corpus, GradientMagnitudeSaliency{}, cfg);
    CHECK(serialize(a.set) == serialize(b.set));
    REQUIRE(a.set.kappa() == 2);
    for (const Dictionary& d : a.set.levels) {
      CHECK(d.size() == 48);
      CHECK_FALSE(d.first_non_unit().has_value());
    }
    CHECK(a.set.corpus_hash == corpus_hash(corpus));
    CHECK(a.set.epsilon == doctest::Approx(0.85));
    cfg.seed = 16;
    CHECK(serialize(learn_dictionaries(corpus, GradientMagnitudeSaliency{}, cfg).set) != serialize(a.set));
  }
}

TEST_SUITE("saliency") {
  TEST_CASE("uniform saliency is all ones with the image dims") {
    const SaliencyMap m = uniform_saliency(ImageTensor(8, 8, 3));
    CHECK(m.height == 8);
    CHECK(m.width == 8);
    REQUIRE(m.weights.size() == 64);
    for (double w : m.weights) CHECK(w == 1.0);
    const SaliencyMap r = uniform_saliency(ImageTensor(3, 7, 1));
    CHECK(r.height == 3);
    CHECK(r.width == 7);
  }

  TEST_CASE("constant image has zero gradient magnitude") {
    for (double w : gradient_magnitude_saliency(ImageTensor(6, 6, 3, 0.4)).weights) CHECK(w == 0.0);
  }

  TEST_CASE("a vertical step edge peaks at the two columns beside it") {
    ImageTensor img(6, 10, 1, 0.0);
    const int k = 5;
    for (int y = 0; y < 6; ++y) {
      for (int x = k; x < 10; ++x) img.at(y, x) = 1.0;
    }
    const SaliencyMap m = gradient_magnitude_saliency(img);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 10; ++x) {
        if (x == k - 1 || x == k) {
          CHECK(m.at(y, x) == doctest::Approx(0.5));
        } else {
          CHECK(m.at(y, x) == 0.0);
        }
      }
    }
  }

  TEST_CASE("a linear ramp has constant interior weights") {
    ImageTensor img(7, 7, 1);
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 7; ++x) img.at(y, x) = 0.05 * x + 0.02 * y;
    }
    const SaliencyMap m = gradient_magnitude_saliency(img);
    const double expect = std::hypot(0.05, 0.02);
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 7; ++x) CHECK(m.at(y, x) == doctest::Approx(expect));
    }
  }

  TEST_CASE("gradient magnitude combines channels in l2") {
    ImageTensor img(3, 3, 3);
    for (int x = 0; x < 3; ++x) {
      for (int y = 0; y < 3; ++y) {
        img.at(y, x, 0) = 0.1 * x;
        img.at(y, x, 1) = 0.2 * x;
        img.at(y, x, 2) = 0.2 * y;
      }
    }
    CHECK(gradient_magnitude_saliency(img).at(1, 1) == doctest::Approx(std::sqrt(0.01 + 0.04 + 0.04)));
  }

  TEST_CASE("save and load round trip") {
    const auto dir = test::temp_dir("sal");
    const SaliencyMap m = gradient_magnitude_saliency(test::random_image(5, 6, 1, 1));
    save_saliency(m, dir / "img.d3sal");
    const SaliencyMap back = load_saliency(dir, "img", 5, 6);
    REQUIRE(back.weights.size() == m.weights.size());
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      CHECK(back.weights[i] == doctest::Approx(static_cast<float>(m.weights[i])));
    }
  }

  TEST_CASE("mismatched dims name both shapes") {
    const auto dir = test::temp_dir("sal_dims");
    save_saliency(uniform_saliency(ImageTensor(5, 6, 1)), dir / "a.d3sal");
    try {
      load_saliency(dir, "a", 7, 8);
      FAIL("expected an error");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("5x6") != std::string::npos);
      CHECK(msg.find("7x8") != std::string::npos);
    }
  }

  TEST_CASE("negative or non-finite entries are rejected") {
    const auto dir = test::temp_dir("sal_neg");
    SaliencyMap m = uniform_saliency(ImageTensor(3, 3, 1));
    m.weights[4] = -0.5;
    CHECK_THROWS(save_saliency(m, dir / "n.d3sal"));
    CHECK_THROWS(m.validate());
    m.weights[4] = std::nan("");
    CHECK_THROWS(m.validate());
  }

  TEST_CASE("a negative entry in a file fails on load") {
    const auto dir = test::temp_dir("sal_neg_file");
    save_saliency(uniform_saliency(ImageTensor(2, 2, 1)), dir / "f.d3sal");
    // Flip the sign bit of the last float.
    std::fstream f(dir / "f.d3sal", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put(static_cast<char>(0xbf));
    f.close();
    CHECK_THROWS_AS(load_saliency_file(dir / "f.d3sal"), FormatError);
  }

  TEST_CASE("missing map is an I/O error") {
    const auto dir = test::temp_dir("sal_missing");
    CHECK_THROWS_AS(load_saliency(dir, "nope", 2, 2), IoError);
  }

  TEST_CASE("directory provider reads maps by image id") {
    const auto dir = test::temp_dir("sal_provider");
    const ImageTensor img = test::random_image(4, 4, 1, 2);
    SaliencyMap m = uniform_saliency(img);
    m.weights[5] = 3.0;
    save_saliency(m, dir / "second.d3sal");
    const DirectorySaliency p(dir, {"first", "second"});
    CHECK(p.compute(img, 1).weights[5] == 3.0);
    CHECK_THROWS_AS(p.compute(img, 0), IoError);
  }
}
