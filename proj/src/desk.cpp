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
#include "d3/desk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "d3/error.hpp"
#include "d3/image_io.hpp"

namespace d3::desk {
namespace {

struct Shape {
  int kind;  // 0 disk, 1 rotated rectangle
  double cx, cy, r, aspect, angle;
  double value[3];
  double slope_x, slope_y;

  bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    if (kind == 0) return dx * dx + dy * dy <= r * r;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::abs(u) <= r && std::abs(v) <= r * aspect;
  }
  double shade(int ch, double x, double y) const {
    return value[ch] + slope_x * (x - cx) + slope_y * (y - cy);
  }
};

}  // namespace

ImageTensor dead_leaves(const LeavesConfig& cfg, Rng& rng) {
  if (cfg.size < 1 || cfg.shapes < 0) throw DimensionError("invalid dead-leaves configuration");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rmin = cfg.min_radius;
  const double rmax = cfg.max_radius > 0.0 ? cfg.max_radius : cfg.size / 2.0;
  const double a = 1.0 / (rmin * rmin);
  const double b = 1.0 / (rmax * rmax);

  std::vector<Shape> shapes;
  shapes.reserve(static_cast<std::size_t>(cfg.shapes));
  for (int i = 0; i < cfg.shapes; ++i) {
    Shape s{};
    s.kind = u01(rng) < 0.5 ? 0 : 1;
    s.cx = u01(rng) * cfg.size;
    s.cy = u01(rng) * cfg.size;
    s.r = 1.0 / std::sqrt(a - u01(rng) * (a - b));  // p(r) ~ r^-3
    s.aspect = 0.3 + 0.7 * u01(rng);
    s.angle = u01(rng) * std::numbers::pi;
    const double base = 0.1 + 0.8 * u01(rng);
    for (double& v : s.value) v = std::clamp(base + 0.1 * gauss(rng), 0.0, 1.0);
    s.slope_x = 0.02 * gauss(rng);
    s.slope_y = 0.02 * gauss(rng);
    shapes.push_back(s);
  }
  const double background = 0.1 + 0.8 * u01(rng);

  ImageTensor img(cfg.size, cfg.size, cfg.channels, 0.0);
  constexpr int kSuper = 2;
  for (int y = 0; y < cfg.size; ++y) {
    for (int x = 0; x < cfg.size; ++x) {
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = x + (sx + 0.5) / kSuper;
          const double py = y + (sy + 0.5) / kSuper;
          // Later shapes occlude earlier ones.
          const Shape* top = nullptr;
          for (auto it = shapes.rbegin(); it != shapes.rend(); ++it) {
            if (it->contains(px, py)) {
              top = &*it;
              break;
            }
          }
          for (int c = 0; c < cfg.channels; ++c) {
            img.at(y, x, c) += (top ? top->shade(c, px, py) : background) / (kSuper * kSuper);
          }
        }
      }
    }
  }
  for (double& v : img.data) v += cfg.noise * gauss(rng);
  clamp_unit(img);
  return img;
}

std::vector<ImageTensor> corpus(std::size_t n, const LeavesConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dead_leaves(cfg, rng));
  return out;
}

ImageTensor perturb_sign(const ImageTensor& x, double budget, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Vector v(x.size());
  for (double& e : v) e = coin(rng) ? 1.0 : -1.0;
  rescale_to_budget(v, x.data, budget);
  ImageTensor out = x;
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] += v[i];
  return out;
}

std::vector<ImageTensor> load_sources(const std::filesystem::path& dir) {
  std::vector<ImageTensor> out;
  for (const auto& path : list_images(dir)) {
    ImageTensor img = read_image(path);
    if (img.channels != 1) {
      ImageTensor gray(img.height, img.width, 1);
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          double sum = 0.0;
          for (int c = 0; c < img.channels; ++c) sum += img.at(y, x, c);
          gray.at(y, x) = sum / img.channels;
        }
      }
      img = std::move(gray);
    }
    out.push_back(std::move(img));
  }
  if (out.empty()) throw IoError("no images found in " + dir.string());
  return out;
}

std::vector<ImageTensor> crops(std::span<const ImageTensor> sources, std::size_t n, int size,
                               Split split, std::uint64_t seed) {
  if (sources.empty()) throw DimensionError("no crop sources");
  if (size <= 0) throw DimensionError("crop size must be positive");
  Rng rng(seed);
  std::vector<ImageTensor> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ImageTensor& src = sources[rng() % sources.size()];
    const int cut = src.height * 5 / 8;
    const int y0 = split == Split::kTrain ? 0 : cut;
    const int y1 = split == Split::kTrain ? cut : src.height;
    if (y1 - y0 < size || src.width < size) {
      throw DimensionError("source " + std::to_string(src.height) + "x" + std::to_string(src.width) +
                           " too small for " + std::to_string(size) + "px crops");
    }
    const int y = y0 + static_cast<int>(rng() % static_cast<std::uint64_t>(y1 - y0 - size + 1));
    const int x = static_cast<int>(rng() % static_cast<std::uint64_t>(src.width - size + 1));
    ImageTensor c(size, size, src.channels);
    for (int a = 0; a < size; ++a) {
      for (int b = 0; b < size; ++b) {
        for (int ch = 0; ch < src.channels; ++ch) c.at(a, b, ch) = src.at(y + a, x + b, ch);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

Task make_task(const TaskConfig& cfg, std::size_t train_per_class, std::size_t test_per_class,
               std::uint64_t seed) {
  if (cfg.classes < 2) throw DimensionError("task needs at least 2 classes");
  Rng rng(seed);
  LeavesConfig leaves;
  leaves.size = cfg.size;
  leaves.channels = cfg.channels;
  leaves.shapes = std::max(8, cfg.size * cfg.size / 16);
  leaves.noise = 0.0;
  Task task;
  const ImageTensor base = dead_leaves(leaves, rng);
  for (int c = 0; c < cfg.classes; ++c) {
    ImageTensor own = dead_leaves(leaves, rng);
    for (std::size_t i = 0; i < own.size(); ++i) {
      own.data[i] = (1.0 - cfg.separation) * base.data[i] + cfg.separation * own.data[i];
    }
    task.prototypes.push_back(std::move(own));
  }

  std::uniform_int_distribution<int> shift(-cfg.max_shift, cfg.max_shift);
  std::uniform_real_distribution<double> jitter(1.0 - cfg.contrast_jitter, 1.0 + cfg.contrast_jitter);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto sample = [&](int label) {
    const ImageTensor& proto = task.prototypes[static_cast<std::size_t>(label)];
    const int dy = shift(rng);
    const int dx = shift(rng);
    const double gain = jitter(rng);
    ImageTensor img(cfg.size, cfg.size, cfg.channels);
    for (int y = 0; y < cfg.size; ++y) {
      for (int x = 0; x < cfg.size; ++x) {
        const int sy = std::clamp(y + dy, 0, cfg.size - 1);
        const int sx = std::clamp(x + dx, 0, cfg.size - 1);
        for (int ch = 0; ch < cfg.channels; ++ch) {
          img.at(y, x, ch) = 0.5 + gain * (proto.at(sy, sx, ch) - 0.5) + cfg.noise * gauss(rng);
        }
      }
    }
    clamp_unit(img);
    return LabeledImage{std::move(img), label};
  };
  for (std::size_t i = 0; i < train_per_class; ++i) {
    for (int c = 0; c < cfg.classes; ++c) task.train.push_back(sample(c));
  }
  for (std::size_t i = 0; i < test_per_class; ++i) {
    for (int c = 0; c < cfg.classes; ++c) task.test.push_back(sample(c));
  }
  return task;
}

std::vector<LabeledImage> blobs(int classes, std::size_t per_class, int size, double sigma,
                                double noise, std::uint64_t seed) {
  if (classes < 2) throw DimensionError("blobs need at least 2 classes");
  if (size < 4) throw DimensionError("blob images need size >= 4");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> wobble(-0.5, 0.5);
  // Anchors on a circle around the center.
  const double r = 0.3 * size, c0 = 0.5 * (size - 1);
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (int c = 0; c < classes; ++c) {
      const double phi = 2.0 * std::numbers::pi * c / classes;
      const double cy = c0 + r * std::sin(phi) + wobble(rng);
      const double cx = c0 + r * std::cos(phi) + wobble(rng);
      ImageTensor img(size, size, 1);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          img.at(y, x) = 0.1 + 0.8 * std::exp(-d2 / (2.0 * sigma * sigma)) + noise * gauss(rng);
        }
      }
      clamp_unit(img);
      out.push_back({std::move(img), c});
    }
  }
  return out;
}

}  // namespace d3::desk
