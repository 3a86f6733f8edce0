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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "d3/dictionary.hpp"
#include "d3/image.hpp"
#include "d3/mp.hpp"

namespace d3 {

enum class Architecture : std::uint32_t { kLinear = 0, kMlp = 1 };

/// Small differentiable classifier over flattened images. The MLP uses one
/// tanh hidden layer. Parameters are laid out flat:
///   linear: W (classes x d), b (classes)
///   mlp:    W1 (hidden x d), b1 (hidden), W2 (classes x hidden), b2 (classes)
class ToyClassifier {
 public:
  ToyClassifier() = default;
  ToyClassifier(Architecture arch, int height, int width, int channels, int classes, int hidden = 0);

  /// Gaussian init with 1/sqrt(fan_in) scale.
  void initialize(Rng& rng);

  Architecture architecture() const noexcept { return arch_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  int classes() const noexcept { return classes_; }
  int hidden() const noexcept { return hidden_; }
  std::size_t input_dim() const noexcept {
    return static_cast<std::size_t>(height_) * width_ * channels_;
  }

  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  Vector logits(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  /// Row c holds d logit_c / dx.
  std::vector<Vector> logit_jacobian(std::span<const double> x) const;

  /// Softmax cross-entropy loss; grad receives d loss / dx.
  double loss_and_input_gradient(std::span<const double> x, int label, Vector& grad) const;

  /// Adds d loss / d params into grad (same layout as parameters()).
  double accumulate_parameter_gradient(std::span<const double> x, int label,
                                       std::vector<double>& grad) const;

  void check_input(std::span<const double> x) const;

  friend bool operator==(const ToyClassifier&, const ToyClassifier&) = default;

 private:
  void hidden_activations(std::span<const double> x, Vector& h) const;

  Architecture arch_ = Architecture::kLinear;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  int classes_ = 0;
  int hidden_ = 0;
  std::vector<double> params_;
};

struct LabeledImage {
  ImageTensor image;
  int label = 0;
};

struct TrainConfig {
  Architecture arch = Architecture::kMlp;
  int hidden = 32;
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ToyClassifier model;
  std::vector<double> epoch_loss;
};

/// Minibatch SGD on softmax cross-entropy. Deterministic given the seed.
TrainResult train_toy(std::span<const LabeledImage> data, const TrainConfig& cfg);

double accuracy(const ToyClassifier& model, std::span<const LabeledImage> data);

void save_model(const ToyClassifier& model, const std::filesystem::path& path);
ToyClassifier load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const ToyClassifier& model);
ToyClassifier deserialize_model(std::span<const std::uint8_t> bytes);

/// Scales v in place to ||v|| = budget * ||x||; leaves a zero v untouched.
void rescale_to_budget(Vector& v, std::span<const double> x, double budget);

/// sign(d loss / dx) rescaled to the relative l2 budget.
Vector fgsm(const ToyClassifier& model, std::span<const double> x, int label, double budget);

struct DeepFoolResult {
  /// Final perturbation, (1 + overshoot) * accumulated steps.
  Vector perturbation;
  /// Accumulated linearized steps before the overshoot factor.
  Vector raw_step;
  int iterations = 0;
  bool flipped = false;
  int original_label = 0;
  int final_label = 0;
};

DeepFoolResult deepfool(const ToyClassifier& model, std::span<const double> x, int max_iter = 50,
                        double overshoot = 0.02);

enum class AttackKind { kFgsm, kDeepFool };
enum class ThreatKind { kBlackBox, kGreyBox, kWhiteBox };

struct AttackSpec {
  AttackKind kind = AttackKind::kFgsm;
  double budget = 0.06;
  int max_iter = 50;
  double overshoot = 0.02;
};

AttackKind parse_attack(const std::string& s);
ThreatKind parse_threat(const std::string& s);
std::string to_string(AttackKind k);
std::string to_string(ThreatKind k);

/// Perturbation for `spec` at x, rescaled to the relative budget.
Vector attack_perturbation(const ToyClassifier& model, std::span<const double> x, int label,
                           const AttackSpec& spec);

struct DefenseSetup {
  /// Classifier behind the defense; it sees T(x).
  const ToyClassifier* defended = nullptr;
  /// Classifier used without the defense; defaults to `defended`.
  const ToyClassifier* undefended = nullptr;
  /// Black-box attacker model: same architecture, different seed.
  const ToyClassifier* surrogate = nullptr;
  const DictionarySet* set = nullptr;
  DenoiseConfig denoise;
  /// Base seed for per-image defense randomness.
  std::uint64_t seed = 0;
};

struct AccuracyTable {
  double clean = 0.0;             // defended model on T(x)
  double clean_undefended = 0.0;  // undefended model on x
  double attacked_no_defense = 0.0;
  double attacked_with_defense = 0.0;
  std::size_t n = 0;
};

/// Per image: clean prediction on T(x), undefended prediction on x + v and
/// defended prediction on T(x + v). The white-box attacker differentiates the
/// defended model at its own sample of T(x) and adds the noise to x.
AccuracyTable evaluate_defense(const DefenseSetup& setup, std::span<const LabeledImage> data,
                               const AttackSpec& attack, ThreatKind threat);

/// T(x) for every image, e.g. to train the defended classifier.
std::vector<LabeledImage> transform_dataset(const DictionarySet& set, const DenoiseConfig& cfg,
                                            std::span<const LabeledImage> data,
                                            std::uint64_t seed);

/// Defense randomness for image i.
std::uint64_t defense_seed(std::uint64_t base, std::size_t image_index);

}  // namespace d3
