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
#include "d3/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "d3/binio.hpp"
#include "d3/error.hpp"
#include "d3/parallel.hpp"

namespace d3 {
namespace {

constexpr std::string_view kModelMagic = "D3MODL01";

void softmax(const Vector& z, Vector& p) {
  const double m = *std::max_element(z.begin(), z.end());
  p.resize(z.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) sum += p[c] = std::exp(z[c] - m);
  for (double& v : p) v /= sum;
}

double cross_entropy(const Vector& z, int label) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return std::log(sum) + m - z[static_cast<std::size_t>(label)];
}

int argmax(const Vector& z) {
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

}  // namespace

ToyClassifier::ToyClassifier(Architecture arch, int height, int width, int channels, int classes,
                             int hidden)
    : arch_(arch),
      height_(height),
      width_(width),
      channels_(channels),
      classes_(classes),
      hidden_(arch == Architecture::kMlp ? hidden : 0) {
  if (height < 1 || width < 1 || channels < 1) throw DimensionError("invalid model input shape");
  if (classes < 2) throw DimensionError("a classifier needs at least 2 classes");
  if (arch == Architecture::kMlp && hidden < 1) throw DimensionError("MLP hidden width must be >= 1");
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  const auto h = static_cast<std::size_t>(hidden_);
  params_.assign(arch == Architecture::kLinear ? c * d + c : h * d + h + c * h + c, 0.0);
}

void ToyClassifier::initialize(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  if (arch_ == Architecture::kLinear) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < c * d; ++i) params_[i] = s * n(rng);
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(c * d), params_.end(), 0.0);
    return;
  }
  const auto h = static_cast<std::size_t>(hidden_);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  std::size_t o = 0;
  for (std::size_t i = 0; i < h * d; ++i) params_[o++] = s1 * n(rng);
  for (std::size_t i = 0; i < h; ++i) params_[o++] = 0.0;
  for (std::size_t i = 0; i < c * h; ++i) params_[o++] = s2 * n(rng);
  for (std::size_t i = 0; i < c; ++i) params_[o++] = 0.0;
}

void ToyClassifier::check_input(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw DimensionError("model expects " + std::to_string(input_dim()) + " inputs, got " +
                         std::to_string(x.size()));
  }
}

void ToyClassifier::hidden_activations(std::span<const double> x, Vector& h) const {
  const std::size_t d = input_dim();
  const auto nh = static_cast<std::size_t>(hidden_);
  const double* w1 = params_.data();
  const double* b1 = w1 + nh * d;
  h.resize(nh);
  for (std::size_t j = 0; j < nh; ++j) {
    const double* row = w1 + j * d;
    double acc = b1[j];
    for (std::size_t i = 0; i < d; ++i) acc += row[i] * x[i];
    h[j] = std::tanh(acc);
  }
}

Vector ToyClassifier::logits(std::span<const double> x) const {
  check_input(x);
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  Vector z(c);
  if (arch_ == Architecture::kLinear) {
    const double* w = params_.data();
    const double* b = w + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double acc = b[k];
      for (std::size_t i = 0; i < d; ++i) acc += w[k * d + i] * x[i];
      z[k] = acc;
    }
    return z;
  }
  Vector h;
  hidden_activations(x, h);
  const auto nh = static_cast<std::size_t>(hidden_);
  const double* w2 = params_.data() + nh * d + nh;
  const double* b2 = w2 + c * nh;
  for (std::size_t k = 0; k < c; ++k) {
    double acc = b2[k];
    for (std::size_t j = 0; j < nh; ++j) acc += w2[k * nh + j] * h[j];
    z[k] = acc;
  }
  return z;
}

int ToyClassifier::predict(std::span<const double> x) const { return argmax(logits(x)); }

std::vector<Vector> ToyClassifier::logit_jacobian(std::span<const double> x) const {
  check_input(x);
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  std::vector<Vector> jac(c, Vector(d, 0.0));
  if (arch_ == Architecture::kLinear) {
    for (std::size_t k = 0; k < c; ++k) {
      std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(k * d), d, jac[k].begin());
    }
    return jac;
  }
  Vector h;
  hidden_activations(x, h);
  const auto nh = static_cast<std::size_t>(hidden_);
  const double* w1 = params_.data();
  const double* w2 = params_.data() + nh * d + nh;
  for (std::size_t j = 0; j < nh; ++j) {
    const double slope = 1.0 - h[j] * h[j];
    const double* row = w1 + j * d;
    for (std::size_t k = 0; k < c; ++k) {
      const double g = w2[k * nh + j] * slope;
      if (g == 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) jac[k][i] += g * row[i];
    }
  }
  return jac;
}

double ToyClassifier::loss_and_input_gradient(std::span<const double> x, int label,
                                              Vector& grad) const {
  const Vector z = logits(x);
  Vector p;
  softmax(z, p);
  p[static_cast<std::size_t>(label)] -= 1.0;
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  grad.assign(d, 0.0);
  if (arch_ == Architecture::kLinear) {
    for (std::size_t k = 0; k < c; ++k) {
      const double* row = params_.data() + k * d;
      for (std::size_t i = 0; i < d; ++i) grad[i] += p[k] * row[i];
    }
    return cross_entropy(z, label);
  }
  Vector h;
  hidden_activations(x, h);
  const auto nh = static_cast<std::size_t>(hidden_);
  const double* w1 = params_.data();
  const double* w2 = params_.data() + nh * d + nh;
  for (std::size_t j = 0; j < nh; ++j) {
    double gh = 0.0;
    for (std::size_t k = 0; k < c; ++k) gh += w2[k * nh + j] * p[k];
    const double ga = gh * (1.0 - h[j] * h[j]);
    const double* row = w1 + j * d;
    for (std::size_t i = 0; i < d; ++i) grad[i] += ga * row[i];
  }
  return cross_entropy(z, label);
}

double ToyClassifier::accumulate_parameter_gradient(std::span<const double> x, int label,
                                                    std::vector<double>& grad) const {
  const Vector z = logits(x);
  Vector p;
  softmax(z, p);
  p[static_cast<std::size_t>(label)] -= 1.0;
  const std::size_t d = input_dim();
  const auto c = static_cast<std::size_t>(classes_);
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
  if (arch_ == Architecture::kLinear) {
    for (std::size_t k = 0; k < c; ++k) {
      double* row = grad.data() + k * d;
      for (std::size_t i = 0; i < d; ++i) row[i] += p[k] * x[i];
      grad[c * d + k] += p[k];
    }
    return cross_entropy(z, label);
  }
  Vector h;
  hidden_activations(x, h);
  const auto nh = static_cast<std::size_t>(hidden_);
  const double* w2 = params_.data() + nh * d + nh;
  double* gw1 = grad.data();
  double* gb1 = gw1 + nh * d;
  double* gw2 = gb1 + nh;
  double* gb2 = gw2 + c * nh;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t j = 0; j < nh; ++j) gw2[k * nh + j] += p[k] * h[j];
    gb2[k] += p[k];
  }
  for (std::size_t j = 0; j < nh; ++j) {
    double gh = 0.0;
    for (std::size_t k = 0; k < c; ++k) gh += w2[k * nh + j] * p[k];
    const double ga = gh * (1.0 - h[j] * h[j]);
    double* row = gw1 + j * d;
    for (std::size_t i = 0; i < d; ++i) row[i] += ga * x[i];
    gb1[j] += ga;
  }
  return cross_entropy(z, label);
}

TrainResult train_toy(std::span<const LabeledImage> data, const TrainConfig& cfg) {
  if (data.empty()) throw DimensionError("empty training set");
  int max_label = 0;
  for (const auto& s : data) {
    if (s.label < 0) throw DimensionError("negative class label");
    max_label = std::max(max_label, s.label);
  }
  if (max_label < 1) throw DimensionError("training needs at least 2 classes");
  const ImageTensor& first = data.front().image;
  TrainResult out{ToyClassifier(cfg.arch, first.height, first.width, first.channels, max_label + 1,
                                cfg.hidden),
                  {}};
  Rng rng(cfg.seed);
  out.model.initialize(rng);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;
  const auto batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      grad.assign(out.model.parameters().size(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const LabeledImage& s = data[order[i]];
        total += out.model.accumulate_parameter_gradient(s.image.data, s.label, grad);
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      auto& params = out.model.parameters();
      for (std::size_t j = 0; j < params.size(); ++j) params[j] -= step * grad[j];
    }
    const double mean = total / static_cast<double>(data.size());
    if (!std::isfinite(mean)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch + 1 << " (loss " << mean
          << "); try a smaller learning rate than " << cfg.learning_rate;
      throw LearningError(msg.str());
    }
    out.epoch_loss.push_back(mean);
    log_info("epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(mean));
  }
  return out;
}

double accuracy(const ToyClassifier& model, std::span<const LabeledImage> data) {
  if (data.empty()) return 0.0;
  std::vector<char> hit(data.size(), 0);
  parallel_for(data.size(), [&](std::size_t i) {
    hit[i] = model.predict(data[i].image.data) == data[i].label;
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) /
         static_cast<double>(data.size());
}

std::vector<std::uint8_t> serialize_model(const ToyClassifier& model) {
  binio::Writer w;
  w.magic(kModelMagic);
  w.u32(static_cast<std::uint32_t>(model.architecture()));
  w.u32(static_cast<std::uint32_t>(model.height()));
  w.u32(static_cast<std::uint32_t>(model.width()));
  w.u32(static_cast<std::uint32_t>(model.channels()));
  w.u32(static_cast<std::uint32_t>(model.classes()));
  w.u32(static_cast<std::uint32_t>(model.hidden()));
  for (double v : model.parameters()) w.f32(static_cast<float>(v));
  return w.bytes();
}

ToyClassifier deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw FormatError("model file is empty");
  binio::Reader r(bytes, "model");
  if (r.magic(kModelMagic.size()) != kModelMagic) throw FormatError("bad model magic");
  const std::uint32_t tag = r.u32();
  if (tag > 1) throw FormatError("unknown architecture tag " + std::to_string(tag));
  const auto h = static_cast<int>(r.u32());
  const auto w = static_cast<int>(r.u32());
  const auto c = static_cast<int>(r.u32());
  const auto classes = static_cast<int>(r.u32());
  const auto hidden = static_cast<int>(r.u32());
  ToyClassifier model;
  try {
    model = ToyClassifier(static_cast<Architecture>(tag), h, w, c, classes, hidden);
  } catch (const DimensionError& e) {
    throw FormatError(std::string("model header: ") + e.what());
  }
  if (r.remaining() != model.parameters().size() * 4) {
    throw FormatError("model: payload holds " + std::to_string(r.remaining() / 4) +
                      " weights, expected " + std::to_string(model.parameters().size()));
  }
  for (double& v : model.parameters()) v = r.f32();
  return model;
}

void save_model(const ToyClassifier& model, const std::filesystem::path& path) {
  binio::write_file(path, serialize_model(model));
}

ToyClassifier load_model(const std::filesystem::path& path) {
  return deserialize_model(binio::read_file(path));
}

void rescale_to_budget(Vector& v, std::span<const double> x, double budget) {
  const double n = l2_norm(v);
  if (n == 0.0) return;
  const double s = budget * l2_norm(x) / n;
  for (double& e : v) e *= s;
}

Vector fgsm(const ToyClassifier& model, std::span<const double> x, int label, double budget) {
  Vector grad;
  model.loss_and_input_gradient(x, label, grad);
  Vector v(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    v[i] = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
  }
  if (l2_norm(v) == 0.0) {
    log_warning("zero loss gradient; FGSM returns no perturbation");
    return v;
  }
  rescale_to_budget(v, x, budget);
  return v;
}

DeepFoolResult deepfool(const ToyClassifier& model, std::span<const double> x, int max_iter,
                        double overshoot) {
  const std::size_t d = x.size();
  DeepFoolResult res;
  res.original_label = model.predict(x);
  res.raw_step.assign(d, 0.0);
  res.perturbation.assign(d, 0.0);
  const auto k0 = static_cast<std::size_t>(res.original_label);
  Vector xi(x.begin(), x.end());
  for (int it = 0; it < max_iter; ++it) {
    const Vector z = model.logits(xi);
    if (argmax(z) != res.original_label) break;
    const std::vector<Vector> jac = model.logit_jacobian(xi);
    double best = std::numeric_limits<double>::infinity();
    Vector step;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (k == k0) continue;
      Vector w(d);
      for (std::size_t i = 0; i < d; ++i) w[i] = jac[k][i] - jac[k0][i];
      const double wn = l2_norm(w);
      if (wn == 0.0) continue;
      const double f = z[k] - z[k0];
      const double dist = std::abs(f) / wn;
      if (dist < best) {
        best = dist;
        const double scale = std::abs(f) / (wn * wn);
        for (double& e : w) e *= scale;
        step = std::move(w);
      }
    }
    if (step.empty()) break;
    for (std::size_t i = 0; i < d; ++i) {
      res.raw_step[i] += step[i];
      xi[i] = x[i] + (1.0 + overshoot) * res.raw_step[i];
    }
    ++res.iterations;
  }
  for (std::size_t i = 0; i < d; ++i) res.perturbation[i] = (1.0 + overshoot) * res.raw_step[i];
  for (std::size_t i = 0; i < d; ++i) xi[i] = x[i] + res.perturbation[i];
  res.final_label = model.predict(xi);
  res.flipped = res.final_label != res.original_label;
  return res;
}

AttackKind parse_attack(const std::string& s) {
  if (s == "fgsm") return AttackKind::kFgsm;
  if (s == "deepfool") return AttackKind::kDeepFool;
  throw DimensionError("unknown attack '" + s + "'");
}

ThreatKind parse_threat(const std::string& s) {
  if (s == "black") return ThreatKind::kBlackBox;
  if (s == "grey" || s == "gray") return ThreatKind::kGreyBox;
  if (s == "white") return ThreatKind::kWhiteBox;
  throw DimensionError("unknown threat model '" + s + "'");
}

std::string to_string(AttackKind k) { return k == AttackKind::kFgsm ? "fgsm" : "deepfool"; }

std::string to_string(ThreatKind k) {
  switch (k) {
    case ThreatKind::kBlackBox:
      return "black";
    case ThreatKind::kGreyBox:
      return "grey";
    case ThreatKind::kWhiteBox:
      return "white";
  }
  return "unknown";
}

Vector attack_perturbation(const ToyClassifier& model, std::span<const double> x, int label,
                           const AttackSpec& spec) {
  if (spec.kind == AttackKind::kFgsm) return fgsm(model, x, label, spec.budget);
  Vector v = deepfool(model, x, spec.max_iter, spec.overshoot).perturbation;
  rescale_to_budget(v, x, spec.budget);
  return v;
}

std::uint64_t defense_seed(std::uint64_t base, std::size_t image_index) {
  return mix_seed(base + static_cast<std::uint64_t>(image_index));
}

std::vector<LabeledImage> transform_dataset(const DictionarySet& set, const DenoiseConfig& cfg,
                                            std::span<const LabeledImage> data,
                                            std::uint64_t seed) {
  std::vector<LabeledImage> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    out[i] = {denoise_image(set, data[i].image, cfg, defense_seed(seed, i)).image, data[i].label};
  });
  return out;
}

AccuracyTable evaluate_defense(const DefenseSetup& setup, std::span<const LabeledImage> data,
                               const AttackSpec& attack, ThreatKind threat) {
  if (!setup.defended || !setup.set) throw DimensionError("defense evaluation needs a model and a dictionary");
  if (!(attack.budget >= 0.0)) throw DimensionError("attack budget must be >= 0");
  const ToyClassifier& defended = *setup.defended;
  const ToyClassifier& undefended = setup.undefended ? *setup.undefended : defended;
  if (threat == ThreatKind::kBlackBox && !setup.surrogate) {
    throw DimensionError("black-box evaluation needs a surrogate model");
  }
  // The attacker's own draw of the defense randomness.
  constexpr std::uint64_t kAttackerStream = 0x5bd1e9955bd1e995ULL;
  struct Outcome {
    char clean, clean_undefended, attacked, defended;
  };
  std::vector<Outcome> outcome(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const ImageTensor& x = data[i].image;
    const int y = data[i].label;
    const std::uint64_t seed = defense_seed(setup.seed, i);
    const ImageTensor tx = denoise_image(*setup.set, x, setup.denoise, seed).image;

    Vector v_plain(x.size(), 0.0);
    Vector v_def(x.size(), 0.0);
    if (attack.budget > 0.0) {
      switch (threat) {
        case ThreatKind::kBlackBox:
          v_plain = attack_perturbation(*setup.surrogate, x.data, y, attack);
          v_def = v_plain;
          break;
        case ThreatKind::kGreyBox:
          v_plain = attack_perturbation(undefended, x.data, y, attack);
          v_def = attack_perturbation(defended, x.data, y, attack);
          break;
        case ThreatKind::kWhiteBox: {
          v_plain = attack_perturbation(undefended, x.data, y, attack);
          const ImageTensor t_att =
              denoise_image(*setup.set, x, setup.denoise, defense_seed(setup.seed ^ kAttackerStream, i))
                  .image;
          v_def = attack_perturbation(defended, t_att.data, y, attack);
          rescale_to_budget(v_def, x.data, attack.budget);
          break;
        }
      }
    }
    ImageTensor x_plain = x;
    ImageTensor x_def = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
      x_plain.data[j] += v_plain[j];
      x_def.data[j] += v_def[j];
    }
    const ImageTensor t_adv = denoise_image(*setup.set, x_def, setup.denoise, seed).image;
    outcome[i] = {defended.predict(tx.data) == y, undefended.predict(x.data) == y,
                  undefended.predict(x_plain.data) == y, defended.predict(t_adv.data) == y};
  });
  AccuracyTable t;
  t.n = data.size();
  for (const Outcome& o : outcome) {
    t.clean += o.clean;
    t.clean_undefended += o.clean_undefended;
    t.attacked_no_defense += o.attacked;
    t.attacked_with_defense += o.defended;
  }
  if (t.n > 0) {
    const double n = static_cast<double>(t.n);
    t.clean /= n;
    t.clean_undefended /= n;
    t.attacked_no_defense /= n;
    t.attacked_with_defense /= n;
  }
  return t;
}

}  // namespace d3
