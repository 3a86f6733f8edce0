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
#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "d3/desk.hpp"
#include "d3/dictionary.hpp"
#include "d3/dl.hpp"
#include "d3/error.hpp"
#include "d3/image_io.hpp"
#include "d3/metrics.hpp"
#include "d3/mp.hpp"
#include "d3/parallel.hpp"
#include "d3/saliency.hpp"
#include "json.hpp"
#include "svg_chart.hpp"

namespace d3::cli {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw IoError(std::string("missing required ") + flag);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw IoError("cannot write " + path.string());
  }
}

std::vector<ImageTensor> images_of(std::vector<NamedImage>&& named) {
  std::vector<ImageTensor> out;
  out.reserve(named.size());
  for (NamedImage& n : named) out.push_back(std::move(n.image));
  return out;
}

std::unique_ptr<SaliencyProvider> make_saliency(const std::string& spec,
                                                const std::vector<NamedImage>& corpus) {
  if (spec == "uniform") return std::make_unique<UniformSaliency>();
  if (spec == "gradmag") return std::make_unique<GradientMagnitudeSaliency>();
  if (spec.rfind("dir:", 0) == 0) {
    std::vector<std::string> ids;
    for (const NamedImage& n : corpus) ids.push_back(fs::path(n.name).stem().string());
    return std::make_unique<DirectorySaliency>(spec.substr(4), std::move(ids));
  }
  throw FormatError("unknown saliency '" + spec + "' (expected uniform, gradmag or dir:PATH)");
}

// Keeps at most cfg.max_images entries, chosen by a seeded shuffle and
// returned in their original order.
std::vector<std::size_t> sample_indices(std::size_t n, const RunConfig& cfg) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t keep = cfg.max_images > 0 ? static_cast<std::size_t>(cfg.max_images) : n;
  if (n <= keep) return idx;
  Rng rng(mix_seed(cfg.seed ^ 0x6d657472ULL));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<ImagePair> synthetic_pairs(std::span<const ImageTensor> images, const RunConfig& cfg) {
  std::vector<ImagePair> pairs;
  pairs.reserve(images.size());
  Rng rng(mix_seed(cfg.seed ^ 0x70616972ULL));
  for (const ImageTensor& img : images) {
    pairs.push_back({img, desk::perturb_sign(img, cfg.pair_budget, rng)});
  }
  return pairs;
}

std::vector<ImagePair> paired_dirs(const std::vector<NamedImage>& clean, const fs::path& noisy_dir) {
  std::vector<ImagePair> pairs;
  pairs.reserve(clean.size());
  for (const NamedImage& c : clean) {
    const fs::path p = noisy_dir / c.name;
    if (!fs::exists(p)) throw IoError("no perturbed counterpart for " + c.name + " in " + noisy_dir.string());
    ImageTensor noisy = read_image(p);
    if (!noisy.same_shape(c.image)) throw DimensionError("shape mismatch between clean and perturbed " + c.name);
    pairs.push_back({c.image, std::move(noisy)});
  }
  return pairs;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, end - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size()) {
      throw FormatError("bad sweep value '" + item + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

Json report_json(const MetricsReport& r) {
  Json j;
  j["mr"] = r.mr;
  j["re"] = r.re;
  j["one_minus_re"] = 1.0 - r.re;
  j["n_images"] = r.n_images;
  j["patches_per_image"] = r.n_patches_per_image;
  j["delta"] = r.delta;
  j["fingerprint"] = r.fingerprint;
  return j;
}

}  // namespace

std::vector<NamedImage> load_image_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<NamedImage> out;
  for (const fs::path& p : list_images(dir)) out.push_back({p.filename().string(), read_image(p)});
  if (out.empty()) throw IoError("no images in " + dir.string());
  return out;
}

std::vector<LabeledImage> load_labeled_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw IoError("no class subdirectories in " + dir.string());
  std::vector<LabeledImage> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const fs::path& p : list_images(classes[c])) out.push_back({read_image(p), static_cast<int>(c)});
  }
  if (out.empty()) throw IoError("no images in " + dir.string());
  return out;
}

void write_labeled_dir(std::span<const LabeledImage> data, int classes, const fs::path& dir) {
  std::vector<int> counter(static_cast<std::size_t>(classes), 0);
  char name[32];
  for (const LabeledImage& s : data) {
    std::snprintf(name, sizeof name, "%02d", s.label);
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    std::snprintf(name, sizeof name, "%05d.png", counter[static_cast<std::size_t>(s.label)]++);
    write_image(s.image, sub / name);
  }
}

int cmd_learn(const RunConfig& cfg, std::ostream& out) {
  require(cfg.corpus, "--corpus");
  const std::vector<NamedImage> named = load_image_dir(cfg.corpus);
  const auto saliency = make_saliency(cfg.saliency, named);
  std::vector<ImageTensor> corpus;
  for (const NamedImage& n : named) corpus.push_back(n.image);

  const LearnResult result = learn_dictionaries(corpus, *saliency, learn_config(cfg));
  save(result.set, cfg.dict);

  Json j;
  j["output"] = cfg.dict;
  j["patch_size"] = cfg.patch;
  j["eta"] = cfg.eta;
  j["kappa"] = cfg.learn_kappa;
  j["epsilon"] = cfg.eps;
  j["saliency"] = saliency->name();
  j["seed"] = cfg.seed;
  j["corpus_images"] = corpus.size();
  j["corpus_hash"] = hex64(result.set.corpus_hash);
  j["levels"] = Json::array();
  for (const LevelReport& r : result.levels) {
    j["levels"].push_back({{"level", r.level},
                           {"admitted", r.admitted},
                           {"rejected", r.rejected},
                           {"zero_skipped", r.zero_skipped},
                           {"attempts", r.attempts},
                           {"last_rejection_ratio", r.last_rejection_ratio}});
  }
  const std::string text = j.dump(2) + "\n";
  if (!cfg.report.empty()) write_text(cfg.report, text);
  out << text;
  return 0;
}

int cmd_denoise(const RunConfig& cfg, std::ostream& out) {
  require(cfg.input, "--in");
  require(cfg.output, "--out");
  const DictionarySet set = load(cfg.dict);
  const DenoiseConfig dc = denoise_config(cfg);
  dc.validate(set);

  const bool batch = fs::is_directory(cfg.input);
  std::vector<fs::path> inputs;
  if (batch) {
    inputs = list_images(cfg.input);
    if (inputs.empty()) throw IoError("no images in " + cfg.input);
    fs::create_directories(cfg.output);
  } else {
    if (!fs::exists(cfg.input)) throw IoError("no such file: " + cfg.input);
    inputs.push_back(cfg.input);
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ImageTensor x = read_image(inputs[i]);
    const DenoiseResult r = denoise_image(set, x, dc, defense_seed(cfg.seed, i));
    if (r.uncovered_pixels > 0) {
      log_warning(inputs[i].filename().string() + ": " + std::to_string(r.uncovered_pixels) +
                  " margin pixels not covered by any window were copied unchanged");
    }
    const fs::path target = batch ? fs::path(cfg.output) / inputs[i].filename() : fs::path(cfg.output);
    write_image(r.image, target);
    Vector diff(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x.data[k] - r.image.data[k];
    const double nx = l2_norm(x.data);
    char line[64];
    std::snprintf(line, sizeof line, "%.6f", nx > 0.0 ? l2_norm(diff) / nx : 0.0);
    out << inputs[i].filename().string() << " relative_residual=" << line << "\n";
  }
  return 0;
}

int cmd_metrics(const RunConfig& cfg, std::ostream& out) {
  require(cfg.clean, "--clean");
  const DictionarySet set = load(cfg.dict);
  const DenoiseConfig dc = denoise_config(cfg);
  dc.validate(set);

  std::vector<NamedImage> named = load_image_dir(cfg.clean);
  std::vector<NamedImage> kept;
  for (std::size_t i : sample_indices(named.size(), cfg)) kept.push_back(std::move(named[i]));
  std::vector<ImagePair> pairs;
  if (!cfg.noisy.empty()) {
    pairs = paired_dirs(kept, cfg.noisy);
  }
  const std::vector<ImageTensor> images = images_of(std::move(kept));
  if (cfg.noisy.empty()) pairs = synthetic_pairs(images, cfg);

  MetricsReport r = evaluate_metrics(set, dc, images, pairs);
  if (cfg.mr_randomized) r.mr = matching_rate(set, dc, pairs, cfg.delta, true);
  Json j = report_json(r);
  j["pairs"] = cfg.noisy.empty() ? "synthetic sign noise, budget " + std::to_string(cfg.pair_budget) : cfg.noisy;
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const SweepAxis axis = parse_sweep_axis(cfg.axis);
  const std::vector<double> values = parse_values(cfg.values);

  std::vector<ImageTensor> corpus;
  std::unique_ptr<SaliencyProvider> saliency;
  std::optional<DictionarySet> prebuilt;
  if (!cfg.corpus.empty()) {
    std::vector<NamedImage> named = load_image_dir(cfg.corpus);
    saliency = make_saliency(cfg.saliency, named);
    corpus = images_of(std::move(named));
  } else if (axis == SweepAxis::kKappa) {
    prebuilt = load(cfg.dict);
  } else {
    throw IoError("missing required --corpus (this axis rebuilds dictionaries)");
  }

  std::vector<NamedImage> named;
  if (!cfg.clean.empty()) {
    named = load_image_dir(cfg.clean);
  } else if (!cfg.corpus.empty()) {
    named = load_image_dir(cfg.corpus);
  } else {
    throw IoError("missing required --images");
  }
  std::vector<NamedImage> kept;
  for (std::size_t i : sample_indices(named.size(), cfg)) kept.push_back(std::move(named[i]));
  std::vector<ImagePair> pairs;
  if (!cfg.noisy.empty()) pairs = paired_dirs(kept, cfg.noisy);
  const std::vector<ImageTensor> images = images_of(std::move(kept));
  if (cfg.noisy.empty()) pairs = synthetic_pairs(images, cfg);

  SweepSetup setup;
  setup.corpus = corpus;
  setup.saliency = saliency.get();
  setup.learn = learn_config(cfg);
  setup.denoise = denoise_config(cfg);
  setup.images = images;
  setup.pairs = pairs;
  setup.prebuilt = prebuilt ? &*prebuilt : nullptr;
  const std::vector<SweepPoint> points = metric_sweep(setup, axis, values);

  const std::string csv = sweep_csv(axis, points);
  const std::string prefix = cfg.output.empty() ? "sweep" : cfg.output;
  write_text(prefix + ".csv", csv);

  Series mr{"MR", {}, "#1f77b4"};
  Series quality{"1 - RE", {}, "#d62728"};
  std::size_t failed = 0;
  for (const SweepPoint& p : points) {
    mr.y.push_back(p.report ? p.report->mr : std::nan(""));
    quality.y.push_back(p.report ? 1.0 - p.report->re : std::nan(""));
    if (!p.report) {
      ++failed;
      log_warning(to_string(axis) + "=" + std::to_string(p.value) + " failed: " + p.error);
    }
  }
  write_text(prefix + ".svg", svg_line_chart("metrics vs " + to_string(axis), to_string(axis), values,
                                             {mr, quality}));
  out << csv;
  // Per-point failures are reported in the table; the command itself fails
  // only when nothing could be measured.
  return failed == points.size() && !points.empty() ? static_cast<int>(ErrorKind::kLearning) : 0;
}

int cmd_attack_eval(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  const DictionarySet set = load(cfg.dict);
  const ToyClassifier model = load_model(cfg.model);
  std::optional<ToyClassifier> undefended, surrogate;
  if (!cfg.undefended.empty()) undefended = load_model(cfg.undefended);
  if (!cfg.surrogate.empty()) surrogate = load_model(cfg.surrogate);
  const std::vector<LabeledImage> data = load_labeled_dir(cfg.data);

  DefenseSetup setup;
  setup.defended = &model;
  setup.undefended = undefended ? &*undefended : nullptr;
  setup.surrogate = surrogate ? &*surrogate : nullptr;
  setup.set = &set;
  setup.denoise = denoise_config(cfg);
  setup.denoise.validate(set);
  setup.seed = cfg.seed;
  const ThreatKind threat = parse_threat(cfg.threat);
  const AttackSpec spec = attack_spec(cfg);
  const AccuracyTable t = evaluate_defense(setup, data, spec, threat);

  Json j;
  j["attack"] = to_string(spec.kind);
  j["threat"] = to_string(threat);
  j["budget"] = spec.budget;
  j["randomized"] = cfg.randomize;
  j["n"] = t.n;
  j["clean"] = t.clean;
  j["clean_undefended"] = t.clean_undefended;
  j["attacked_no_defense"] = t.attacked_no_defense;
  j["attacked_with_defense"] = t.attacked_with_defense;
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out, bool json) {
  const DictionarySet set = load(cfg.dict);
  const std::vector<LevelStats> stats = level_stats(set);
  if (json) {
    Json j;
    j["file"] = cfg.dict;
    j["patch_size"] = set.patch_size;
    j["channels"] = set.channels;
    j["kappa"] = set.kappa();
    j["corpus_hash"] = hex64(set.corpus_hash);
    j["seed"] = set.seed;
    j["levels"] = Json::array();
    for (const LevelStats& s : stats) {
      j["levels"].push_back({{"level", s.level},
                             {"atoms", s.atoms},
                             {"min_norm", s.min_norm},
                             {"max_norm", s.max_norm},
                             {"mean_norm", s.mean_norm},
                             {"max_coherence", s.max_coherence}});
    }
    out << j.dump(2) << "\n";
    return 0;
  }
  char line[160];
  out << "file        " << cfg.dict << "\n";
  out << "patch size  " << set.patch_size << "\nchannels    " << set.channels << "\nlevels      " << set.kappa()
      << "\ncorpus hash " << hex64(set.corpus_hash) << "\nseed        " << set.seed << "\n\n";
  out << "level  atoms  min_norm  max_norm  mean_norm  max_coherence\n";
  for (const LevelStats& s : stats) {
    std::snprintf(line, sizeof line, "%5d  %5zu  %8.6f  %8.6f  %9.6f  %13.6f\n", s.level, s.atoms, s.min_norm,
                  s.max_norm, s.mean_norm, s.max_coherence);
    out << line;
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require(cfg.data, "--data");
  std::vector<LabeledImage> data = load_labeled_dir(cfg.data);
  if (cfg.on_transform) data = transform_dataset(load(cfg.dict), denoise_config(cfg), data, cfg.seed);
  const TrainResult r = train_toy(data, train_config(cfg));
  save_model(r.model, cfg.model);
  Json j;
  j["output"] = cfg.model;
  j["architecture"] = cfg.arch;
  j["samples"] = data.size();
  j["epochs"] = r.epoch_loss.size();
  j["final_loss"] = r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back();
  j["train_accuracy"] = accuracy(r.model, data);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_make_task(const RunConfig& cfg, std::ostream& out) {
  require(cfg.output, "--out");
  desk::TaskConfig tc;
  tc.classes = cfg.classes;
  tc.size = cfg.size;
  const desk::Task task = desk::make_task(tc, static_cast<std::size_t>(cfg.train_per_class),
                                          static_cast<std::size_t>(cfg.test_per_class), cfg.seed);
  write_labeled_dir(task.train, tc.classes, fs::path(cfg.output) / "train");
  write_labeled_dir(task.test, tc.classes, fs::path(cfg.output) / "test");
  out << "wrote " << task.train.size() << " train and " << task.test.size() << " test images to " << cfg.output
      << "\n";
  return 0;
}

int cmd_crops(const RunConfig& cfg, std::ostream& out) {
  require(cfg.input, "--sources");
  require(cfg.output, "--out");
  const std::vector<ImageTensor> sources = desk::load_sources(cfg.input);
  if (cfg.split != "train" && cfg.split != "eval") {
    throw FormatError("unknown split '" + cfg.split + "' (expected train or eval)");
  }
  const desk::Split split = cfg.split == "eval" ? desk::Split::kEval : desk::Split::kTrain;
  const std::vector<ImageTensor> crops =
      desk::crops(sources, static_cast<std::size_t>(cfg.count), cfg.size, split, cfg.seed);
  fs::create_directories(cfg.output);
  char name[32];
  for (std::size_t i = 0; i < crops.size(); ++i) {
    std::snprintf(name, sizeof name, "%05zu.png", i);
    write_image(crops[i], fs::path(cfg.output) / name);
  }
  out << "wrote " << crops.size() << " crops to " << cfg.output << "\n";
  return 0;
}

}  // namespace d3::cli
