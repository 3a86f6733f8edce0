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
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "d3/dictionary.hpp"
#include "d3/error.hpp"
#include "d3/parallel.hpp"

namespace {

using d3::cli::RunConfig;

struct Invocation {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool print_config = false;
  bool quiet = false;
  bool json = false;
};

// Registers a flag whose value is applied to `key` after the config file.
void option(CLI::App* sub, Invocation& inv, const std::string& flag, const std::string& key,
            const std::string& help) {
  sub->add_option_function<std::string>(
         flag, [&inv, key](const std::string& v) { inv.overrides.emplace_back(key, v); }, help)
      ->type_name("<" + key + ">");
}

void toggle(CLI::App* sub, Invocation& inv, const std::string& flag, const std::string& key,
            const std::string& help) {
  sub->add_flag_callback(flag, [&inv, key] { inv.overrides.emplace_back(key, "true"); }, help);
}

void common(CLI::App* sub, Invocation& inv) {
  sub->add_option("--config", inv.config_path, "TOML-style settings file; flags override it");
  option(sub, inv, "--seed", "seed", "global seed");
  option(sub, inv, "--threads", "threads", "worker threads (default: D3_THREADS or all cores)");
  sub->add_flag("--print-config", inv.print_config, "print the effective settings and exit");
  sub->add_flag("-q,--quiet", inv.quiet, "suppress warnings");
}

void denoise_flags(CLI::App* sub, Invocation& inv) {
  option(sub, inv, "--dict", "io.dict", "dictionary file");
  option(sub, inv, "--kappa", "denoise.kappa", "levels used at inference (0 = all)");
  option(sub, inv, "--stride", "denoise.stride", "window stride (0 = P/4)");
  toggle(sub, inv, "--randomize", "denoise.randomize", "randomized atom selection");
  option(sub, inv, "--subsample", "denoise.subsample", "randomized: fraction of atoms considered");
  option(sub, inv, "--top-k", "denoise.top_k", "randomized: pick uniformly among the top k");
}

void learn_flags(CLI::App* sub, Invocation& inv) {
  option(sub, inv, "--corpus", "io.corpus", "directory of training images");
  option(sub, inv, "--patch", "learn.patch", "patch size P");
  option(sub, inv, "--eta", "learn.eta", "atoms per level");
  option(sub, inv, "--learn-kappa", "learn.kappa", "levels to build");
  option(sub, inv, "--eps", "learn.eps", "admission threshold epsilon");
  option(sub, inv, "--saliency", "learn.saliency", "uniform | gradmag | dir:PATH");
  option(sub, inv, "--max-attempts", "learn.max_attempts", "candidate draws per level (0 = 200 * eta)");
}

void metric_flags(CLI::App* sub, Invocation& inv) {
  option(sub, inv, "--noisy", "io.noisy", "perturbed images, matched to the clean ones by file name");
  option(sub, inv, "--delta", "metrics.delta", "matching tolerance on the [0,1] pixel scale");
  option(sub, inv, "--max-images", "metrics.max_images", "seeded subsample size (0 = all)");
  option(sub, inv, "--pair-budget", "metrics.pair_budget", "relative l2 size of generated sign noise");
}

std::optional<d3::DictionarySet> try_load(const std::string& path) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  try {
    return d3::load(path);
  } catch (const d3::Error&) {
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"d3: sparse patch denoising as an adversarial defense"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand help for every subcommand");
  Invocation inv;

  auto* learn = app.add_subcommand("learn", "build the per-level dictionaries from a corpus");
  common(learn, inv);
  learn_flags(learn, inv);
  // learn's own --kappa is the number of levels to build.
  option(learn, inv, "--kappa", "learn.kappa", "levels to build");
  option(learn, inv, "--out", "io.dict", "output dictionary file");
  option(learn, inv, "--report", "io.report", "also write the JSON build report here");

  auto* denoise = app.add_subcommand("denoise", "apply the defense T(x) to an image or a directory");
  common(denoise, inv);
  denoise_flags(denoise, inv);
  option(denoise, inv, "--in", "io.input", "input image or directory");
  option(denoise, inv, "--out", "io.output", "output image or directory");

  auto* metrics = app.add_subcommand("metrics", "matching rate and reconstruction error as JSON");
  common(metrics, inv);
  denoise_flags(metrics, inv);
  metric_flags(metrics, inv);
  option(metrics, inv, "--clean", "io.clean", "clean images");
  toggle(metrics, inv, "--mr-randomized", "metrics.mr_randomized", "use the configured (randomized) mode for MR");

  auto* sweep = app.add_subcommand("sweep", "metrics over kappa, patch size or epsilon; CSV + SVG");
  common(sweep, inv);
  learn_flags(sweep, inv);
  denoise_flags(sweep, inv);
  metric_flags(sweep, inv);
  option(sweep, inv, "--axis", "sweep.axis", "kappa | patch_size | epsilon");
  option(sweep, inv, "--values", "sweep.values", "comma-separated axis values");
  option(sweep, inv, "--images", "io.clean", "evaluation images (default: the corpus)");
  option(sweep, inv, "--out", "io.output", "output prefix for .csv and .svg");

  auto* attack = app.add_subcommand("attack-eval", "accuracy table of a classifier behind the defense");
  common(attack, inv);
  denoise_flags(attack, inv);
  option(attack, inv, "--model", "io.model", "classifier file");
  option(attack, inv, "--undefended", "io.undefended", "classifier used without the defense");
  option(attack, inv, "--surrogate", "io.surrogate", "black-box attacker model");
  option(attack, inv, "--data", "io.data", "labeled images, one subdirectory per class");
  option(attack, inv, "--attack", "attack.kind", "fgsm | deepfool");
  option(attack, inv, "--threat", "attack.threat", "black | grey | white");
  option(attack, inv, "--budget", "attack.budget", "relative l2 budget");
  option(attack, inv, "--max-iter", "attack.max_iter", "DeepFool iterations");
  option(attack, inv, "--overshoot", "attack.overshoot", "DeepFool overshoot");

  auto* inspect = app.add_subcommand("inspect", "dictionary header and per-level atom statistics");
  common(inspect, inv);
  option(inspect, inv, "--dict", "io.dict", "dictionary file");
  inspect->add_flag("--json", inv.json, "JSON output");

  auto* train = app.add_subcommand("train", "fit a toy classifier to a labeled directory");
  common(train, inv);
  denoise_flags(train, inv);
  option(train, inv, "--data", "io.data", "labeled images, one subdirectory per class");
  option(train, inv, "--out", "io.model", "output model file");
  option(train, inv, "--arch", "train.arch", "linear | mlp");
  option(train, inv, "--hidden", "train.hidden", "MLP hidden width");
  option(train, inv, "--epochs", "train.epochs", "epochs");
  option(train, inv, "--lr", "train.lr", "learning rate");
  option(train, inv, "--batch", "train.batch", "minibatch size");
  toggle(train, inv, "--on-transform", "train.on_transform", "fit to T(x) using --dict");

  auto* task = app.add_subcommand("make-task", "write the synthetic 10-class desk task");
  common(task, inv);
  option(task, inv, "--out", "io.output", "output directory (train/ and test/)");
  option(task, inv, "--classes", "task.classes", "number of classes");
  option(task, inv, "--size", "task.size", "image side");
  option(task, inv, "--train-per-class", "task.train_per_class", "training images per class");
  option(task, inv, "--test-per-class", "task.test_per_class", "test images per class");

  auto* crops = app.add_subcommand("crops", "seeded square crops from a directory of photographs");
  common(crops, inv);
  option(crops, inv, "--sources", "io.input", "source images");
  option(crops, inv, "--out", "io.output", "output directory");
  option(crops, inv, "--count", "task.count", "number of crops");
  option(crops, inv, "--size", "task.size", "crop side");
  option(crops, inv, "--split", "task.split", "train | eval (disjoint row bands)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg;
    if (!inv.config_path.empty()) d3::cli::apply_config_file(cfg, inv.config_path);
    for (const auto& [key, value] : inv.overrides) d3::cli::set_value(cfg, key, value);
    if (cfg.threads > 0) d3::set_thread_count(cfg.threads);
    if (inv.quiet) d3::set_log_level(d3::LogLevel::kQuiet);

    if (inv.print_config) {
      const auto set = try_load(cfg.dict);
      std::cout << d3::cli::dump(cfg, set ? &*set : nullptr);
      return 0;
    }
    if (learn->parsed()) return d3::cli::cmd_learn(cfg, std::cout);
    if (denoise->parsed()) return d3::cli::cmd_denoise(cfg, std::cout);
    if (metrics->parsed()) return d3::cli::cmd_metrics(cfg, std::cout);
    if (sweep->parsed()) return d3::cli::cmd_sweep(cfg, std::cout);
    if (attack->parsed()) return d3::cli::cmd_attack_eval(cfg, std::cout);
    if (inspect->parsed()) return d3::cli::cmd_inspect(cfg, std::cout, inv.json);
    if (train->parsed()) return d3::cli::cmd_train(cfg, std::cout);
    if (task->parsed()) return d3::cli::cmd_make_task(cfg, std::cout);
    if (crops->parsed()) return d3::cli::cmd_crops(cfg, std::cout);
  } catch (const d3::Error& e) {
    std::cerr << "d3: error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "d3: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
