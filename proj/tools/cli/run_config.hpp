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
#include <string>
#include <string_view>
#include <vector>

#include "d3/attack.hpp"
#include "d3/dictionary.hpp"
#include "d3/dl.hpp"
#include "d3/mp.hpp"

namespace d3::cli {

// Every setting a subcommand can take. Defaults < config file < flags.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 defers to D3_THREADS, then the hardware

  // [io]
  std::string corpus;
  std::string dict = "dict.d3";
  std::string input;
  std::string output;
  std::string report;
  std::string clean;
  std::string noisy;
  std::string model = "model.d3m";
  std::string undefended;
  std::string surrogate;
  std::string data;

  // [learn]
  int patch = 8;
  int eta = 256;
  int learn_kappa = 2;
  double eps = 0.85;
  std::string saliency = "uniform";
  int max_attempts = 0;
  double center = 0.5;

  // [denoise]
  int kappa = 0;   // 0 uses every level of the dictionary
  int stride = 0;  // 0 resolves to max(1, P/4)
  bool randomize = false;
  double subsample = 0.2;
  int top_k = 2;

  // [metrics]
  double delta = 0.03;
  int max_images = 500;
  double pair_budget = 0.06;
  bool mr_randomized = false;

  // [sweep]
  std::string axis = "kappa";
  std::string values = "1,2,3,4,5";

  // [attack]
  std::string attack = "fgsm";
  std::string threat = "grey";
  double budget = 0.06;
  int max_iter = 50;
  double overshoot = 0.02;

  // [train]
  std::string arch = "mlp";
  int hidden = 32;
  int epochs = 30;
  double lr = 0.05;
  int batch = 16;
  bool on_transform = false;  // fit to T(x) of the training images

  // [task]
  int classes = 10;
  int size = 48;
  int train_per_class = 20;
  int test_per_class = 20;
  int count = 500;
  std::string split = "train";
};

/// Keys in dump order, as "section.name" (globals have no section).
std::vector<std::string> config_keys();

/// Sets one key from its textual value. Throws FormatError on unknown keys
/// or unparsable values.
void set_value(RunConfig& cfg, std::string_view key, std::string_view text);
std::string get_value(const RunConfig& cfg, std::string_view key);

/// Reads a TOML-style file: [section] headers, key = value lines, # comments,
/// quoted or bare strings, true/false booleans.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Replaces settings that resolve from others (stride from the patch size)
/// by their resolved values. The patch size comes from the dictionary when
/// one is given.
RunConfig resolve(const RunConfig& cfg, const DictionarySet* set = nullptr);

/// Every resolved setting in the config-file syntax. Parsing a dump and
/// dumping again yields the same text. With a dictionary, its provenance is
/// appended as comments.
std::string dump(const RunConfig& cfg, const DictionarySet* set = nullptr);

LearnConfig learn_config(const RunConfig& cfg);
DenoiseConfig denoise_config(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg);
AttackSpec attack_spec(const RunConfig& cfg);

}  // namespace d3::cli
