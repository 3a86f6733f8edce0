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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "d3/attack.hpp"
#include "d3/image.hpp"
#include "run_config.hpp"

namespace d3::cli {

struct NamedImage {
  std::string name;  // file name within its directory
  ImageTensor image;
};

std::vector<NamedImage> load_image_dir(const std::filesystem::path& dir);

/// A labeled set stored as one subdirectory per class; labels follow the
/// sorted subdirectory names.
std::vector<LabeledImage> load_labeled_dir(const std::filesystem::path& dir);
void write_labeled_dir(std::span<const LabeledImage> data, int classes, const std::filesystem::path& dir);

// Each command writes its primary output (JSON, CSV or text) to out and
// returns the process exit code. Library errors propagate as d3::Error.
int cmd_learn(const RunConfig& cfg, std::ostream& out);
int cmd_denoise(const RunConfig& cfg, std::ostream& out);
int cmd_metrics(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_attack_eval(const RunConfig& cfg, std::ostream& out);
int cmd_inspect(const RunConfig& cfg, std::ostream& out, bool json);
int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_make_task(const RunConfig& cfg, std::ostream& out);
int cmd_crops(const RunConfig& cfg, std::ostream& out);

}  // namespace d3::cli
