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
#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <variant>

#include "d3/error.hpp"
#include "d3/patches.hpp"

namespace d3::cli {
namespace {

using Member = std::variant<int RunConfig::*, std::uint64_t RunConfig::*, double RunConfig::*,
                            bool RunConfig::*, std::string RunConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"seed", &RunConfig::seed},
      {"threads", &RunConfig::threads},
      {"io.corpus", &RunConfig::corpus},
      {"io.dict", &RunConfig::dict},
      {"io.input", &RunConfig::input},
      {"io.output", &RunConfig::output},
      {"io.report", &RunConfig::report},
      {"io.clean", &RunConfig::clean},
      {"io.noisy", &RunConfig::noisy},
      {"io.model", &RunConfig::model},
      {"io.undefended", &RunConfig::undefended},
      {"io.surrogate", &RunConfig::surrogate},
      {"io.data", &RunConfig::data},
      {"learn.patch", &RunConfig::patch},
      {"learn.eta", &RunConfig::eta},
      {"learn.kappa", &RunConfig::learn_kappa},
      {"learn.eps", &RunConfig::eps},
      {"learn.saliency", &RunConfig::saliency},
      {"learn.max_attempts", &RunConfig::max_attempts},
      {"learn.center", &RunConfig::center},
      {"denoise.kappa", &RunConfig::kappa},
      {"denoise.stride", &RunConfig::stride},
      {"denoise.randomize", &RunConfig::randomize},
      {"denoise.subsample", &RunConfig::subsample},
      {"denoise.top_k", &RunConfig::top_k},
      {"metrics.delta", &RunConfig::delta},
      {"metrics.max_images", &RunConfig::max_images},
      {"metrics.pair_budget", &RunConfig::pair_budget},
      {"metrics.mr_randomized", &RunConfig::mr_randomized},
      {"sweep.axis", &RunConfig::axis},
      {"sweep.values", &RunConfig::values},
      {"attack.kind", &RunConfig::attack},
      {"attack.threat", &RunConfig::threat},
      {"attack.budget", &RunConfig::budget},
      {"attack.max_iter", &RunConfig::max_iter},
      {"attack.overshoot", &RunConfig::overshoot},
      {"train.arch", &RunConfig::arch},
      {"train.hidden", &RunConfig::hidden},
      {"train.epochs", &RunConfig::epochs},
      {"train.lr", &RunConfig::lr},
      {"train.batch", &RunConfig::batch},
      {"train.on_transform", &RunConfig::on_transform},
      {"task.classes", &RunConfig::classes},
      {"task.size", &RunConfig::size},
      {"task.train_per_class", &RunConfig::train_per_class},
      {"task.test_per_class", &RunConfig::test_per_class},
      {"task.count", &RunConfig::count},
      {"task.split", &RunConfig::split},
  };
  return table;
}

const Field& find(std::string_view key) {
  for (const Field& f : fields()) {
    if (key == f.key) return f;
  }
  throw FormatError("unknown setting '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw FormatError("setting '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ec == std::errc() ? end : buf);
  // Keep a decimal point so the type reads unambiguously.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

// Strips a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && in_quote) {
      ++i;
    } else if (line[i] == '"') {
      in_quote = !in_quote;
    } else if (line[i] == '#' && !in_quote) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(std::string_view key, std::string_view v) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') return std::string(v);
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\') {
      if (i + 2 >= v.size()) throw FormatError("setting '" + std::string(key) + "': dangling escape");
      ++i;
    }
    out += v[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view raw) {
  const Field& f = find(key);
  const std::string_view text = trim(raw);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          cfg.*member = unquote(key, text);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            cfg.*member = true;
          } else if (text == "false" || text == "0") {
            cfg.*member = false;
          } else {
            throw FormatError("setting '" + std::string(key) + "': expected true or false, got '" +
                              std::string(text) + "'");
          }
        } else {
          cfg.*member = parse_number<T>(key, text);
        }
      },
      f.member);
}

std::string get_value(const RunConfig& cfg, std::string_view key) {
  const Field& f = find(key);
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = cfg.*member;
        using T = std::remove_cvref_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return quote(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          return std::to_string(v);
        }
      },
      f.member);
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string_view body = trim(strip_comment(line));
    if (body.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']') throw FormatError(where + "unterminated section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw FormatError(where + "expected key = value");
    const std::string name(trim(body.substr(0, eq)));
    const std::string key = section.empty() ? name : section + "." + name;
    try {
      set_value(cfg, key, body.substr(eq + 1));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path);
}

RunConfig resolve(const RunConfig& cfg, const DictionarySet* set) {
  RunConfig out = cfg;
  const int patch = set ? set->patch_size : cfg.patch;
  if (out.stride <= 0) out.stride = default_stride(patch);
  return out;
}

std::string dump(const RunConfig& cfg, const DictionarySet* set) {
  const RunConfig r = resolve(cfg, set);
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot == std::string::npos ? 0 : dot + 1) + " = " + get_value(r, key) + "\n";
  }
  if (set) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(set->corpus_hash));
    out += "\n# dictionary: P=" + std::to_string(set->patch_size) + " C=" + std::to_string(set->channels) +
           " kappa=" + std::to_string(set->kappa()) + " corpus_hash=" + hash +
           " seed=" + std::to_string(set->seed) + "\n";
  }
  return out;
}

LearnConfig learn_config(const RunConfig& cfg) {
  LearnConfig lc;
  lc.patch_size = cfg.patch;
  lc.eta = cfg.eta;
  lc.kappa = cfg.learn_kappa;
  lc.epsilon = cfg.eps;
  lc.max_attempts = cfg.max_attempts;
  lc.seed = cfg.seed;
  lc.center = cfg.center;
  return lc;
}

DenoiseConfig denoise_config(const RunConfig& cfg) {
  DenoiseConfig dc;
  dc.kappa = cfg.kappa;
  dc.stride = cfg.stride;
  dc.mr_delta = cfg.delta;
  dc.center = cfg.center;
  if (cfg.randomize) dc.mode = Randomized{cfg.subsample, cfg.top_k, cfg.seed};
  return dc;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  if (cfg.arch == "linear") {
    tc.arch = Architecture::kLinear;
  } else if (cfg.arch == "mlp") {
    tc.arch = Architecture::kMlp;
  } else {
    throw FormatError("unknown architecture '" + cfg.arch + "' (expected linear or mlp)");
  }
  tc.hidden = cfg.hidden;
  tc.epochs = cfg.epochs;
  tc.learning_rate = cfg.lr;
  tc.batch_size = cfg.batch;
  tc.seed = cfg.seed;
  return tc;
}

AttackSpec attack_spec(const RunConfig& cfg) {
  AttackSpec spec;
  spec.kind = parse_attack(cfg.attack);
  spec.budget = cfg.budget;
  spec.max_iter = cfg.max_iter;
  spec.overshoot = cfg.overshoot;
  return spec;
}

}  // namespace d3::cli
