// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fisher/config.hpp"

#include <functional>

#include "fisher/csv.hpp"

namespace fisher {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::string type;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Section, class T>
Field number(Section RunConfig::*section, T Section::*member) {
  Field f;
  f.type = std::is_integral_v<T> ? "int" : "real";
  f.set = [=](RunConfig& c, const std::string& v) {
    try {
      if constexpr (std::is_integral_v<T>) {
        const long long x = parse_int(v, "value");
        if (std::is_unsigned_v<T> && x < 0) throw UsageError("must be non-negative");
        (c.*section).*member = static_cast<T>(x);
      } else {
        (c.*section).*member = parse_double(v, "value");
      }
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  };
  f.get = [=](const RunConfig& c) {
    if constexpr (std::is_integral_v<T>) return std::to_string((c.*section).*member);
    else return format_double((c.*section).*member);
  };
  return f;
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["model.depth"] = number(&RunConfig::model, &ModelConfig::depth);
    t["model.hidden"] = number(&RunConfig::model, &ModelConfig::hidden);
    t["model.heads"] = number(&RunConfig::model, &ModelConfig::heads);
    t["model.mlp_ratio"] = number(&RunConfig::model, &ModelConfig::mlp_ratio);
    t["model.patch"] = number(&RunConfig::model, &ModelConfig::patch);
    t["model.decoder_depth"] = number(&RunConfig::model, &ModelConfig::decoder_depth);
    t["model.decoder_kernel"] = number(&RunConfig::model, &ModelConfig::decoder_kernel);
    t["model.norm_eps"] = number(&RunConfig::model, &ModelConfig::norm_eps);
    t["stft.t_win"] = number(&RunConfig::stft, &StftConfig::t_win);
    t["stft.t_hop"] = number(&RunConfig::stft, &StftConfig::t_hop);
    t["stft.f_base"] = number(&RunConfig::stft, &StftConfig::f_base);
    t["stft.f_max"] = number(&RunConfig::stft, &StftConfig::f_max);
    t["train.steps"] = number(&RunConfig::train, &TrainConfig::steps);
    t["train.warmup_steps"] = number(&RunConfig::train, &TrainConfig::warmup_steps);
    t["train.peak_lr"] = number(&RunConfig::train, &TrainConfig::peak_lr);
    t["train.batch_size"] = number(&RunConfig::train, &TrainConfig::batch_size);
    t["train.clones_per_band"] = number(&RunConfig::train, &TrainConfig::clones_per_band);
    t["train.max_clones"] = number(&RunConfig::train, &TrainConfig::max_clones);
    t["train.mask_ratio"] = number(&RunConfig::train, &TrainConfig::mask_ratio);
    t["train.tau_start"] = number(&RunConfig::train, &TrainConfig::tau_start);
    t["train.tau_end"] = number(&RunConfig::train, &TrainConfig::tau_end);
    t["train.tau_ramp_steps"] = number(&RunConfig::train, &TrainConfig::tau_ramp_steps);
    t["train.beta1"] = number(&RunConfig::train, &TrainConfig::beta1);
    t["train.beta2"] = number(&RunConfig::train, &TrainConfig::beta2);
    t["train.adam_eps"] = number(&RunConfig::train, &TrainConfig::adam_eps);
    t["train.weight_decay"] = number(&RunConfig::train, &TrainConfig::weight_decay);
    t["train.grad_clip"] = number(&RunConfig::train, &TrainConfig::grad_clip);
    t["train.checkpoint_every"] = number(&RunConfig::train, &TrainConfig::checkpoint_every);
    t["train.seed"] = number(&RunConfig::train, &TrainConfig::seed);
    t["train.threads"] = number(&RunConfig::train, &TrainConfig::threads);
    t["eval.k"] = number(&RunConfig::eval, &EvalConfig::k);
    t["eval.train_ratio"] = number(&RunConfig::eval, &EvalConfig::train_ratio);
    t["eval.max_fpr"] = number(&RunConfig::eval, &EvalConfig::max_fpr);
    Field level;
    level.type = "string";
    level.set = [](RunConfig& c, const std::string& v) {
      if (v != "debug" && v != "info" && v != "warn" && v != "error")
        throw UsageError("log level must be debug, info, warn or error");
      c.log_level = v;
    };
    level.get = [](const RunConfig& c) { return c.log_level; };
    t["run.log_level"] = level;
    return t;
  }();
  return table;
}

// Shared by the three published scales.
KeyValues released_scale(const std::string& hidden, const std::string& heads, const std::string& f_base,
                         const std::string& batch, const std::string& m_b) {
  return {{"model.depth", "12"},
          {"model.hidden", hidden},
          {"model.heads", heads},
          {"model.patch", "16"},
          {"stft.t_win", "0.025"},
          {"stft.t_hop", "0.01"},
          {"stft.f_base", f_base},
          {"stft.f_max", "32000"},
          {"train.steps", "400000"},
          {"train.warmup_steps", "40000"},
          {"train.peak_lr", "0.0005"},
          {"train.batch_size", batch},
          {"train.max_clones", m_b},
          {"train.clones_per_band", "16"},
          {"train.mask_ratio", "0.8"},
          {"train.tau_start", "0.9998"},
          {"train.tau_end", "0.99999"},
          {"train.tau_ramp_steps", "100000"},
          {"train.checkpoint_every", "10000"}};
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& where) {
  KeyValues out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string at = where + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw UsageError(at + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(at + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) throw UsageError(at + ": repeated key '" + key + "'");
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return parse_key_values(text, path.string());
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + text + "' is not key=value");
  const std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw UsageError("override '" + text + "' has an empty key");
  return {key, trim(text.substr(eq + 1))};
}

void RunConfig::validate() const {
  model.validate();
  stft.validate();
  train.validate();
  if (eval.k < 0) throw UsageError("eval.k must be >= 0");
  if (eval.train_ratio != 0.0 && !(eval.train_ratio > 0.0 && eval.train_ratio < 1.0))
    throw UsageError("eval.train_ratio must be 0 (dataset default) or lie in (0, 1)");
  if (!(eval.max_fpr > 0.0 && eval.max_fpr <= 1.0)) throw UsageError("eval.max_fpr must lie in (0, 1]");
  if (stft.bandwidth() < model.patch) throw UsageError("sub-band width is narrower than one patch");
}

std::vector<std::string> preset_names() { return {"desk-tiny", "tiny", "mini", "small"}; }

KeyValues preset_values(const std::string& name) {
  if (name == "tiny") return released_scale("192", "3", "4000", "24", "64");
  if (name == "mini") return released_scale("256", "4", "4000", "32", "64");
  if (name == "small") return released_scale("384", "6", "2000", "16", "128");
  if (name == "desk-tiny")
    return {{"model.depth", "2"},           {"model.hidden", "32"},         {"model.heads", "2"},
            {"model.patch", "16"},          {"stft.t_win", "0.025"},        {"stft.t_hop", "0.01"},
            {"stft.f_base", "4000"},        {"stft.f_max", "32000"},        {"train.steps", "300"},
            {"train.warmup_steps", "30"},   {"train.peak_lr", "0.0005"},    {"train.batch_size", "8"},
            {"train.clones_per_band", "2"}, {"train.max_clones", "32"},     {"train.mask_ratio", "0.8"},
            {"train.tau_start", "0.999"},   {"train.tau_end", "0.999"},     {"train.tau_ramp_steps", "0"},
            {"train.checkpoint_every", "100"}};
  throw UsageError("unknown preset '" + name + "' (known: desk-tiny, tiny, mini, small)");
}

const std::map<std::string, std::string>& config_schema() {
  static const std::map<std::string, std::string> schema = [] {
    std::map<std::string, std::string> s;
    for (const auto& [k, f] : fields()) s[k] = f.type;
    return s;
  }();
  return schema;
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw UsageError("unknown config key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const UsageError& e) {
    throw UsageError(key + ": " + e.what());
  }
}

RunConfig resolve_config(const std::string& preset, const std::filesystem::path& file,
                         const std::vector<std::string>& overrides) {
  RunConfig config;
  KeyValues from_file;
  if (!file.empty()) from_file = read_key_values(file);
  std::string name = preset;
  if (const auto it = from_file.find("preset"); it != from_file.end()) {
    if (name.empty()) name = it->second;
    from_file.erase(it);
  }
  if (!name.empty()) {
    for (const auto& [k, v] : preset_values(name)) apply_config_value(config, k, v);
    config.preset = name;
  }
  for (const auto& [k, v] : from_file) apply_config_value(config, k, v);
  for (const auto& o : overrides) {
    const auto [k, v] = split_assignment(o);
    apply_config_value(config, k, v);
  }
  config.validate();
  return config;
}

KeyValues config_values(const RunConfig& config) {
  KeyValues out;
  for (const auto& [k, f] : fields()) out[k] = f.get(config);
  return out;
}

}  // namespace fisher
