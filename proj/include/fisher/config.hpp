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

#ifndef FISHER_CONFIG_HPP_
#define FISHER_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fisher/model.hpp"
#include "fisher/signal.hpp"
#include "fisher/trainer.hpp"

namespace fisher {

/// Ordered `key = value` pairs with dotted keys.
using KeyValues = std::map<std::string, std::string>;

// Text format: one `key = value` per line, `#` starts a comment, blank lines
// ignored, surrounding whitespace trimmed. A repeated key is an error.
KeyValues parse_key_values(const std::string& text, const std::string& where);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& values);

/// Splits `key=value`; throws UsageError without '='.
std::pair<std::string, std::string> split_assignment(const std::string& text);

/// Evaluation knobs. Zero means "use the dataset protocol default".
struct EvalConfig {
  int k = 0;
  double train_ratio = 0.0;
  double max_fpr = 0.1;
};

struct RunConfig {
  std::string preset;
  ModelConfig model;
  StftConfig stft;
  TrainConfig train;
  EvalConfig eval;
  std::string log_level = "info";

  void validate() const;
};

std::vector<std::string> preset_names();
/// Key-value overlay of a named preset. Throws UsageError on unknown names.
KeyValues preset_values(const std::string& name);

/// Every schema key with its type tag ("int", "real", "string").
const std::map<std::string, std::string>& config_schema();

/// Applies one key. Throws UsageError on unknown keys or malformed values.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Layers defaults < preset < file < overrides. The preset comes from
/// `preset` when non-empty, else from a `preset` key in the file. Overrides
/// are `key=value` strings.
RunConfig resolve_config(const std::string& preset, const std::filesystem::path& file,
                         const std::vector<std::string>& overrides);

/// Full resolved configuration, one entry per schema key.
KeyValues config_values(const RunConfig& config);

}  // namespace fisher

#endif  // FISHER_CONFIG_HPP_
