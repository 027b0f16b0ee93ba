// Copyright 2026 The PRF Authors
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

// JSON run configuration shared by the command-line tool.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prf/harness.hpp"
#include "prf/scenario.hpp"
#include "prf/windowing.hpp"

namespace prf {

struct RunConfig {
  GenConfig data;
  TrainConfig train;
  std::vector<int> lengths;  // empty: all admissible lengths
  LengthPolicy length_policy = LengthPolicy::Truncate;

  /// Copies the shared horizons from `data` into the model config.
  void sync();
  void validate() const;
  std::vector<int> eval_lengths() const;
};

/// Sections "data", "model", "train", "eval"; every key is optional.
/// Unknown keys and ill-typed values raise ConfigError("section.key").
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

/// "10,20,30" -> {10, 20, 30}.
std::vector<int> parse_lengths(const std::string& text);

}  // namespace prf
