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

#pragma once

#include <cstdint>
#include <string>

namespace prf {

enum class MixerKind { SelectiveRecurrence, Gru, Attention };

MixerKind parse_mixer(const std::string& name);
std::string to_string(MixerKind kind);

/// Map context used by the distillation branches: per-agent attention over
/// polylines, or one scene-wide mean of polyline features.
enum class MapContext { AgentWise, PooledMap };

MapContext parse_map_context(const std::string& name);
std::string to_string(MapContext ctx);

struct ModelConfig {
  int width = 64;  // C
  int heads = 2;
  int enc_layers = 2;
  int modes = 6;  // K
  int history = 50;  // T_o
  int horizon = 60;  // T_f
  int interval = 10;  // dT
  int rdm_layers = 3;
  int rpm_layers = 3;
  MixerKind mixer = MixerKind::SelectiveRecurrence;
  MapContext map_context = MapContext::AgentWise;
  std::uint64_t seed = 0;

  /// tau = T_o / dT - 1.
  int tau() const { return history / interval - 1; }
  /// Throws ConfigError naming the first offending field.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace prf
