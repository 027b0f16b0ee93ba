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

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "prf/backbone.hpp"
#include "prf/config.hpp"
#include "prf/nn.hpp"
#include "prf/retro.hpp"

namespace prf {

/// How features of a shortened window reach the decoder.
enum class InferencePath {
  Cascade,  // units v, v-1, ..., 1
  Direct,   // one direct unit for v
  None,     // decode the short-window features as they are
};

/// All parameters of one predictor. Parameter names and creation order are a
/// function of the config only, so a seeded Model is reproducible.
class Model {
 public:
  explicit Model(const ModelConfig& cfg, bool with_direct_units = false);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  bool has_direct_units() const { return !direct_.empty(); }

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  std::span<const RdmUnit> units() const { return units_; }
  std::vector<RdmUnit>& mutable_units() { return units_; }
  /// Direct unit mapping omission index v straight to 0.
  const RdmUnit& direct_unit(int v) const;
  Rpm& rpm() { return *rpm_; }
  const Rpm& rpm() const { return *rpm_; }

  /// Features of `window` after the inference path, ready for decoding.
  FeatureBundle infer_features(const FeatureBundle& f, InferencePath path) const;

 private:
  ModelConfig cfg_;
  nn::ParamStore params_;
  Backbone backbone_;
  std::vector<RdmUnit> units_;
  std::vector<RdmUnit> direct_;
  std::unique_ptr<Rpm> rpm_;
};

std::string model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

inline constexpr const char* kCheckpointHeader = "prf-checkpoint v1";

/// Header line, one `config <json>` line, a `direct 0|1` line, an
/// `extra <json>` line, then one `param <name> <b> <r> <c> <values...>` line
/// per tensor in creation order.
void save_checkpoint(const Model& m, const std::string& extra_json, std::ostream& out);
void save_checkpoint(const Model& m, const std::string& extra_json, const std::filesystem::path& path);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::string extra_json;
};
LoadedCheckpoint load_checkpoint(std::istream& in);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Decoupled weight-decay Adam over every parameter of a store.
class AdamW {
 public:
  AdamW(nn::ParamStore& ps, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);
  void step();
  long steps() const { return t_; }

 private:
  nn::ParamStore& ps_;
  double lr_;
  double wd_;
  double b1_;
  double b2_;
  double eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Scales all gradients so their global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double clip_grad_norm(nn::ParamStore& ps, double max_norm);

}  // namespace prf
