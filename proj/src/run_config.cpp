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

#include "prf/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "prf/error.hpp"

namespace prf {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) throw ConfigError(name_, "must be an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key, "wrong type");
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) throw ConfigError(name_ + "." + item.key(), "unknown key");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::sync() {
  train.model.history = data.history;
  train.model.horizon = data.horizon;
}

void RunConfig::validate() const {
  data.validate();
  train.validate();
  if (train.model.history != data.history || train.model.horizon != data.horizon) {
    throw ConfigError("model.history", "model and data horizons differ");
  }
  for (int L : lengths) {
    if (L < 1 || L > data.history) throw ConfigError("eval.lengths", "length " + std::to_string(L) + " out of range");
  }
}

std::vector<int> RunConfig::eval_lengths() const {
  return lengths.empty() ? admissible_lengths(data.history, train.model.interval) : lengths;
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& item : root.items()) {
    const auto& k = item.key();
    if (k != "data" && k != "model" && k != "train" && k != "eval") throw ConfigError(k, "unknown section");
  }
  RunConfig c;

  Section d(root, "data");
  auto& g = c.data;
  d.get("seed", g.seed);
  d.get("num_scenarios", g.num_scenarios);
  d.get("min_agents", g.min_agents);
  d.get("max_agents", g.max_agents);
  d.get("num_targets", g.num_targets);
  d.get("history", g.history);
  d.get("horizon", g.horizon);
  d.get("points_per_polyline", g.points_per_polyline);
  d.get("point_spacing", g.point_spacing);
  d.get("max_step_length", g.max_step_length);
  d.get("noise_std", g.noise_std);
  d.get("velocity_noise_std", g.velocity_noise_std);
  d.get("late_entry_prob", g.late_entry_prob);
  d.get("tracking_loss_prob", g.tracking_loss_prob);
  d.get("min_speed", g.min_speed);
  d.get("max_speed", g.max_speed);
  if (const json* gr = d.child("grammar")) {
    const json wrapped{{"data.grammar", *gr}};
    Section s(wrapped, "data.grammar");
    s.get("straight", g.grammar.straight);
    s.get("curve", g.grammar.curve);
    s.get("intersection", g.grammar.intersection);
    s.get("t_junction", g.grammar.t_junction);
    s.finish();
  }
  if (const json* mo = d.child("motion")) {
    const json wrapped{{"data.motion", *mo}};
    Section s(wrapped, "data.motion");
    s.get("constant_velocity", g.motion.constant_velocity);
    s.get("constant_turn_rate", g.motion.constant_turn_rate);
    s.get("lane_follower", g.motion.lane_follower);
    s.finish();
  }
  d.finish();

  Section m(root, "model");
  auto& mc = c.train.model;
  std::string mixer = to_string(mc.mixer);
  std::string map_context = to_string(mc.map_context);
  m.get("width", mc.width);
  m.get("heads", mc.heads);
  m.get("enc_layers", mc.enc_layers);
  m.get("modes", mc.modes);
  m.get("dt", mc.interval);
  m.get("rdm_layers", mc.rdm_layers);
  m.get("rpm_layers", mc.rpm_layers);
  m.get("mixer", mixer);
  m.get("map_context", map_context);
  m.finish();
  mc.mixer = parse_mixer(mixer);
  mc.map_context = parse_map_context(map_context);

  Section t(root, "train");
  auto& tc = c.train;
  std::string mode = train_mode_name(tc);
  t.get("epochs", tc.epochs);
  t.get("batch_size", tc.batch_size);
  t.get("lr", tc.lr);
  t.get("weight_decay", tc.weight_decay);
  t.get("clip_norm", tc.clip_norm);
  t.get("seed", tc.seed);
  t.get("mode", mode);
  t.get("rsts", tc.rsts);
  t.get("detach_teacher", tc.detach_teacher);
  t.get("cascaded_units", tc.cascaded_units);
  t.finish();
  parse_train_mode(mode, tc);

  Section e(root, "eval");
  std::string policy = to_string(c.length_policy);
  e.get("lengths", c.lengths);
  e.get("length_policy", policy);
  e.finish();
  c.length_policy = parse_length_policy(policy);

  c.sync();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& c) {
  const auto& g = c.data;
  const auto& mc = c.train.model;
  const auto& tc = c.train;
  nlohmann::ordered_json j;
  j["data"] = {{"seed", g.seed},
               {"num_scenarios", g.num_scenarios},
               {"min_agents", g.min_agents},
               {"max_agents", g.max_agents},
               {"num_targets", g.num_targets},
               {"history", g.history},
               {"horizon", g.horizon},
               {"points_per_polyline", g.points_per_polyline},
               {"point_spacing", g.point_spacing},
               {"max_step_length", g.max_step_length},
               {"noise_std", g.noise_std},
               {"velocity_noise_std", g.velocity_noise_std},
               {"late_entry_prob", g.late_entry_prob},
               {"tracking_loss_prob", g.tracking_loss_prob},
               {"min_speed", g.min_speed},
               {"max_speed", g.max_speed},
               {"grammar",
                {{"straight", g.grammar.straight},
                 {"curve", g.grammar.curve},
                 {"intersection", g.grammar.intersection},
                 {"t_junction", g.grammar.t_junction}}},
               {"motion",
                {{"constant_velocity", g.motion.constant_velocity},
                 {"constant_turn_rate", g.motion.constant_turn_rate},
                 {"lane_follower", g.motion.lane_follower}}}};
  j["model"] = {{"width", mc.width},         {"heads", mc.heads},
                {"enc_layers", mc.enc_layers}, {"modes", mc.modes},
                {"dt", mc.interval},          {"rdm_layers", mc.rdm_layers},
                {"rpm_layers", mc.rpm_layers}, {"mixer", to_string(mc.mixer)},
                {"map_context", to_string(mc.map_context)}};
  j["train"] = {{"epochs", tc.epochs},
                {"batch_size", tc.batch_size},
                {"lr", tc.lr},
                {"weight_decay", tc.weight_decay},
                {"clip_norm", tc.clip_norm},
                {"seed", tc.seed},
                {"mode", train_mode_name(tc)},
                {"rsts", tc.rsts},
                {"detach_teacher", tc.detach_teacher},
                {"cascaded_units", tc.cascaded_units}};
  j["eval"] = {{"lengths", c.lengths}, {"length_policy", to_string(c.length_policy)}};
  return j.dump(2);
}

std::vector<int> parse_lengths(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("lengths", "bad length '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("lengths", "empty list");
  return out;
}

}  // namespace prf
