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

#include "prf/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "prf/error.hpp"

namespace prf {

namespace {

ModelConfig validated(const ModelConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Model::Model(const ModelConfig& cfg, bool with_direct_units) : cfg_(validated(cfg)) {
  Rng rng(Rng::mix(cfg.seed, 0x6d6f64656cULL));
  backbone_ = Backbone(params_, cfg_, rng);
  for (int u = 1; u <= cfg_.tau(); ++u) units_.emplace_back(params_, "rdm" + std::to_string(u), cfg_, rng);
  rpm_ = std::make_unique<Rpm>(params_, cfg_, rng);
  if (with_direct_units) {
    for (int v = 1; v <= cfg_.tau(); ++v) direct_.emplace_back(params_, "direct" + std::to_string(v), cfg_, rng);
  }
}

const RdmUnit& Model::direct_unit(int v) const {
  if (v < 1 || v > static_cast<int>(direct_.size())) throw ContractError("no direct unit for v = " + std::to_string(v));
  return direct_[v - 1];
}

FeatureBundle Model::infer_features(const FeatureBundle& f, InferencePath path) const {
  if (f.v == 0) return f;
  switch (path) {
    case InferencePath::Cascade:
      return retrospect(f, units(), nullptr, false, {}).first;
    case InferencePath::Direct:
      return direct_unit(f.v).forward(f, 0);
    case InferencePath::None:
      return f;
  }
  return f;
}

std::string model_config_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j{{"width", cfg.width},
                           {"heads", cfg.heads},
                           {"enc_layers", cfg.enc_layers},
                           {"modes", cfg.modes},
                           {"history", cfg.history},
                           {"horizon", cfg.horizon},
                           {"dt", cfg.interval},
                           {"rdm_layers", cfg.rdm_layers},
                           {"rpm_layers", cfg.rpm_layers},
                           {"mixer", to_string(cfg.mixer)},
                           {"map_context", to_string(cfg.map_context)},
                           {"seed", cfg.seed}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  ModelConfig c;
  try {
    c.width = j.value("width", c.width);
    c.heads = j.value("heads", c.heads);
    c.enc_layers = j.value("enc_layers", c.enc_layers);
    c.modes = j.value("modes", c.modes);
    c.history = j.value("history", c.history);
    c.horizon = j.value("horizon", c.horizon);
    c.interval = j.value("dt", c.interval);
    c.rdm_layers = j.value("rdm_layers", c.rdm_layers);
    c.rpm_layers = j.value("rpm_layers", c.rpm_layers);
    c.mixer = parse_mixer(j.value("mixer", to_string(c.mixer)));
    c.map_context = parse_map_context(j.value("map_context", to_string(c.map_context)));
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_checkpoint(const Model& m, const std::string& extra_json, std::ostream& out) {
  out << kCheckpointHeader << '\n';
  out << "config " << model_config_json(m.config()) << '\n';
  out << "direct " << (m.has_direct_units() ? 1 : 0) << '\n';
  out << "extra " << (extra_json.empty() ? "{}" : extra_json) << '\n';
  char buf[32];
  for (const auto& [name, t] : m.params().items()) {
    out << "param " << name << ' ' << t.b() << ' ' << t.r() << ' ' << t.c();
    for (double v : t.data()) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("checkpoint write failed");
}

void save_checkpoint(const Model& m, const std::string& extra_json, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(m, extra_json, f);
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty checkpoint");
  if (line.rfind("prf-checkpoint ", 0) != 0) throw ParseError(1, "missing prf-checkpoint header");
  if (line != kCheckpointHeader) throw VersionError("unsupported checkpoint version '" + line + "'");

  auto expect = [&](int lineno, const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) throw ParseError(lineno, "expected '" + key + "'");
    return line.substr(key.size() + 1);
  };
  const ModelConfig cfg = model_config_from_json(expect(2, "config"));
  const bool direct = expect(3, "direct") == "1";
  LoadedCheckpoint out;
  out.extra_json = expect(4, "extra");
  out.model = std::make_unique<Model>(cfg, direct);

  const auto& items = out.model->params().items();
  std::size_t next = 0;
  int lineno = 4;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    std::string name;
    ag::Shape s;
    if (!(ls >> tag >> name >> s.b >> s.r >> s.c) || tag != "param") throw ParseError(lineno, "malformed param line");
    if (next >= items.size() || items[next].first != name) throw ParseError(lineno, "unexpected parameter " + name);
    Tensor t = items[next].second;
    if (!(t.shape() == s)) throw ParseError(lineno, "shape mismatch for " + name);
    auto dst = t.mutable_data();
    std::string tok;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (!(ls >> tok)) throw ParseError(lineno, "too few values for " + name);
      char* end = nullptr;
      dst[i] = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) throw ParseError(lineno, "bad number '" + tok + "'");
    }
    if (ls >> tok) throw ParseError(lineno, "too many values for " + name);
    ++next;
  }
  if (next != items.size()) throw DataError("checkpoint is missing " + std::to_string(items.size() - next) + " parameters");
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  return load_checkpoint(f);
}

AdamW::AdamW(nn::ParamStore& ps, double lr, double weight_decay, double beta1, double beta2, double eps)
    : ps_(ps), lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& item : ps.items()) {
    m_.emplace_back(item.second.numel(), 0.0);
    v_.emplace_back(item.second.numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  const auto& items = ps_.items();
  for (std::size_t p = 0; p < items.size(); ++p) {
    Tensor t = items[p].second;
    const auto g = t.grad();
    if (g.empty()) continue;
    auto w = t.mutable_data();
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1_ * m[i] + (1.0 - b1_) * g[i];
      v[i] = b2_ * v[i] + (1.0 - b2_) * g[i] * g[i];
      w[i] -= lr_ * wd_ * w[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double clip_grad_norm(nn::ParamStore& ps, double max_norm) {
  double sq = 0.0;
  for (const auto& item : ps.items()) {
    for (double g : item.second.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& item : ps.items()) {
      Tensor t = item.second;
      if (t.grad().empty()) continue;
      for (double& g : t.mutable_grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace prf
