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

#include "prf/retro.hpp"

#include <cmath>
#include <tuple>

#include "prf/error.hpp"

namespace prf {

MixerKind parse_mixer(const std::string& name) {
  if (name == "selective_recurrence" || name == "selective") return MixerKind::SelectiveRecurrence;
  if (name == "gru") return MixerKind::Gru;
  if (name == "attention") return MixerKind::Attention;
  throw ConfigError("mixer", "unknown mixer kind '" + name + "'");
}

std::string to_string(MixerKind kind) {
  switch (kind) {
    case MixerKind::SelectiveRecurrence: return "selective_recurrence";
    case MixerKind::Gru: return "gru";
    case MixerKind::Attention: return "attention";
  }
  return "?";
}

MapContext parse_map_context(const std::string& name) {
  if (name == "agent_wise") return MapContext::AgentWise;
  if (name == "pooled_map") return MapContext::PooledMap;
  throw ConfigError("map_context", "unknown map context '" + name + "'");
}

std::string to_string(MapContext ctx) { return ctx == MapContext::AgentWise ? "agent_wise" : "pooled_map"; }

void ModelConfig::validate() const {
  if (width < 1) throw ConfigError("width", "must be positive");
  if (heads < 1 || width % heads != 0) throw ConfigError("heads", "must divide width");
  if (enc_layers < 0) throw ConfigError("enc_layers", "must be nonnegative");
  if (modes < 1) throw ConfigError("modes", "must be positive");
  if (horizon < 1) throw ConfigError("horizon", "must be positive");
  if (interval < 1) throw ConfigError("dt", "must be positive");
  if (history < 1 || history % interval != 0) throw ConfigError("dt", "must divide history");
  if (rdm_layers < 0) throw ConfigError("rdm_layers", "must be nonnegative");
  if (rpm_layers < 1) throw ConfigError("rpm_layers", "must be positive");
}

// ------------------------------------------------------------------- mixer

TemporalMixer::TemporalMixer(nn::ParamStore& ps, const std::string& name, int width, int layers, int heads,
                             MixerKind kind, Rng& rng)
    : kind_(kind), heads_(heads) {
  for (int l = 0; l < layers; ++l) {
    const std::string p = name + "." + std::to_string(l);
    Layer layer;
    switch (kind) {
      case MixerKind::SelectiveRecurrence:
        layer.a = nn::Linear(ps, p + ".a", width, width, rng);
        layer.g = nn::Linear(ps, p + ".g", width, width, rng);
        layer.out = nn::Linear(ps, p + ".out", width, width, rng);
        break;
      case MixerKind::Gru:
        layer.ih = nn::Linear(ps, p + ".ih", width, 3 * width, rng);
        layer.hh = nn::Linear(ps, p + ".hh", width, 3 * width, rng);
        break;
      case MixerKind::Attention:
        layer.q = nn::Linear(ps, p + ".q", width, width, rng);
        layer.k = nn::Linear(ps, p + ".k", width, width, rng);
        layer.v = nn::Linear(ps, p + ".v", width, width, rng);
        layer.o = nn::Linear(ps, p + ".o", width, width, rng);
        break;
    }
    layer.ln = nn::LayerNorm(ps, p + ".ln", width);
    layers_.push_back(std::move(layer));
  }
}

Tensor TemporalMixer::selective_state(int layer, const Tensor& u) const {
  const Layer& L = layers_.at(layer);
  if (kind_ != MixerKind::SelectiveRecurrence) throw ContractError("not a selective recurrence mixer");
  return ag::selective_scan(ag::sigmoid(L.a(u)), ag::sigmoid(L.g(u)), u);
}

Tensor TemporalMixer::mix(int layer, const Tensor& u) const {
  const Layer& L = layers_.at(layer);
  switch (kind_) {
    case MixerKind::SelectiveRecurrence:
      return L.out(selective_state(layer, u));
    case MixerKind::Gru: {
      const int B = u.b();
      const int T = u.r();
      const int C = u.c();
      Tensor xs = L.ih(u);
      Tensor h = Tensor::zeros({B, 1, C});
      std::vector<Tensor> outs;
      outs.reserve(T);
      for (int t = 0; t < T; ++t) {
        Tensor xt = ag::slice_rows(xs, t, t + 1);
        Tensor ht = L.hh(h);
        Tensor r = ag::sigmoid(ag::add(ag::slice_cols(xt, 0, C), ag::slice_cols(ht, 0, C)));
        Tensor z = ag::sigmoid(ag::add(ag::slice_cols(xt, C, 2 * C), ag::slice_cols(ht, C, 2 * C)));
        Tensor n = ag::tanh(ag::add(ag::slice_cols(xt, 2 * C, 3 * C), ag::mul(r, ag::slice_cols(ht, 2 * C, 3 * C))));
        h = ag::add(n, ag::mul(z, ag::sub(h, n)));
        outs.push_back(h);
      }
      return ag::concat_rows(outs);
    }
    case MixerKind::Attention:
      return L.o(ag::attention(L.q(u), L.k(u), L.v(u), heads_, {{}, true}));
  }
  throw ConfigError("mixer", "unknown kind");
}

Tensor TemporalMixer::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].ln(ag::add(h, mix(static_cast<int>(l), h)));
  }
  return h;
}

// --------------------------------------------------------------------- RDM

RdmUnit::RdmUnit(nn::ParamStore& ps, const std::string& name, const ModelConfig& cfg, Rng& rng)
    : map_context_(cfg.map_context) {
  const int C = cfg.width;
  map_attn_ = nn::AttentionBlock(ps, name + ".map_attn", C, cfg.heads, rng);
  for (int l = 0; l < cfg.rdm_layers; ++l) {
    logit_attn_.emplace_back(ps, name + ".logit_attn" + std::to_string(l), C, cfg.heads, rng);
  }
  for (int l = 0; l < cfg.rdm_layers; ++l) {
    resid_attn_.emplace_back(ps, name + ".resid_attn" + std::to_string(l), C, cfg.heads, rng);
  }
  logit_mlp_ = nn::Mlp(ps, name + ".logit_mlp", 2 * C, C, C, rng);
  resid_mlp_ = nn::Mlp(ps, name + ".resid_mlp", 2 * C, C, C, rng);
  logit_ln_ = nn::LayerNorm(ps, name + ".logit_ln", C);
  resid_ln_ = nn::LayerNorm(ps, name + ".resid_ln", C);
}

FeatureBundle RdmUnit::forward(const FeatureBundle& f, int target_v, Trace* trace) const {
  const int N = f.num_agents();
  const int C = f.width();
  Tensor F = f.agent_feats;
  Tensor Fm;
  if (map_context_ == MapContext::AgentWise) {
    std::vector<std::uint8_t> mask;
    mask.reserve(static_cast<std::size_t>(N) * f.num_polylines());
    for (auto o : f.observed_mask()) mask.insert(mask.end(), f.num_polylines(), o);
    Fm = ag::reshape(map_attn_(ag::reshape(F, {N, 1, C}), f.map_keys, {mask, false}), {1, N, C});
  } else {
    Fm = ag::add(Tensor::zeros({1, N, C}), ag::mean_rows(f.map_feats));
  }
  Tensor Hg = F;
  for (const auto& blk : logit_attn_) Hg = blk(Hg, Hg);
  Tensor Hr = F;
  for (const auto& blk : resid_attn_) Hr = blk(Hr, Hr);
  Tensor gate = ag::sigmoid(logit_ln_(logit_mlp_(ag::concat_cols({Hg, Fm}))));
  Tensor resid = ag::relu(resid_ln_(resid_mlp_(ag::concat_cols({Hr, Fm}))));
  if (trace) *trace = {Fm, gate, resid};
  return f.with_feats(ag::add(ag::mul(gate, F), resid), target_v);
}

FeatureBundle RdmUnit::operator()(const FeatureBundle& f, Trace* trace) const {
  if (f.v < 1) throw ContractError("nothing to retrospect at omission index 0");
  return forward(f, f.v - 1, trace);
}

// --------------------------------------------------------------------- RPM

Rpm::Rpm(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng)
    : modes_(cfg.modes), interval_(cfg.interval), width_(cfg.width) {
  const int C = cfg.width;
  const int dT = cfg.interval;
  mode_table_ = nn::embedding_table(ps, "rpm.mode_table", cfg.modes, C, rng);
  mode_mlp_ = nn::Mlp(ps, "rpm.mode_mlp", C, C, C, rng);
  mode_scene_ = nn::AttentionBlock(ps, "rpm.mode_scene", C, cfg.heads, rng);
  mode_self_ = nn::AttentionBlock(ps, "rpm.mode_self", C, cfg.heads, rng);
  proposal_head_ = nn::Linear(ps, "rpm.proposal_head", C, dT * 2, rng);
  proposal_score_ = nn::Linear(ps, "rpm.proposal_score", C, 1, rng);
  step_table_ = nn::embedding_table(ps, "rpm.step_table", dT, C, rng);
  step_mlp_ = nn::Mlp(ps, "rpm.step_mlp", C, C, C, rng);
  state_scene_ = nn::AttentionBlock(ps, "rpm.state_scene", C, cfg.heads, rng);
  mixer1_ = TemporalMixer(ps, "rpm.mixer1", C, cfg.rpm_layers, cfg.heads, cfg.mixer, rng);
  anchor_mlp_ = nn::Mlp(ps, "rpm.anchor_mlp", dT * 2, C, C, rng);
  anchor_attn_ = nn::AttentionBlock(ps, "rpm.anchor_attn", C, cfg.heads, rng);
  mixer2_ = TemporalMixer(ps, "rpm.mixer2", C, cfg.rpm_layers, cfg.heads, cfg.mixer, rng);
  refine_head_ = nn::Linear(ps, "rpm.refine_head", C, 2, rng);
  score_head_ = nn::Linear(ps, "rpm.score_head", C, 1, rng);
}

namespace {

struct TargetFrames {
  std::vector<Frame> frames;
  std::vector<std::array<double, 2>> anchors;
};

TargetFrames target_frames(const FeatureBundle& f, const std::vector<int>& targets) {
  TargetFrames out;
  for (int t : targets) {
    if (t < 0 || t >= f.num_agents()) throw ContractError("target index out of range");
    out.frames.push_back(f.frames[t]);
    out.anchors.push_back(f.first_xy[t]);
  }
  return out;
}

}  // namespace

std::pair<Tensor, Tensor> Rpm::propose(const FeatureBundle& f, const std::vector<int>& targets) const {
  ++accesses_;
  const int Na = static_cast<int>(targets.size());
  const int C = width_;
  const auto tf = target_frames(f, targets);
  const SceneContext ctx = scene_context(f, targets);
  Tensor fi = ag::reshape(ag::index_rows(f.agent_feats, targets), {Na, 1, C});
  Tensor q = ag::add(mode_mlp_(mode_table_), fi);
  q = mode_scene_(q, ctx.keys, {ctx.valid, false});
  q = mode_self_(q, q);
  Tensor steps = ag::reshape(proposal_head_(q), {Na * modes_, interval_, 2});
  Tensor probs = ag::softmax(ag::reshape(proposal_score_(q), {Na, 1, modes_}));
  return {offsets_to_global(steps, Na, modes_, tf.frames, tf.anchors), probs};
}

std::pair<Tensor, Tensor> Rpm::refine(const FeatureBundle& f, const std::vector<int>& targets,
                                      const Tensor& proposals) const {
  ++accesses_;
  const int Na = static_cast<int>(targets.size());
  const int C = width_;
  const int K = modes_;
  const int dT = interval_;
  if (!(proposals.shape() == ag::Shape{Na, K, dT * 2})) {
    throw ContractError("proposals have shape " + proposals.shape().str());
  }
  const auto tf = target_frames(f, targets);

  // Proposals back in each target's frame, relative to the anchor.
  std::vector<double> cs(static_cast<std::size_t>(Na) * K);
  std::vector<double> sn(cs.size());
  std::vector<double> shift(cs.size() * 2);
  for (int i = 0; i < Na; ++i) {
    for (int k = 0; k < K; ++k) {
      const std::size_t b = static_cast<std::size_t>(i) * K + k;
      cs[b] = std::cos(tf.frames[i].heading);
      sn[b] = -std::sin(tf.frames[i].heading);
      shift[2 * b] = -tf.anchors[i][0];
      shift[2 * b + 1] = -tf.anchors[i][1];
    }
  }
  Tensor rel = ag::add(ag::reshape(proposals, {Na * K, dT, 2}), Tensor::from({Na * K, 1, 2}, std::move(shift)));
  Tensor local = ag::reshape(ag::rotate_xy(rel, cs, sn), {Na, K, dT * 2});
  Tensor Fk = anchor_mlp_(ag::scale(local, 0.1));

  const SceneContext ctx = scene_context(f, targets);
  Tensor fi = ag::reshape(ag::index_rows(f.agent_feats, targets), {Na, 1, C});
  Tensor qs = ag::add(step_mlp_(step_table_), fi);
  qs = state_scene_(qs, ctx.keys, {ctx.valid, false});
  qs = mixer1_(qs);
  qs = anchor_attn_(qs, Fk);
  qs = mixer2_(qs);

  Tensor h = ag::relu(ag::add(ag::reshape(qs, {Na, 1, dT * C}), ag::repeat_cols(Fk, dT)));
  Tensor delta = refine_head_(ag::reshape(h, {Na * K, dT, C}));
  std::vector<std::array<double, 2>> zeros(Na, {0.0, 0.0});
  Tensor refined = ag::add(proposals, offsets_to_global(delta, Na, K, tf.frames, zeros, false));
  Tensor probs = ag::softmax(ag::reshape(score_head_(ag::add(Fk, ag::mean_rows(qs))), {Na, 1, K}));
  return {refined, probs};
}

// --------------------------------------------------------------- cascade

std::vector<int> argmax_modes(const Tensor& probs) {
  std::vector<int> out(probs.b(), 0);
  for (int i = 0; i < probs.b(); ++i) {
    for (int k = 1; k < probs.c(); ++k) {
      if (probs.at(i, 0, k) > probs.at(i, 0, out[i])) out[i] = k;
    }
  }
  return out;
}

RetroOutput recover(const FeatureBundle& distilled, int unit, const Rpm& rpm, const std::vector<int>& targets) {
  RetroOutput out;
  out.unit = unit;
  out.distilled = distilled;
  std::tie(out.proposals, out.proposal_probs) = rpm.propose(distilled, targets);
  std::tie(out.refined, out.probs) = rpm.refine(distilled, targets, out.proposals);
  out.best_mode = argmax_modes(out.probs);
  const int L = out.refined.c();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (int j = 0; j < L; ++j) out.best.push_back(out.refined.at(static_cast<int>(i), out.best_mode[i], j));
  }
  return out;
}

std::pair<FeatureBundle, std::vector<RetroOutput>> retrospect(const FeatureBundle& f, std::span<const RdmUnit> units,
                                                              const Rpm* rpm, bool with_recovery,
                                                              const std::vector<int>& targets,
                                                              std::vector<int>* trace) {
  std::vector<RetroOutput> outs;
  if (f.v == 0) return {f, outs};
  if (f.v < 0 || f.v > static_cast<int>(units.size())) {
    throw ContractError("omission index " + std::to_string(f.v) + " has no unit");
  }
  if (with_recovery && rpm == nullptr) throw ContractError("recovery requested without an RPM");
  FeatureBundle cur = f;
  for (int u = f.v; u >= 1; --u) {
    if (trace) trace->push_back(u);
    cur = units[u - 1](cur);
    if (!with_recovery) continue;
    outs.push_back(recover(cur, u, *rpm, targets));
    // The next stage starts from the recovered earliest point.
    const auto& ro = outs.back();
    const int L = ro.refined.c();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      cur.first_xy[targets[i]] = {ro.best[i * L + L - 2], ro.best[i * L + L - 1]};
    }
  }
  return {cur, std::move(outs)};
}

double alignment_error(const FeatureBundle& distilled, const FeatureBundle& native) {
  if (!(distilled.agent_feats.shape() == native.agent_feats.shape())) {
    throw ContractError("alignment_error: shape mismatch");
  }
  const int N = distilled.num_agents();
  const int C = distilled.width();
  const auto a = distilled.agent_feats.data();
  const auto b = native.agent_feats.data();
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    double sq = 0.0;
    for (int j = 0; j < C; ++j) {
      const double d = a[static_cast<std::size_t>(i) * C + j] - b[static_cast<std::size_t>(i) * C + j];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / N;
}

}  // namespace prf
