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

#include "prf/backbone.hpp"

#include <cmath>

#include "prf/error.hpp"

namespace prf {

namespace {

constexpr int kStepFeatures = 7;
constexpr int kRelposFeatures = 5;
constexpr double kPosScale = 0.1;
constexpr double kRelposScale = 0.02;

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

std::array<double, 5> relpos(const Frame& from, double x, double y, double heading) {
  const auto loc = from.to_local(x, y);
  return {loc[0] * kRelposScale, loc[1] * kRelposScale, std::hypot(loc[0], loc[1]) * kRelposScale,
          std::cos(heading - from.heading), std::sin(heading - from.heading)};
}

}  // namespace

std::array<double, 2> Frame::to_local(double gx, double gy) const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const double dx = gx - x;
  const double dy = gy - y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

std::vector<std::uint8_t> FeatureBundle::observed_mask() const {
  std::vector<std::uint8_t> m(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) m[i] = frames[i].observed ? 1 : 0;
  return m;
}

FeatureBundle FeatureBundle::with_feats(Tensor feats, int new_v) const {
  if (!(feats.shape() == agent_feats.shape())) throw ContractError("feature shape changed");
  FeatureBundle out = *this;
  out.agent_feats = std::move(feats);
  out.v = new_v;
  return out;
}

Tensor select_batch(const Tensor& x, const std::vector<int>& idx) {
  const auto& s = x.shape();
  Tensor flat = ag::reshape(x, {1, s.b, s.r * s.c});
  return ag::reshape(ag::index_rows(flat, idx), {static_cast<int>(idx.size()), s.r, s.c});
}

SceneContext scene_context(const FeatureBundle& f, const std::vector<int>& targets) {
  const int N = f.num_agents();
  const int P = f.num_polylines();
  Tensor agents = ag::add(select_batch(f.agent_relpos, targets), f.agent_feats);
  Tensor map = select_batch(f.map_keys, targets);
  SceneContext ctx;
  ctx.keys = ag::concat_rows({agents, map});
  ctx.valid.reserve(targets.size() * (N + P));
  const auto observed = f.observed_mask();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ctx.valid.insert(ctx.valid.end(), observed.begin(), observed.end());
    ctx.valid.insert(ctx.valid.end(), P, 1);
  }
  return ctx;
}

Tensor offsets_to_global(const Tensor& steps, int num_agents, int modes, const std::vector<Frame>& frames,
                         const std::vector<std::array<double, 2>>& origins, bool cumulative) {
  const int T = steps.r();
  if (steps.b() != num_agents * modes || steps.c() != 2) throw ContractError("offset tensor shape " + steps.shape().str());
  if (frames.size() != static_cast<std::size_t>(num_agents) || origins.size() != frames.size()) {
    throw ContractError("one frame and origin per agent required");
  }
  std::vector<double> cs(steps.b());
  std::vector<double> sn(steps.b());
  std::vector<double> org(static_cast<std::size_t>(steps.b()) * 2);
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < modes; ++k) {
      const int b = i * modes + k;
      cs[b] = std::cos(frames[i].heading);
      sn[b] = std::sin(frames[i].heading);
      org[2 * b] = origins[i][0];
      org[2 * b + 1] = origins[i][1];
    }
  }
  Tensor local = cumulative ? ag::cumsum_rows(steps) : steps;
  Tensor global = ag::add(ag::rotate_xy(local, cs, sn), Tensor::from({steps.b(), 1, 2}, std::move(org)));
  return ag::reshape(global, {num_agents, modes, T * 2});
}

Backbone::Backbone(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int C = cfg.width;
  map_mlp_ = nn::Mlp(ps, "enc.map", 4 + kLaneTypes, C, C, rng);
  step_mlp_ = nn::Mlp(ps, "enc.step", kStepFeatures, C, C, rng);
  for (int l = 0; l < cfg.enc_layers; ++l) {
    temporal_.emplace_back(ps, "enc.temporal" + std::to_string(l), C, cfg.heads, rng);
    temporal_ff_.emplace_back(ps, "enc.temporal_ff" + std::to_string(l), C, C, rng);
  }
  pool_ = nn::Linear(ps, "enc.pool", 2 * C, C, rng);
  null_agent_ = nn::embedding_table(ps, "enc.null_agent", 1, C, rng);
  map_relpos_ = nn::Mlp(ps, "enc.map_relpos", kRelposFeatures, C, C, rng);
  agent_relpos_ = nn::Mlp(ps, "enc.agent_relpos", kRelposFeatures, C, C, rng);
  agent_map_ = nn::AttentionBlock(ps, "enc.agent_map", C, cfg.heads, rng);
  agent_agent_ = nn::AttentionBlock(ps, "enc.agent_agent", C, cfg.heads, rng);

  mode_table_ = nn::embedding_table(ps, "dec.mode_table", cfg.modes, C, rng);
  mode_mlp_ = nn::Mlp(ps, "dec.mode_mlp", C, C, C, rng);
  mode_scene_ = nn::AttentionBlock(ps, "dec.mode_scene", C, cfg.heads, rng);
  mode_self_ = nn::AttentionBlock(ps, "dec.mode_self", C, cfg.heads, rng);
  mode_ff_ = nn::FeedForward(ps, "dec.mode_ff", C, C, rng);
  traj_head_ = nn::Linear(ps, "dec.traj_head", C, cfg.horizon * 2, rng);
  score_head_ = nn::Linear(ps, "dec.score_head", C, 1, rng);
}

MapEncoding Backbone::encode_map(const VectorMap& m) const {
  if (m.channels != kMapChannels) throw ContractError("map channel count " + std::to_string(m.channels));
  if (m.num_polylines < 1 || m.num_points < 2) throw ContractError("map needs P >= 1 and S >= 2");
  require_finite(m.data, "map");
  const int P = m.num_polylines;
  const int S = m.num_points;
  MapEncoding enc;
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(P) * S * (4 + kLaneTypes));
  for (int p = 0; p < P; ++p) {
    const auto c = m.centroid(p);
    const double dir = std::atan2(m.at(p, S - 1, 1) - m.at(p, 0, 1), m.at(p, S - 1, 0) - m.at(p, 0, 0));
    enc.centroids.push_back(c);
    enc.directions.push_back(dir);
    const Frame f{c[0], c[1], dir, true};
    for (int s = 0; s < S; ++s) {
      const auto loc = f.to_local(m.at(p, s, 0), m.at(p, s, 1));
      x.push_back(loc[0] * kPosScale);
      x.push_back(loc[1] * kPosScale);
      x.push_back(std::cos(m.at(p, s, 2) - dir));
      x.push_back(std::sin(m.at(p, s, 2) - dir));
      for (int k = 0; k < kLaneTypes; ++k) x.push_back(m.at(p, s, 3 + k));
    }
  }
  Tensor h = map_mlp_(Tensor::from({P, S, 4 + kLaneTypes}, std::move(x)));
  enc.feats = ag::reshape(ag::mean_rows(h), {1, P, cfg_.width});
  return enc;
}

FeatureBundle Backbone::encode_agents(const ObservationWindow& w, const MapEncoding& map) const {
  const int N = w.num_agents;
  const int T = w.length;
  const int C = cfg_.width;
  const int P = map.feats.r();
  if (N < 1 || T < 1) throw ContractError("empty observation window");
  if (w.states.size() != static_cast<std::size_t>(N) * T * kAgentChannels ||
      w.valid.size() != static_cast<std::size_t>(N) * T) {
    throw ContractError("window arrays do not match N x T_v");
  }
  for (std::size_t i = 0; i < w.valid.size(); ++i) {
    if (!w.valid[i]) continue;
    for (int ch = 0; ch < kAgentChannels; ++ch) {
      if (!std::isfinite(w.states[i * kAgentChannels + ch])) throw NumericError("window: non-finite valid state");
    }
  }

  FeatureBundle out;
  out.v = w.v;
  out.map_feats = map.feats;
  out.frames.resize(N);
  out.first_xy.resize(N);
  std::vector<int> last(N, 0);
  std::vector<std::uint8_t> observed(N, 0);
  for (int a = 0; a < N; ++a) {
    int first = -1;
    for (int t = 0; t < T; ++t) {
      if (!w.is_valid(a, t)) continue;
      if (first < 0) first = t;
      last[a] = t;
      observed[a] = 1;
    }
    if (observed[a]) {
      out.frames[a] = {w.state(a, last[a], 0), w.state(a, last[a], 1), w.state(a, last[a], 2), true};
      out.first_xy[a] = {w.state(a, first, 0), w.state(a, first, 1)};
    }
  }

  // Per-step features; invalid steps stay zero and are masked as keys.
  std::vector<double> feats(static_cast<std::size_t>(N) * T * kStepFeatures, 0.0);
  for (int a = 0; a < N; ++a) {
    const Frame& f = out.frames[a];
    const double c = std::cos(f.heading);
    const double s = std::sin(f.heading);
    for (int t = 0; t < T; ++t) {
      if (!w.is_valid(a, t)) continue;
      double* row = feats.data() + (static_cast<std::size_t>(a) * T + t) * kStepFeatures;
      const auto loc = f.to_local(w.state(a, t, 0), w.state(a, t, 1));
      const double vx = w.state(a, t, 3);
      const double vy = w.state(a, t, 4);
      row[0] = loc[0] * kPosScale;
      row[1] = loc[1] * kPosScale;
      row[2] = std::cos(w.state(a, t, 2) - f.heading);
      row[3] = std::sin(w.state(a, t, 2) - f.heading);
      row[4] = (c * vx + s * vy) * kPosScale;
      row[5] = (-s * vx + c * vy) * kPosScale;
      row[6] = (t - (T - 1)) * kTimeStep;
    }
  }
  Tensor x = step_mlp_(Tensor::from({N, T, kStepFeatures}, std::move(feats)));
  const ag::AttnMask tmask{w.valid, false};
  for (std::size_t l = 0; l < temporal_.size(); ++l) {
    x = temporal_ff_[l](temporal_[l](x, x, tmask));
  }
  Tensor pooled = pool_(ag::concat_cols({ag::masked_mean_rows(x, w.valid), ag::gather_rows(x, last)}));
  Tensor agents = ag::where_rows(ag::reshape(pooled, {1, N, C}), observed, null_agent_);

  // Relative-pose keys.
  std::vector<double> mrel;
  mrel.reserve(static_cast<std::size_t>(N) * P * kRelposFeatures);
  std::vector<std::uint8_t> mmask(static_cast<std::size_t>(N) * P);
  for (int a = 0; a < N; ++a) {
    for (int p = 0; p < P; ++p) {
      const auto r = relpos(out.frames[a], map.centroids[p][0], map.centroids[p][1], map.directions[p]);
      mrel.insert(mrel.end(), r.begin(), r.end());
      mmask[static_cast<std::size_t>(a) * P + p] = observed[a];
    }
  }
  std::vector<double> arel;
  arel.reserve(static_cast<std::size_t>(N) * N * kRelposFeatures);
  std::vector<std::uint8_t> amask(static_cast<std::size_t>(N) * N);
  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) {
      const Frame& fb = out.frames[b];
      const auto r = relpos(out.frames[a], fb.x, fb.y, fb.heading);
      arel.insert(arel.end(), r.begin(), r.end());
      amask[static_cast<std::size_t>(a) * N + b] = observed[b];
    }
  }
  out.map_keys = ag::add(map.feats, map_relpos_(Tensor::from({N, P, kRelposFeatures}, std::move(mrel))));
  out.agent_relpos = agent_relpos_(Tensor::from({N, N, kRelposFeatures}, std::move(arel)));

  Tensor q = ag::reshape(agents, {N, 1, C});
  q = agent_map_(q, out.map_keys, {mmask, false});
  Tensor ctx = ag::add(ag::reshape(q, {1, N, C}), out.agent_relpos);
  q = agent_agent_(q, ctx, {amask, false});
  out.agent_feats = ag::reshape(q, {1, N, C});
  return out;
}

Prediction Backbone::decode_future(const FeatureBundle& f, const std::vector<int>& targets) const {
  const int C = cfg_.width;
  const int K = cfg_.modes;
  const int Na = static_cast<int>(targets.size());
  if (Na < 1) throw ContractError("no target agents");
  if (f.width() != C) throw ContractError("feature width mismatch");
  require_finite(f.agent_feats.data(), "features");
  std::vector<Frame> frames;
  std::vector<std::array<double, 2>> origins;
  for (int t : targets) {
    if (t < 0 || t >= f.num_agents()) throw ContractError("target index out of range");
    if (!f.frames[t].observed) throw ContractError("target agent has no observed step");
    frames.push_back(f.frames[t]);
    origins.push_back({f.frames[t].x, f.frames[t].y});
  }
  Tensor fi = ag::reshape(ag::index_rows(f.agent_feats, targets), {Na, 1, C});
  Tensor q = ag::add(mode_mlp_(mode_table_), fi);
  const SceneContext ctx = scene_context(f, targets);
  q = mode_scene_(q, ctx.keys, {ctx.valid, false});
  q = mode_ff_(mode_self_(q, q));

  Prediction pred;
  Tensor steps = ag::reshape(traj_head_(q), {Na * K, cfg_.horizon, 2});
  pred.traj = offsets_to_global(steps, Na, K, frames, origins);
  pred.probs = ag::softmax(ag::reshape(score_head_(q), {Na, 1, K}));
  return pred;
}

}  // namespace prf
