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

// Retrospective units: a gated residual distiller (RDM) per omission index and
// one shared history-recovery head (RPM) with a pluggable temporal mixer.
//
// Recovered history is ordered backward in time: entry j of a (dT x 2)
// segment is the position j + 1 steps before the earliest state of the
// window the stage consumed.

#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "prf/backbone.hpp"
#include "prf/config.hpp"
#include "prf/nn.hpp"

namespace prf {

/// Stack of causal sequence mixers over the row axis, each wrapped as
/// LN(x + mix(x)).
class TemporalMixer {
 public:
  struct Layer {
    // selective recurrence
    nn::Linear a;
    nn::Linear g;
    nn::Linear out;
    // gru
    nn::Linear ih;
    nn::Linear hh;
    // attention
    nn::Linear q;
    nn::Linear k;
    nn::Linear v;
    nn::Linear o;
    nn::LayerNorm ln;
  };

  TemporalMixer() = default;
  TemporalMixer(nn::ParamStore& ps, const std::string& name, int width, int layers, int heads, MixerKind kind,
                Rng& rng);

  Tensor operator()(const Tensor& x) const;
  /// Un-normalized mixing of one layer (before the residual and norm).
  Tensor mix(int layer, const Tensor& u) const;
  /// Recurrence state h of a selective layer before its output projection.
  Tensor selective_state(int layer, const Tensor& u) const;

  MixerKind kind() const { return kind_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  MixerKind kind_ = MixerKind::SelectiveRecurrence;
  int heads_ = 1;
  std::vector<Layer> layers_;
};

/// One retrospective distillation unit: F -> g * F + F_r.
class RdmUnit {
 public:
  struct Trace {
    Tensor map_context;  // (1, N, C)
    Tensor gate;
    Tensor residual;
  };

  RdmUnit() = default;
  RdmUnit(nn::ParamStore& ps, const std::string& name, const ModelConfig& cfg, Rng& rng);

  /// Output carries omission index `target_v` (f.v - 1 for cascade units).
  FeatureBundle forward(const FeatureBundle& f, int target_v, Trace* trace = nullptr) const;
  /// Cascade step: requires f.v >= 1 and returns a bundle with v - 1.
  FeatureBundle operator()(const FeatureBundle& f, Trace* trace = nullptr) const;

  nn::LayerNorm& gate_norm() { return logit_ln_; }
  nn::LayerNorm& residual_norm() { return resid_ln_; }

 private:
  MapContext map_context_ = MapContext::AgentWise;
  nn::AttentionBlock map_attn_;
  std::vector<nn::AttentionBlock> logit_attn_;
  std::vector<nn::AttentionBlock> resid_attn_;
  nn::Mlp logit_mlp_;
  nn::Mlp resid_mlp_;
  nn::LayerNorm logit_ln_;
  nn::LayerNorm resid_ln_;
};

/// Shared history-recovery head. Every forward call bumps `access_count()`.
class Rpm {
 public:
  Rpm() = default;
  Rpm(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng);

  /// Coarse proposals (N_a, K, dT * 2) anchored at each target's first_xy,
  /// with their mode probabilities (N_a, 1, K).
  std::pair<Tensor, Tensor> propose(const FeatureBundle& f, const std::vector<int>& targets) const;
  /// Refined trajectories (N_a, K, dT * 2) and mode probabilities (N_a, 1, K).
  std::pair<Tensor, Tensor> refine(const FeatureBundle& f, const std::vector<int>& targets,
                                   const Tensor& proposals) const;

  std::uint64_t access_count() const { return accesses_.load(); }
  void reset_access_count() { accesses_ = 0; }

  Tensor& mode_table() { return mode_table_; }
  Tensor& step_table() { return step_table_; }
  nn::Linear& proposal_head() { return proposal_head_; }
  nn::Linear& proposal_score_head() { return proposal_score_; }
  nn::Linear& refine_head() { return refine_head_; }
  nn::Linear& score_head() { return score_head_; }
  TemporalMixer& mixer(int i) { return i == 0 ? mixer1_ : mixer2_; }

 private:
  int modes_ = 0;
  int interval_ = 0;
  int width_ = 0;
  Tensor mode_table_;
  nn::Mlp mode_mlp_;
  nn::AttentionBlock mode_scene_;
  nn::AttentionBlock mode_self_;
  nn::Linear proposal_head_;
  nn::Linear proposal_score_;
  Tensor step_table_;
  nn::Mlp step_mlp_;
  nn::AttentionBlock state_scene_;
  TemporalMixer mixer1_;
  nn::Mlp anchor_mlp_;
  nn::AttentionBlock anchor_attn_;
  TemporalMixer mixer2_;
  nn::Linear refine_head_;
  nn::Linear score_head_;
  mutable std::atomic<std::uint64_t> accesses_{0};
};

struct RetroOutput {
  int unit = 0;              // stage that produced it
  FeatureBundle distilled;   // omission index unit - 1
  Tensor proposals;          // (N_a, K, dT * 2)
  Tensor proposal_probs;     // (N_a, 1, K)
  Tensor refined;            // (N_a, K, dT * 2)
  Tensor probs;              // (N_a, 1, K)
  std::vector<int> best_mode;
  std::vector<double> best;  // N_a x dT x 2, refined trajectory of best_mode
};

/// Highest-probability mode per agent, ties to the lowest index.
std::vector<int> argmax_modes(const Tensor& probs);

/// Applies units f.v, f.v - 1, ..., 1 (units[u - 1] is unit u). With
/// recovery, the shared RPM also runs after every stage and later stages are
/// anchored on the recovered earliest point. `trace` receives the unit
/// indices in call order.
std::pair<FeatureBundle, std::vector<RetroOutput>> retrospect(const FeatureBundle& f, std::span<const RdmUnit> units,
                                                              const Rpm* rpm, bool with_recovery,
                                                              const std::vector<int>& targets,
                                                              std::vector<int>* trace = nullptr);

/// RPM pass over a distilled bundle, packaged as a RetroOutput.
RetroOutput recover(const FeatureBundle& distilled, int unit, const Rpm& rpm, const std::vector<int>& targets);

/// Mean over agents of the L2 distance between agent feature rows.
double alignment_error(const FeatureBundle& distilled, const FeatureBundle& native);

}  // namespace prf
