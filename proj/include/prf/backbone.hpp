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

// Shared encoder and multimodal decoder.
//
// Agents are encoded in their own frame (origin and heading at the last valid
// observed state) and pooled to one C-vector each, so features have the same
// shape for every observation length.

#pragma once

#include <cstdint>
#include <vector>

#include "prf/autograd.hpp"
#include "prf/config.hpp"
#include "prf/nn.hpp"
#include "prf/scenario.hpp"
#include "prf/windowing.hpp"

namespace prf {

using ag::Tensor;

/// Agent-centric reference frame.
struct Frame {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  bool observed = false;  // false when the window has no valid step

  /// Global point -> frame coordinates.
  std::array<double, 2> to_local(double gx, double gy) const;
};

struct MapEncoding {
  Tensor feats;  // (1, P, C)
  std::vector<std::array<double, 2>> centroids;
  std::vector<double> directions;  // first-to-last endpoint heading per polyline
};

struct FeatureBundle {
  Tensor agent_feats;  // (1, N, C)
  Tensor map_feats;    // (1, P, C)
  int v = 0;
  std::vector<Frame> frames;
  /// Earliest valid position per agent inside the source window.
  std::vector<std::array<double, 2>> first_xy;
  /// Attention keys shared by every stage: agent-to-agent relative pose
  /// embeddings (N, N, C) and polyline keys in each agent's frame (N, P, C).
  Tensor agent_relpos;
  Tensor map_keys;

  int num_agents() const { return agent_feats.r(); }
  int num_polylines() const { return map_feats.r(); }
  int width() const { return agent_feats.c(); }
  std::vector<std::uint8_t> observed_mask() const;
  /// Same bundle with different agent features and omission index.
  FeatureBundle with_feats(Tensor feats, int new_v) const;
};

struct Prediction {
  Tensor traj;   // (N_a, K, T_f * 2), global frame
  Tensor probs;  // (N_a, 1, K)

  int num_agents() const { return traj.b(); }
  int modes() const { return traj.r(); }
  int horizon() const { return traj.c() / 2; }
  double x(int i, int k, int t) const { return traj.at(i, k, 2 * t); }
  double y(int i, int k, int t) const { return traj.at(i, k, 2 * t + 1); }
  double prob(int i, int k) const { return probs.at(i, 0, k); }
};

/// Scene context for target agents: [agent feats + relpos ; map keys], rows
/// (N + P) per target, and its key mask.
struct SceneContext {
  Tensor keys;  // (N_a, N + P, C)
  std::vector<std::uint8_t> valid;
};
SceneContext scene_context(const FeatureBundle& f, const std::vector<int>& targets);

/// Picks batch entries: (B, R, C) -> (|idx|, R, C).
Tensor select_batch(const Tensor& x, const std::vector<int>& idx);

class Backbone {
 public:
  Backbone() = default;
  Backbone(nn::ParamStore& ps, const ModelConfig& cfg, Rng& rng);

  MapEncoding encode_map(const VectorMap& m) const;
  FeatureBundle encode_agents(const ObservationWindow& w, const MapEncoding& map) const;
  Prediction decode_future(const FeatureBundle& f, const std::vector<int>& targets) const;

  /// Parameters of the future-offset head; zeroing them makes every mode a
  /// stationary extrapolation of the last observed position.
  nn::Linear& offset_head() { return traj_head_; }
  nn::Linear& score_head() { return score_head_; }

 private:
  ModelConfig cfg_;
  nn::Mlp map_mlp_;
  nn::Mlp step_mlp_;
  std::vector<nn::AttentionBlock> temporal_;
  std::vector<nn::FeedForward> temporal_ff_;
  nn::Linear pool_;
  Tensor null_agent_;
  nn::Mlp map_relpos_;
  nn::Mlp agent_relpos_;
  nn::AttentionBlock agent_map_;
  nn::AttentionBlock agent_agent_;
  Tensor mode_table_;
  nn::Mlp mode_mlp_;
  nn::AttentionBlock mode_scene_;
  nn::AttentionBlock mode_self_;
  nn::FeedForward mode_ff_;
  nn::Linear traj_head_;
  nn::Linear score_head_;
};

/// Local (N_a * K, T, 2) offsets: cumulative sum along T, rotated by each
/// agent's heading and shifted to `origins`; returns (N_a, K, T * 2).
Tensor offsets_to_global(const Tensor& steps, int num_agents, int modes, const std::vector<Frame>& frames,
                         const std::vector<std::array<double, 2>>& origins, bool cumulative = true);

}  // namespace prf
