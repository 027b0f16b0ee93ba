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

// Training losses. Trajectory tensors are (N_a, K, T * 2) with interleaved
// x, y; ground truth is a flat N_a x T x 2 array.

#pragma once

#include <vector>

#include "prf/autograd.hpp"
#include "prf/backbone.hpp"
#include "prf/retro.hpp"

namespace prf {

inline constexpr double kSmoothL1Beta = 1.0;
inline constexpr double kProbFloor = 1e-12;

struct LossBreakdown {
  double reg = 0.0;
  double cls = 0.0;
  double rpm_mode = 0.0;
  double rpm_state = 0.0;
  double rdm_distill = 0.0;
  double total = 0.0;
};

/// Differentiable loss terms; undefined tensors count as zero.
struct LossTerms {
  Tensor reg;
  Tensor cls;
  Tensor rpm_mode;
  Tensor rpm_state;
  Tensor rdm_distill;

  Tensor total() const;
  LossBreakdown values() const;
};

/// Per agent, the mode with the smallest ADE (ties to the lowest index).
std::vector<int> best_mode_index(const Tensor& traj, const std::vector<double>& gt);

/// Mean over agents and steps of the smooth-L1 residual of mode k*, summed
/// over the two coordinates.
Tensor regression_loss(const Tensor& traj, const std::vector<double>& gt, const std::vector<int>& k_star,
                       double beta = kSmoothL1Beta);

/// Mean of -log P[k*], probabilities clamped below at 1e-12.
Tensor classification_loss(const Tensor& probs, const std::vector<int>& k_star);

/// Winner-takes-all regression plus classification against `gt`.
std::pair<Tensor, Tensor> trajectory_loss(const Tensor& traj, const Tensor& probs, const std::vector<double>& gt);

/// Mode and state terms, each averaged over the stages present. One
/// backward-ordered dT x 2 segment per output (see retro.hpp).
std::pair<Tensor, Tensor> rpm_loss(const std::vector<RetroOutput>& outputs,
                                   const std::vector<std::vector<double>>& gt_segments);

/// Element-wise smooth-L1 mean between agent features; the teacher is a
/// constant unless `detach_teacher` is false.
Tensor distillation_loss(const FeatureBundle& distilled, const FeatureBundle& teacher, bool detach_teacher = true);

/// Mean of the given scalar tensors, undefined for an empty list.
Tensor stage_average(const std::vector<Tensor>& terms);

LossBreakdown total_loss(double reg, double cls, double rpm_mode, double rpm_state, double rdm_distill);

}  // namespace prf
