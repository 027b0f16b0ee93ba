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

#include "prf/objectives.hpp"

#include <cmath>

#include "prf/error.hpp"

namespace prf {

namespace {

double value_or_zero(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

void check_gt(const Tensor& traj, const std::vector<double>& gt) {
  if (gt.size() != static_cast<std::size_t>(traj.b()) * traj.c()) {
    throw ContractError("ground truth size " + std::to_string(gt.size()) + " does not match " + traj.shape().str());
  }
}

}  // namespace

Tensor LossTerms::total() const {
  Tensor out;
  for (const Tensor* t : {&reg, &cls, &rpm_mode, &rpm_state, &rdm_distill}) {
    if (!t->defined()) continue;
    out = out.defined() ? ag::add(out, *t) : *t;
  }
  return out.defined() ? out : Tensor::scalar(0.0);
}

LossBreakdown LossTerms::values() const {
  return total_loss(value_or_zero(reg), value_or_zero(cls), value_or_zero(rpm_mode), value_or_zero(rpm_state),
                    value_or_zero(rdm_distill));
}

std::vector<int> best_mode_index(const Tensor& traj, const std::vector<double>& gt) {
  check_gt(traj, gt);
  const int Na = traj.b();
  const int K = traj.r();
  const int T = traj.c() / 2;
  const auto d = traj.data();
  for (double x : d) {
    if (!std::isfinite(x)) throw NumericError("best_mode_index: non-finite prediction");
  }
  for (double x : gt) {
    if (!std::isfinite(x)) throw NumericError("best_mode_index: non-finite ground truth");
  }
  std::vector<int> out(Na, 0);
  for (int i = 0; i < Na; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      double ade = 0.0;
      for (int t = 0; t < T; ++t) {
        const std::size_t p = (static_cast<std::size_t>(i) * K + k) * T * 2 + 2 * t;
        const std::size_t g = (static_cast<std::size_t>(i) * T + t) * 2;
        ade += std::hypot(d[p] - gt[g], d[p + 1] - gt[g + 1]);
      }
      ade /= T;
      if (ade < best) {
        best = ade;
        out[i] = k;
      }
    }
  }
  return out;
}

Tensor regression_loss(const Tensor& traj, const std::vector<double>& gt, const std::vector<int>& k_star,
                       double beta) {
  check_gt(traj, gt);
  if (k_star.size() != static_cast<std::size_t>(traj.b())) throw ContractError("one winning mode per agent required");
  const int Na = traj.b();
  const int T = traj.c() / 2;
  Tensor chosen = ag::gather_rows(traj, k_star);
  Tensor diff = ag::sub(chosen, Tensor::from({Na, 1, 2 * T}, gt));
  return ag::scale(ag::sum(ag::smooth_l1(diff, beta)), 1.0 / (static_cast<double>(Na) * T));
}

Tensor classification_loss(const Tensor& probs, const std::vector<int>& k_star) {
  const int Na = probs.b();
  if (probs.r() != 1 || k_star.size() != static_cast<std::size_t>(Na)) {
    throw ContractError("classification_loss: probs must be (N_a, 1, K) with one label per agent");
  }
  Tensor p = ag::gather_rows(ag::reshape(probs, {Na, probs.c(), 1}), k_star);
  return ag::scale(ag::sum(ag::log_clamped(p, kProbFloor)), -1.0 / Na);
}

std::pair<Tensor, Tensor> trajectory_loss(const Tensor& traj, const Tensor& probs, const std::vector<double>& gt) {
  const auto k = best_mode_index(traj, gt);
  return {regression_loss(traj, gt, k), classification_loss(probs, k)};
}

Tensor stage_average(const std::vector<Tensor>& terms) {
  if (terms.empty()) return {};
  Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = ag::add(acc, terms[i]);
  return ag::scale(acc, 1.0 / static_cast<double>(terms.size()));
}

std::pair<Tensor, Tensor> rpm_loss(const std::vector<RetroOutput>& outputs,
                                   const std::vector<std::vector<double>>& gt_segments) {
  if (gt_segments.size() != outputs.size()) throw ContractError("rpm_loss: one ground-truth segment per stage");
  std::vector<Tensor> mode_terms;
  std::vector<Tensor> state_terms;
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    const auto& o = outputs[s];
    auto [mreg, mcls] = trajectory_loss(o.proposals, o.proposal_probs, gt_segments[s]);
    auto [sreg, scls] = trajectory_loss(o.refined, o.probs, gt_segments[s]);
    mode_terms.push_back(ag::add(mreg, mcls));
    state_terms.push_back(ag::add(sreg, scls));
  }
  return {stage_average(mode_terms), stage_average(state_terms)};
}

Tensor distillation_loss(const FeatureBundle& distilled, const FeatureBundle& teacher, bool detach_teacher) {
  const Tensor& a = distilled.agent_feats;
  const Tensor& b = teacher.agent_feats;
  if (!(a.shape() == b.shape())) throw ContractError("distillation_loss: shape mismatch");
  return ag::mean(ag::smooth_l1(ag::sub(a, detach_teacher ? ag::detach(b) : b), kSmoothL1Beta));
}

LossBreakdown total_loss(double reg, double cls, double rpm_mode, double rpm_state, double rdm_distill) {
  return {reg, cls, rpm_mode, rpm_state, rdm_distill, reg + cls + rpm_mode + rpm_state + rdm_distill};
}

}  // namespace prf
