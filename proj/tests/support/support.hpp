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

// Fixtures and independent oracles shared by unit and acceptance tests.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "prf/harness.hpp"
#include "prf/metrics.hpp"
#include "prf/model.hpp"

namespace prf::testing {

/// N=2 agents (3 with the null-embedding agent), K=3, dT=4, C=8.
ModelConfig tiny_config(MixerKind mixer = MixerKind::SelectiveRecurrence);

/// History 12, horizon 6, agents 0 and 1 fully valid (both targets), agent 2
/// valid only on the first dT steps so short windows see no valid state.
Scenario tiny_scenario(std::uint64_t seed, int history = 12, int horizon = 6, int interval = 4);

struct GradCheck {
  std::string worst_param;
  double worst_rel = 0.0;
  std::size_t checked = 0;
  std::vector<std::string> no_grad;  // parameters whose analytic grad is all zero
};

/// Central differences with step h on every entry of every parameter whose
/// name starts with one of `prefixes` (all parameters when empty). Relative
/// error is |a - n| / max(|a|, |n|, floor).
GradCheck check_gradients(nn::ParamStore& ps, const std::function<ag::Tensor()>& loss,
                          const std::vector<std::string>& prefixes = {}, double h = 1e-5, double floor = 1e-6,
                          std::size_t max_entries = 0);

/// Brute-force metric values per agent, written with plain loops.
struct NaiveSummary {
  double made = 0.0;
  double mfde = 0.0;
  double bmfde = 0.0;
  double mr = 0.0;
};
NaiveSummary naive_summary(const ModeSet& pred, const std::vector<double>& gt, int K, double delta = 2.0);

ModeSet random_mode_set(Rng& rng, int Na, int K, int T);
std::vector<double> random_track(Rng& rng, int Na, int T);

}  // namespace prf::testing
