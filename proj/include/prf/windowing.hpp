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

// Observation-length arithmetic and rolling-start sample enumeration.
//
// Windows are 0-based and half-open: [start_step, end_step). With full
// history T_o and interval dT, omitting the first v intervals leaves
// T_v = T_o - v * dT steps, v in [0, tau] with tau = T_o / dT - 1.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prf/scenario.hpp"

namespace prf {

struct ObservationWindow {
  int num_agents = 0;
  int length = 0;  // T_v
  int v = 0;
  int start_step = 0;
  int end_step = 0;
  std::vector<double> states;       // N x T_v x kAgentChannels
  std::vector<std::uint8_t> valid;  // N x T_v

  double state(int agent, int t, int ch) const {
    return states[(static_cast<std::size_t>(agent) * length + t) * kAgentChannels + ch];
  }
  bool is_valid(int agent, int t) const { return valid[static_cast<std::size_t>(agent) * length + t] != 0; }

  friend bool operator==(const ObservationWindow&, const ObservationWindow&) = default;
};

/// Throws ConfigError unless 1 <= dT and dT divides T_o.
void check_interval(int T_o, int dT);
/// tau = T_o / dT - 1.
int num_incomplete(int T_o, int dT);
/// [dT, 2 dT, ..., T_o].
std::vector<int> admissible_lengths(int T_o, int dT);
/// (T_o - T_v) / dT; throws LengthError when T_v is not admissible.
int omission_index(int T_v, int T_o, int dT);

/// Steps [start, end) of every agent, tagged with omission index v.
ObservationWindow slice_window(const Scenario& s, int start, int end, int v);

/// The T_v = T_o - v dT steps right before `prediction_start`, with T_o taken
/// from the scenario's split index.
ObservationWindow make_incomplete(const Scenario& s, int v, int dT, int prediction_start);

enum class LengthPolicy { Truncate, Pad, UniformSample };

LengthPolicy parse_length_policy(const std::string& name);
std::string to_string(LengthPolicy policy);

/// Maps an observation of arbitrary length L onto an admissible one. Lengths
/// above T_o are first cut to the most recent T_o steps.
///   Truncate:      most recent floor(L / dT) * dT steps.
///   UniformSample: that many indices round(j (L - 1) / (K - 1)), last included.
///   Pad:           earliest state repeated up to ceil(L / dT) * dT, padded
///                  steps marked invalid.
/// `valid` may be empty (all valid). start_step/end_step index the input with
/// end_step = L and start_step = L - T_v (negative for padding).
ObservationWindow adapt_arbitrary_length(const std::vector<double>& states, const std::vector<std::uint8_t>& valid,
                                         int num_agents, int L, int dT, int T_o, LengthPolicy policy);

/// Indices chosen by UniformSample for L input steps and K outputs.
std::vector<int> uniform_indices(int L, int K);

struct WindowSpec {
  int v = 0;
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// Training window for unit u: the unit consumes `input` (length T_u) and is
/// distilled toward `teacher` (length T_{u-1}); `omitted` is the dT-step
/// stretch right before `input` that its recovery head reconstructs.
struct UnitWindow {
  int unit = 0;
  WindowSpec input;
  WindowSpec teacher;
  WindowSpec omitted;
};

struct RstsSample {
  int prediction_start = 0;
  WindowSpec decoder;             // longest observation ending at the start
  std::vector<UnitWindow> units;  // ordered by descending unit index
  int future_start = 0;
  int future_end = 0;
};

/// One sample per start T_o, T_o - dT, ..., 2 dT. Unit u receives u windows
/// in total and the decoder tau. With tau = 0 the single standard sample at
/// T_o is returned.
std::vector<RstsSample> rsts_enumerate(int T_o, int T_f, int dT, int scenario_length);

/// Number of windows each unit receives across `samples`, indexed by unit.
std::vector<int> unit_sample_counts(const std::vector<RstsSample>& samples, int tau);

}  // namespace prf
