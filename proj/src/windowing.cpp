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

#include "prf/windowing.hpp"

#include <algorithm>
#include <cmath>

#include "prf/error.hpp"

namespace prf {

void check_interval(int T_o, int dT) {
  if (dT < 1) throw ConfigError("dt", "interval must be at least 1");
  if (T_o < 1) throw ConfigError("history", "T_o must be positive");
  if (T_o % dT != 0) {
    throw ConfigError("dt", "interval " + std::to_string(dT) + " does not divide T_o = " + std::to_string(T_o));
  }
}

int num_incomplete(int T_o, int dT) {
  check_interval(T_o, dT);
  return T_o / dT - 1;
}

std::vector<int> admissible_lengths(int T_o, int dT) {
  check_interval(T_o, dT);
  std::vector<int> out;
  for (int len = dT; len <= T_o; len += dT) out.push_back(len);
  return out;
}

int omission_index(int T_v, int T_o, int dT) {
  check_interval(T_o, dT);
  if (T_v < dT || T_v > T_o || T_v % dT != 0) {
    throw LengthError("length " + std::to_string(T_v) + " is not admissible");
  }
  return (T_o - T_v) / dT;
}

ObservationWindow slice_window(const Scenario& s, int start, int end, int v) {
  if (start < 0 || end > s.num_steps || start > end) {
    throw BoundsError("window [" + std::to_string(start) + ", " + std::to_string(end) + ") outside scenario of " +
                      std::to_string(s.num_steps) + " steps");
  }
  ObservationWindow w;
  w.num_agents = s.num_agents;
  w.length = end - start;
  w.v = v;
  w.start_step = start;
  w.end_step = end;
  w.states.reserve(static_cast<std::size_t>(s.num_agents) * w.length * kAgentChannels);
  w.valid.reserve(static_cast<std::size_t>(s.num_agents) * w.length);
  for (int a = 0; a < s.num_agents; ++a) {
    for (int t = start; t < end; ++t) {
      for (int ch = 0; ch < kAgentChannels; ++ch) w.states.push_back(s.state(a, t, ch));
      w.valid.push_back(s.is_valid(a, t) ? 1 : 0);
    }
  }
  return w;
}

ObservationWindow make_incomplete(const Scenario& s, int v, int dT, int prediction_start) {
  const int T_o = s.split_index;
  const int tau = num_incomplete(T_o, dT);
  if (v < 0 || v > tau) {
    throw BoundsError("omission index " + std::to_string(v) + " outside [0, " + std::to_string(tau) + "]");
  }
  const int T_v = T_o - v * dT;
  return slice_window(s, prediction_start - T_v, prediction_start, v);
}

LengthPolicy parse_length_policy(const std::string& name) {
  if (name == "truncate") return LengthPolicy::Truncate;
  if (name == "pad") return LengthPolicy::Pad;
  if (name == "uniform" || name == "uniform_sample") return LengthPolicy::UniformSample;
  throw ConfigError("length_policy", "unknown policy '" + name + "'");
}

std::string to_string(LengthPolicy policy) {
  switch (policy) {
    case LengthPolicy::Truncate: return "truncate";
    case LengthPolicy::Pad: return "pad";
    case LengthPolicy::UniformSample: return "uniform";
  }
  return "?";
}

std::vector<int> uniform_indices(int L, int K) {
  if (K < 1 || K > L) throw LengthError("cannot sample " + std::to_string(K) + " of " + std::to_string(L) + " steps");
  if (K == 1) return {L - 1};
  std::vector<int> idx(K);
  for (int j = 0; j < K; ++j) {
    idx[j] = static_cast<int>(std::lround(static_cast<double>(j) * (L - 1) / (K - 1)));
  }
  return idx;
}

ObservationWindow adapt_arbitrary_length(const std::vector<double>& states, const std::vector<std::uint8_t>& valid,
                                         int num_agents, int L, int dT, int T_o, LengthPolicy policy) {
  check_interval(T_o, dT);
  if (num_agents < 0 || states.size() != static_cast<std::size_t>(num_agents) * L * kAgentChannels) {
    throw ContractError("state array does not match N x L x C_a");
  }
  if (!valid.empty() && valid.size() != static_cast<std::size_t>(num_agents) * L) {
    throw ContractError("mask does not match N x L");
  }
  if (L < 1) throw LengthError("empty observation");
  const int capped = std::min(L, T_o);
  const int offset = L - capped;  // steps dropped beyond T_o

  // Source index in [0, L) for each output step, or -1 for padding.
  std::vector<int> src;
  switch (policy) {
    case LengthPolicy::Truncate: {
      if (capped < dT) throw LengthError("length " + std::to_string(L) + " shorter than interval");
      const int K = capped / dT * dT;
      for (int j = L - K; j < L; ++j) src.push_back(j);
      break;
    }
    case LengthPolicy::UniformSample: {
      if (capped < dT) throw LengthError("length " + std::to_string(L) + " shorter than interval");
      const int K = capped / dT * dT;
      for (int j : uniform_indices(capped, K)) src.push_back(offset + j);
      break;
    }
    case LengthPolicy::Pad: {
      const int K = (capped + dT - 1) / dT * dT;
      for (int j = 0; j < K - capped; ++j) src.push_back(-1);
      for (int j = offset; j < L; ++j) src.push_back(j);
      break;
    }
  }

  ObservationWindow w;
  w.num_agents = num_agents;
  w.length = static_cast<int>(src.size());
  w.v = (T_o - w.length) / dT;
  w.end_step = L;
  w.start_step = L - w.length;
  for (int a = 0; a < num_agents; ++a) {
    const std::size_t base = static_cast<std::size_t>(a) * L;
    for (int j : src) {
      const int from = j < 0 ? offset : j;
      for (int ch = 0; ch < kAgentChannels; ++ch) w.states.push_back(states[(base + from) * kAgentChannels + ch]);
      const bool ok = j >= 0 && (valid.empty() || valid[base + j] != 0);
      w.valid.push_back(ok ? 1 : 0);
    }
  }
  return w;
}

std::vector<RstsSample> rsts_enumerate(int T_o, int T_f, int dT, int scenario_length) {
  const int tau = num_incomplete(T_o, dT);
  if (T_f < 1) throw ConfigError("horizon", "T_f must be positive");
  if (scenario_length < T_o + T_f) {
    throw BoundsError("scenario of " + std::to_string(scenario_length) + " steps is shorter than T_o + T_f = " +
                      std::to_string(T_o + T_f));
  }
  std::vector<RstsSample> out;
  if (tau == 0) {
    out.push_back({T_o, {0, 0, T_o}, {}, T_o, T_o + T_f});
    return out;
  }
  for (int start = T_o; start >= 2 * dT; start -= dT) {
    RstsSample smp;
    smp.prediction_start = start;
    const int v_min = (T_o - start) / dT;
    smp.decoder = {v_min, 0, start};
    for (int u = tau; u > v_min; --u) {
      const int T_u = T_o - u * dT;
      UnitWindow uw;
      uw.unit = u;
      uw.input = {u, start - T_u, start};
      uw.teacher = {u - 1, start - T_u - dT, start};
      uw.omitted = {u - 1, start - T_u - dT, start - T_u};
      smp.units.push_back(uw);
    }
    smp.future_start = start;
    smp.future_end = start + T_f;
    out.push_back(std::move(smp));
  }
  return out;
}

std::vector<int> unit_sample_counts(const std::vector<RstsSample>& samples, int tau) {
  std::vector<int> counts(tau + 1, 0);
  for (const auto& s : samples) {
    for (const auto& u : s.units) {
      if (u.unit < 1 || u.unit > tau) throw ContractError("unit index out of range");
      ++counts[u.unit];
    }
  }
  return counts;
}

}  // namespace prf
