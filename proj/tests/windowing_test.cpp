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

#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "prf/error.hpp"
#include "prf/rng.hpp"
#include "prf/scenario.hpp"
#include "prf/windowing.hpp"

namespace prf {
namespace {

Scenario scenario(int history, int horizon, std::uint64_t seed = 1) {
  GenConfig g;
  g.seed = seed;
  g.num_scenarios = 1;
  g.history = history;
  g.horizon = horizon;
  return generate_dataset(g).front();
}

TEST(AdmissibleLengths, KnownGrids) {
  EXPECT_EQ(admissible_lengths(50, 10), (std::vector<int>{10, 20, 30, 40, 50}));
  EXPECT_EQ(admissible_lengths(20, 5), (std::vector<int>{5, 10, 15, 20}));
  EXPECT_EQ(admissible_lengths(10, 10), (std::vector<int>{10}));
  EXPECT_EQ(num_incomplete(10, 10), 0);
  EXPECT_THROW(admissible_lengths(50, 7), ConfigError);
  EXPECT_THROW(admissible_lengths(50, 0), ConfigError);
}

TEST(MakeIncomplete, MostRecentSteps) {
  const Scenario s = scenario(50, 60);
  const auto w = make_incomplete(s, 2, 10, 50);
  EXPECT_EQ(w.length, 30);
  EXPECT_EQ(w.v, 2);
  EXPECT_EQ(w.start_step, 20);
  EXPECT_EQ(w.end_step, 50);
  for (int a = 0; a < s.num_agents; ++a) {
    for (int t = 0; t < 30; ++t) {
      for (int ch = 0; ch < kAgentChannels; ++ch) EXPECT_EQ(w.state(a, t, ch), s.state(a, 20 + t, ch));
    }
  }
  const auto shortest = make_incomplete(s, 4, 10, 50);
  EXPECT_EQ(shortest.length, 10);
  EXPECT_EQ(shortest.start_step, 40);
  EXPECT_EQ(make_incomplete(s, 0, 10, 50), slice_window(s, 0, 50, 0));
}

TEST(MakeIncomplete, BoundsErrors) {
  const Scenario s = scenario(50, 60);
  EXPECT_THROW(make_incomplete(s, 5, 10, 50), BoundsError);
  EXPECT_THROW(make_incomplete(s, -1, 10, 50), BoundsError);
  EXPECT_THROW(make_incomplete(s, 0, 10, 30), BoundsError);
}

TEST(MakeIncomplete, PrefixPlusWindowReproducesFull) {
  const Scenario s = scenario(20, 30);
  const auto full = make_incomplete(s, 0, 5, 20);
  for (int v = 0; v <= 3; ++v) {
    const auto w = make_incomplete(s, v, 5, 20);
    const auto prefix = slice_window(s, 0, 5 * v, v);
    for (int a = 0; a < s.num_agents; ++a) {
      for (int t = 0; t < 20; ++t) {
        const double got = t < 5 * v ? prefix.state(a, t, 0) : w.state(a, t - 5 * v, 0);
        EXPECT_EQ(got, full.state(a, t, 0));
      }
    }
  }
}

struct Raw {
  std::vector<double> states;
  std::vector<std::uint8_t> valid;
};

Raw ramp(int N, int L) {
  Raw r;
  for (int a = 0; a < N; ++a) {
    for (int t = 0; t < L; ++t) {
      r.states.insert(r.states.end(), {100.0 * a + t, 0.5 * t, 0.0, 1.0, 0.0});
      r.valid.push_back(1);
    }
  }
  return r;
}

TEST(AdaptArbitraryLength, TruncateKeepsMostRecent) {
  const Raw r = ramp(2, 32);
  const auto w = adapt_arbitrary_length(r.states, r.valid, 2, 32, 10, 50, LengthPolicy::Truncate);
  EXPECT_EQ(w.length, 30);
  EXPECT_EQ(w.v, 2);
  for (int t = 0; t < 30; ++t) EXPECT_EQ(w.state(1, t, 0), 100.0 + 2 + t);
  EXPECT_EQ(w.state(0, 29, 0), r.states[31 * 5]);
}

TEST(AdaptArbitraryLength, AdmissibleLengthUnchangedUnderEveryPolicy) {
  const Raw r = ramp(2, 30);
  for (auto p : {LengthPolicy::Truncate, LengthPolicy::Pad, LengthPolicy::UniformSample}) {
    const auto w = adapt_arbitrary_length(r.states, r.valid, 2, 30, 10, 50, p);
    EXPECT_EQ(w.length, 30);
    EXPECT_EQ(w.v, 2);
    EXPECT_EQ(w.states, r.states);
    EXPECT_EQ(w.valid, r.valid);
  }
}

TEST(AdaptArbitraryLength, UniformSampleEvenIndices) {
  EXPECT_EQ(uniform_indices(15, 15), [] {
    std::vector<int> v(15);
    for (int i = 0; i < 15; ++i) v[i] = i;
    return v;
  }());
  // Hand enumeration of round(j * 16 / 14) for j = 0..14.
  const std::vector<int> expected{0, 1, 2, 3, 5, 6, 7, 8, 9, 10, 11, 13, 14, 15, 16};
  EXPECT_EQ(uniform_indices(17, 15), expected);
  const Raw r = ramp(1, 17);
  const auto w = adapt_arbitrary_length(r.states, r.valid, 1, 17, 5, 20, LengthPolicy::UniformSample);
  ASSERT_EQ(w.length, 15);
  for (int j = 0; j < 15; ++j) EXPECT_EQ(w.state(0, j, 0), expected[j]);
  EXPECT_EQ(w.state(0, 14, 0), 16.0);
}

TEST(AdaptArbitraryLength, PadRepeatsEarliestAndMarksInvalid) {
  const Raw r = ramp(1, 17);
  const auto w = adapt_arbitrary_length(r.states, r.valid, 1, 17, 5, 20, LengthPolicy::Pad);
  ASSERT_EQ(w.length, 20);
  EXPECT_EQ(w.v, 0);
  for (int t = 0; t < 3; ++t) {
    EXPECT_FALSE(w.is_valid(0, t));
    EXPECT_EQ(w.state(0, t, 0), 0.0);
  }
  for (int t = 3; t < 20; ++t) {
    EXPECT_TRUE(w.is_valid(0, t));
    EXPECT_EQ(w.state(0, t, 0), t - 3);
  }
}

TEST(AdaptArbitraryLength, TooShortIsLengthError) {
  const Raw r = ramp(1, 4);
  EXPECT_THROW(adapt_arbitrary_length(r.states, r.valid, 1, 4, 5, 20, LengthPolicy::Truncate), LengthError);
  EXPECT_THROW(adapt_arbitrary_length(r.states, r.valid, 1, 4, 5, 20, LengthPolicy::UniformSample), LengthError);
  EXPECT_EQ(adapt_arbitrary_length(r.states, r.valid, 1, 4, 5, 20, LengthPolicy::Pad).length, 5);
}

TEST(AdaptArbitraryLength, TruncationPreservesFinalStateProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = rng.uniform_int(5, 40);
    Raw r = ramp(2, L);
    for (auto& x : r.states) x += rng.normal();
    for (auto p : {LengthPolicy::Truncate, LengthPolicy::UniformSample}) {
      const auto w = adapt_arbitrary_length(r.states, r.valid, 2, L, 5, 40, p);
      for (int ch = 0; ch < kAgentChannels; ++ch) {
        EXPECT_EQ(w.state(1, w.length - 1, ch), r.states[((L) + (L - 1)) * 5 + ch]);
      }
    }
  }
}

TEST(LengthPolicy, Names) {
  EXPECT_EQ(parse_length_policy("truncate"), LengthPolicy::Truncate);
  EXPECT_EQ(parse_length_policy("pad"), LengthPolicy::Pad);
  EXPECT_EQ(parse_length_policy("uniform"), LengthPolicy::UniformSample);
  EXPECT_THROW(parse_length_policy("zero"), ConfigError);
}

TEST(Rsts, LongHorizonWindowSets) {
  const auto samples = rsts_enumerate(50, 60, 10, 110);
  ASSERT_EQ(samples.size(), 4u);
  const std::vector<int> starts{50, 40, 30, 20};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = samples[i];
    EXPECT_EQ(s.prediction_start, starts[i]);
    EXPECT_EQ(s.decoder.start, 0);
    EXPECT_EQ(s.decoder.end, starts[i]);
    EXPECT_EQ(s.decoder.v, static_cast<int>(i));
    EXPECT_EQ(s.future_start, starts[i]);
    EXPECT_EQ(s.future_end - s.future_start, 60);
    ASSERT_EQ(s.units.size(), 4 - i);
    for (std::size_t j = 0; j < s.units.size(); ++j) {
      const auto& u = s.units[j];
      EXPECT_EQ(u.unit, 4 - static_cast<int>(j));
      EXPECT_EQ(u.input.length(), 50 - 10 * u.unit);
      EXPECT_EQ(u.input.end, starts[i]);
      EXPECT_EQ(u.teacher.length(), u.input.length() + 10);
      EXPECT_EQ(u.omitted.end, u.input.start);
      EXPECT_EQ(u.omitted.length(), 10);
    }
  }
  // Start 50: windows [41,50], [31,50], [21,50], [11,50] in 1-based inclusive terms.
  EXPECT_EQ(samples[0].units[0].input, (WindowSpec{4, 40, 50}));
  EXPECT_EQ(samples[0].units[3].input, (WindowSpec{1, 10, 50}));
  EXPECT_EQ(unit_sample_counts(samples, 4), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Rsts, DegenerateAndShortGrid) {
  const auto one = rsts_enumerate(20, 30, 10, 50);
  ASSERT_EQ(one.size(), 1u);
  ASSERT_EQ(one[0].units.size(), 1u);
  EXPECT_EQ(one[0].units[0].unit, 1);
  EXPECT_EQ(unit_sample_counts(one, 1), (std::vector<int>{0, 1}));
  EXPECT_EQ(unit_sample_counts(rsts_enumerate(20, 30, 5, 50), 3), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_THROW(rsts_enumerate(20, 30, 5, 49), BoundsError);
}

// Independent enumeration: every (start, unit) pair whose input and teacher
// windows fit before the start, with starts rolled back while at least one
// unit remains trainable.
std::map<int, int> brute_force_counts(int T_o, int dT) {
  const int tau = T_o / dT - 1;
  std::map<int, int> counts;
  for (int start = T_o; start >= dT; start -= dT) {
    bool any = false;
    for (int u = 1; u <= tau; ++u) {
      const int input = T_o - u * dT;
      const bool teacher_fits = start - input - dT >= 0;
      const bool unit_reaches_start = (T_o - start) / dT < u;
      if (teacher_fits && unit_reaches_start) {
        ++counts[u];
        any = true;
      }
    }
    if (any) ++counts[0];
  }
  return counts;
}

TEST(Rsts, CountsMatchBruteForceForRandomDivisors) {
  for (int T_o : {12, 20, 24, 30, 36, 50, 60}) {
    for (int dT = 1; dT <= T_o; ++dT) {
      if (T_o % dT != 0 || dT == T_o || T_o / dT > 12) continue;
      const int tau = T_o / dT - 1;
      const auto samples = rsts_enumerate(T_o, 7, dT, T_o + 7);
      const auto counts = unit_sample_counts(samples, tau);
      const auto oracle = brute_force_counts(T_o, dT);
      for (int u = 1; u <= tau; ++u) {
        EXPECT_EQ(counts[u], u) << T_o << "/" << dT;
        EXPECT_EQ(counts[u], oracle.at(u));
      }
      EXPECT_EQ(static_cast<int>(samples.size()), oracle.at(0));
      EXPECT_EQ(static_cast<int>(samples.size()), tau);
    }
  }
}

}  // namespace
}  // namespace prf
