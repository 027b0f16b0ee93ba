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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "prf/error.hpp"
#include "prf/scenario.hpp"

namespace prf {
namespace {

TEST(GenerateMap, DeterministicForSameSeed) {
  GenConfig cfg;
  EXPECT_EQ(generate_map(cfg, 7), generate_map(cfg, 7));
  EXPECT_NE(generate_map(cfg, 7).data, generate_map(cfg, 8).data);
}

TEST(GenerateMap, StraightGrammarHasConstantHeadingPerPolyline) {
  GenConfig cfg;
  cfg.grammar = {1.0, 0.0, 0.0, 0.0};
  for (std::uint64_t seed : {1, 2, 3}) {
    const VectorMap m = generate_map(cfg, seed);
    ASSERT_GE(m.num_polylines, 1);
    for (int p = 0; p < m.num_polylines; ++p) {
      for (int s = 1; s < m.num_points; ++s) {
        EXPECT_NEAR(std::remainder(m.at(p, s, 2) - m.at(p, 0, 2), 2 * M_PI), 0.0, 1e-9);
      }
    }
  }
}

TEST(GenerateMap, StepsBoundedOverExhaustiveScan) {
  GenConfig cfg;
  const VectorMap m = generate_map(cfg, 7);
  double worst = 0.0;
  for (int p = 0; p < m.num_polylines; ++p) {
    for (int s = 1; s < m.num_points; ++s) {
      worst = std::max(worst, std::hypot(m.at(p, s, 0) - m.at(p, s - 1, 0), m.at(p, s, 1) - m.at(p, s - 1, 1)));
    }
  }
  EXPECT_LE(worst, 5.0);
  EXPECT_DOUBLE_EQ(worst, m.max_step());
  EXPECT_EQ(m.channels, kMapChannels);
  EXPECT_GE(m.num_points, 2);
}

TEST(GenerateMap, InvalidConfigNamesField) {
  GenConfig cfg;
  cfg.grammar.curve = 0.5;
  try {
    generate_map(cfg, 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "grammar");
  }
  GenConfig bad_noise;
  bad_noise.noise_std = -1.0;
  try {
    bad_noise.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "noise_std");
  }
}

TEST(SimulateAgent, ZeroNoiseConstantVelocityIsExact) {
  MotionSpec spec;
  spec.kind = MotionKind::ConstantVelocity;
  spec.speed = 1.0;
  const auto st = simulate_agent(spec, 30, 0.1, 0.0, 0.0, 1);
  for (std::size_t t = 1; t < st.size(); ++t) {
    EXPECT_NEAR(st[t].x - st[t - 1].x, 0.1, 1e-12) << t;
    EXPECT_DOUBLE_EQ(st[t].y, 0.0);
  }
}

TEST(SimulateAgent, NoisyConstantVelocityStepsStayNearTruth) {
  MotionSpec spec;
  spec.speed = 10.0;
  spec.heading = 0.3;
  const double noise = 0.05;
  const auto st = simulate_agent(spec, 50, 0.1, noise, 0.0, 4);
  for (std::size_t t = 1; t < st.size(); ++t) {
    const double step = std::hypot(st[t].x - st[t - 1].x, st[t].y - st[t - 1].y);
    EXPECT_NEAR(step, 1.0, 2 * 5 * noise);
  }
}

TEST(GenerateScenario, ForcedLateEntryAffectsEveryNonTarget) {
  GenConfig cfg;
  cfg.late_entry_prob = 1.0;
  cfg.num_scenarios = 20;
  for (const auto& s : generate_dataset(cfg)) {
    for (int a = 0; a < s.num_agents; ++a) {
      const bool target = std::find(s.target_ids.begin(), s.target_ids.end(), a) != s.target_ids.end();
      if (!target) EXPECT_FALSE(s.is_valid(a, 0)) << s.id << " agent " << a;
    }
  }
}

TEST(GenerateScenario, LateEntryRateMatchesConfiguredProbability) {
  GenConfig cfg;
  cfg.seed = 3;
  cfg.num_scenarios = 400;
  int total = 0;
  int late = 0;
  for (const auto& s : generate_dataset(cfg)) {
    for (int a = 0; a < s.num_agents && total < 1000; ++a) {
      if (std::find(s.target_ids.begin(), s.target_ids.end(), a) != s.target_ids.end()) continue;
      ++total;
      late += s.is_valid(a, 0) ? 0 : 1;
    }
  }
  ASSERT_EQ(total, 1000);
  EXPECT_NEAR(static_cast<double>(late) / total, cfg.late_entry_prob, 0.05);
}

TEST(GenerateScenario, TargetsFullyValidAndInvariantsHold) {
  GenConfig cfg;
  cfg.num_scenarios = 30;
  cfg.tracking_loss_prob = 0.5;
  int interior_gaps = 0;
  for (const auto& s : generate_dataset(cfg)) {
    EXPECT_NO_THROW(s.validate());
    for (int a : s.target_ids) {
      for (int t = 0; t < s.num_steps; ++t) EXPECT_TRUE(s.is_valid(a, t));
    }
    for (int a = 0; a < s.num_agents; ++a) {
      for (int t = 1; t + 1 < s.num_steps; ++t) {
        if (!s.is_valid(a, t) && s.is_valid(a, t - 1)) ++interior_gaps;
      }
    }
  }
  EXPECT_GT(interior_gaps, 0);
}

TEST(GenerateScenario, HorizonBeyondMaximumIsConfigError) {
  GenConfig cfg;
  cfg.history = 1000;
  cfg.horizon = 100;
  EXPECT_THROW(generate_dataset(cfg), ConfigError);
}

TEST(ScenarioIo, RoundTripIsIdentity) {
  GenConfig cfg;
  cfg.num_scenarios = 5;
  const auto data = generate_dataset(cfg);
  std::stringstream ss;
  write_scenarios(data, ss);
  EXPECT_EQ(read_scenarios(ss), data);

  const auto path = std::filesystem::temp_directory_path() / "prf_single_scenario.txt";
  write_scenario(data[2], path);
  EXPECT_EQ(read_scenario(path), data[2]);
  std::filesystem::remove(path);
}

Scenario hand_built() {
  Scenario s;
  s.id = "hand";
  s.map.num_polylines = 1;
  s.map.num_points = 2;
  s.map.data = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  s.num_agents = 1;
  s.num_steps = 7;
  s.split_index = 4;
  for (int t = 0; t < 7; ++t) {
    const double x = 0.1 * t + 1.0 / 3.0;
    s.states.insert(s.states.end(), {x, -2.0 / 7.0, 0.0, 1.0, 0.0});
    s.valid.push_back(1);
  }
  s.target_ids = {0};
  return s;
}

TEST(ScenarioIo, HandBuiltFixtureRoundTrips) {
  const Scenario s = hand_built();
  ASSERT_NO_THROW(s.validate());
  std::stringstream ss;
  write_scenarios({s}, ss);
  const auto back = read_scenarios(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], s);
  EXPECT_NO_THROW(back[0].validate());
  EXPECT_EQ(back[0].history(), 4);
  EXPECT_EQ(back[0].horizon(), 3);
}

TEST(ScenarioIo, MissingSplitIndexIsParseErrorWithLine) {
  std::stringstream ss;
  write_scenarios({hand_built()}, ss);
  std::string text = ss.str();
  const auto pos = text.find("\tsplit_index=");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, text.find('\n', pos) - pos);
  std::stringstream in(text);
  try {
    read_scenarios(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("split_index"), std::string::npos);
  }
}

TEST(ScenarioIo, VersionMismatch) {
  std::stringstream in("prf-scenario v9\n");
  EXPECT_THROW(read_scenarios(in), VersionError);
}

TEST(ScenarioIo, InvalidScenarioRejectedOnWrite) {
  Scenario s = hand_built();
  s.target_ids = {3};
  std::stringstream ss;
  EXPECT_THROW(write_scenarios({s}, ss), DataError);
}

}  // namespace
}  // namespace prf
