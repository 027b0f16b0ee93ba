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

#include <gtest/gtest.h>

#include "prf/error.hpp"
#include "support.hpp"

namespace prf {
namespace {

using testing::tiny_config;
using testing::tiny_scenario;

void expect_same(const Tensor& a, const Tensor& b) {
  ASSERT_TRUE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]) << i;
}

TEST(EncodeMap, IdenticalPolylinesGiveIdenticalRows) {
  Model m(tiny_config());
  Scenario s = tiny_scenario(1);
  VectorMap map = s.map;
  const int row = map.num_points * map.channels;
  std::copy(map.data.begin(), map.data.begin() + row, map.data.begin() + row);
  const Tensor f = m.backbone().encode_map(map).feats;
  for (int c = 0; c < f.c(); ++c) EXPECT_EQ(f.at(0, 0, c), f.at(0, 1, c));
}

TEST(EncodeMap, MinimalMapShape) {
  Model m(tiny_config());
  VectorMap map;
  map.num_polylines = 1;
  map.num_points = 2;
  map.data = {0, 0, 0, 1, 0, 0, 2, 0, 0, 1, 0, 0};
  const auto enc = m.backbone().encode_map(map);
  EXPECT_TRUE((enc.feats.shape() == ag::Shape{1, 1, 8}));
}

TEST(EncodeMap, NonFiniteInputIsNumericError) {
  Model m(tiny_config());
  VectorMap map = tiny_scenario(1).map;
  map.data[3] = std::nan("");
  EXPECT_THROW(m.backbone().encode_map(map), NumericError);
}

TEST(EncodeAgents, DeterministicAndLengthInvariantShape) {
  Model m(tiny_config());
  const Scenario s = tiny_scenario(2);
  const auto map = m.backbone().encode_map(s.map);
  const auto w = make_incomplete(s, 1, 4, 12);
  expect_same(m.backbone().encode_agents(w, map).agent_feats, m.backbone().encode_agents(w, map).agent_feats);
  for (int v = 0; v <= 2; ++v) {
    const auto f = m.backbone().encode_agents(make_incomplete(s, v, 4, 12), map);
    EXPECT_TRUE((f.agent_feats.shape() == ag::Shape{1, 3, 8}));
    EXPECT_EQ(f.v, v);
    EXPECT_TRUE((f.map_feats.shape() == map.feats.shape()));
  }
}

TEST(EncodeAgents, MaskedStatesDoNotInfluenceOutput) {
  Model m(tiny_config());
  Scenario s = tiny_scenario(3);
  // Hide an interior run of agent 1 and scramble it.
  for (int t = 3; t < 6; ++t) s.valid[1 * s.num_steps + t] = 0;
  const auto map = m.backbone().encode_map(s.map);
  const auto base = m.backbone().encode_agents(make_incomplete(s, 0, 4, 12), map);
  Scenario t = s;
  for (int step = 3; step < 6; ++step) {
    for (int ch = 0; ch < kAgentChannels; ++ch) t.state(1, step, ch) = 1e3 * (ch + 1) - step;
  }
  for (int step = 4; step < t.num_steps; ++step) t.state(2, step, 0) = -77.0;
  const auto moved = m.backbone().encode_agents(make_incomplete(t, 0, 4, 12), map);
  expect_same(base.agent_feats, moved.agent_feats);
}

TEST(EncodeAgents, AgentWithoutValidStepsGetsNullEmbedding) {
  Model m(tiny_config());
  const Scenario s = tiny_scenario(4);
  const auto map = m.backbone().encode_map(s.map);
  const auto f = m.backbone().encode_agents(make_incomplete(s, 1, 4, 12), map);
  EXPECT_FALSE(f.frames[2].observed);
  EXPECT_TRUE(f.frames[0].observed);
  EXPECT_EQ(f.observed_mask(), (std::vector<std::uint8_t>{1, 1, 0}));
}

TEST(DecodeFuture, ZeroOffsetHeadGivesStationaryExtrapolation) {
  Model m(tiny_config());
  for (double& w : m.backbone().offset_head().w.mutable_data()) w = 0.0;
  for (double& b : m.backbone().offset_head().b.mutable_data()) b = 0.0;
  const Scenario s = tiny_scenario(5);
  const auto map = m.backbone().encode_map(s.map);
  const auto w = make_incomplete(s, 1, 4, 12);
  const auto p = m.backbone().decode_future(m.backbone().encode_agents(w, map), s.target_ids);
  for (int i = 0; i < 2; ++i) {
    const int a = s.target_ids[i];
    for (int k = 0; k < 3; ++k) {
      for (int t = 0; t < 6; ++t) {
        EXPECT_NEAR(p.x(i, k, t), s.state(a, 11, 0), 1e-12);
        EXPECT_NEAR(p.y(i, k, t), s.state(a, 11, 1), 1e-12);
      }
    }
  }
}

TEST(DecodeFuture, ProbabilitiesOnSimplexForRandomParams) {
  const Scenario s = tiny_scenario(6);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ModelConfig cfg = tiny_config();
    cfg.seed = seed;
    Model m(cfg);
    const auto map = m.backbone().encode_map(s.map);
    const auto p = m.backbone().decode_future(m.backbone().encode_agents(make_incomplete(s, 0, 4, 12), map), {0, 1});
    EXPECT_EQ(p.modes(), 3);
    EXPECT_EQ(p.horizon(), 6);
    for (int i = 0; i < 2; ++i) {
      double z = 0.0;
      for (int k = 0; k < 3; ++k) {
        EXPECT_GE(p.prob(i, k), 0.0);
        z += p.prob(i, k);
      }
      EXPECT_NEAR(z, 1.0, 1e-6);
    }
  }
}

TEST(DecodeFuture, TargetWithoutObservationIsContractError) {
  Model m(tiny_config());
  const Scenario s = tiny_scenario(7);
  const auto map = m.backbone().encode_map(s.map);
  const auto f = m.backbone().encode_agents(make_incomplete(s, 1, 4, 12), map);
  EXPECT_THROW(m.backbone().decode_future(f, {2}), ContractError);
}

TEST(Backbone, TranslationEquivariance) {
  Model m(tiny_config());
  const Scenario s = tiny_scenario(8);
  Scenario t = s;
  const double dx = 12.5;
  const double dy = -40.25;
  for (int p = 0; p < t.map.num_polylines; ++p) {
    for (int k = 0; k < t.map.num_points; ++k) {
      t.map.at(p, k, 0) += dx;
      t.map.at(p, k, 1) += dy;
    }
  }
  for (int a = 0; a < t.num_agents; ++a) {
    for (int step = 0; step < t.num_steps; ++step) {
      if (!t.is_valid(a, step)) continue;
      t.state(a, step, 0) += dx;
      t.state(a, step, 1) += dy;
    }
  }
  auto run = [&](const Scenario& sc) {
    const auto map = m.backbone().encode_map(sc.map);
    return m.backbone().decode_future(m.backbone().encode_agents(make_incomplete(sc, 0, 4, 12), map), {0, 1});
  };
  const auto a = run(s);
  const auto b = run(t);
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(b.prob(i, k), a.prob(i, k), 1e-9);
      for (int step = 0; step < 6; ++step) {
        EXPECT_NEAR(b.x(i, k, step) - a.x(i, k, step), dx, 1e-9);
        EXPECT_NEAR(b.y(i, k, step) - a.y(i, k, step), dy, 1e-9);
      }
    }
  }
}

}  // namespace
}  // namespace prf
