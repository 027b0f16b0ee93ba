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

#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "prf/error.hpp"
#include "support.hpp"

namespace prf {
namespace {

using testing::naive_summary;
using testing::random_mode_set;
using testing::random_track;

// One agent on a straight line, one step per unit time.
std::vector<double> line(int T) {
  std::vector<double> g;
  for (int t = 0; t < T; ++t) {
    g.push_back(t + 1.0);
    g.push_back(0.0);
  }
  return g;
}

ModeSet shifted(const std::vector<double>& gt, const std::vector<double>& dy, const std::vector<double>& probs) {
  ModeSet m;
  m.num_agents = 1;
  m.modes = static_cast<int>(dy.size());
  m.horizon = static_cast<int>(gt.size()) / 2;
  for (double d : dy) {
    for (std::size_t i = 0; i < gt.size(); i += 2) {
      m.traj.push_back(gt[i]);
      m.traj.push_back(gt[i + 1] + d);
    }
  }
  m.probs = probs;
  return m;
}

TEST(AdeFde, PerfectIsZero) {
  const auto gt = line(5);
  const auto e = ade_fde(shifted(gt, {0.0}, {1.0}), gt);
  EXPECT_EQ(e.ade[0], 0.0);
  EXPECT_EQ(e.fde[0], 0.0);
  const auto s = summarize(e, {1.0}, 1);
  EXPECT_EQ(s.made, 0.0);
  EXPECT_EQ(s.mfde, 0.0);
  EXPECT_EQ(s.bmfde, 0.0);
  EXPECT_EQ(s.mr, 0.0);
}

TEST(AdeFde, ConstantOffset) {
  const auto gt = line(7);
  const auto e = ade_fde(shifted(gt, {1.0}, {1.0}), gt);
  EXPECT_DOUBLE_EQ(e.ade[0], 1.0);
  EXPECT_DOUBLE_EQ(e.fde[0], 1.0);
}

TEST(AdeFde, EmptyHorizonIsContractError) {
  ModeSet m;
  m.num_agents = 1;
  m.modes = 1;
  EXPECT_THROW(ade_fde(m, {}), ContractError);
}

TEST(AdeFde, RandomFixtureMatchesLoop) {
  Rng rng(21);
  const ModeSet m = random_mode_set(rng, 4, 6, 9);
  const auto gt = random_track(rng, 4, 9);
  const auto e = ade_fde(m, gt);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 6; ++k) {
      double s = 0.0, last = 0.0;
      for (int t = 0; t < 9; ++t) {
        const double dx = m.traj[((i * 6 + k) * 9 + t) * 2] - gt[(i * 9 + t) * 2];
        const double dy = m.traj[((i * 6 + k) * 9 + t) * 2 + 1] - gt[(i * 9 + t) * 2 + 1];
        last = std::sqrt(dx * dx + dy * dy);
        s += last;
      }
      EXPECT_NEAR(e.ade[i * 6 + k], s / 9, 1e-9);
      EXPECT_NEAR(e.fde[i * 6 + k], last, 1e-9);
    }
  }
}

TEST(Summarize, WorkedTwoModeCase) {
  AdeFde e;
  e.num_agents = 1;
  e.modes = 2;
  e.ade = {3.0, 1.0};
  e.fde = {3.0, 1.0};
  const auto s = summarize(e, {0.6, 0.4}, 2);
  EXPECT_DOUBLE_EQ(s.mfde, 1.0);
  EXPECT_DOUBLE_EQ(s.bmfde, 1.36);
  EXPECT_EQ(s.mr, 0.0);
}

TEST(Summarize, MissThreshold) {
  AdeFde e;
  e.num_agents = 2;
  e.modes = 1;
  e.ade = {1.0, 1.0};
  e.fde = {2.5, 2.0};
  EXPECT_DOUBLE_EQ(summarize(e, {1.0, 1.0}, 1).mr, 0.5);
}

TEST(Summarize, SingleModeIsArgmaxProbability) {
  AdeFde e;
  e.num_agents = 1;
  e.modes = 3;
  e.ade = {0.1, 5.0, 9.0};
  e.fde = {0.2, 6.0, 9.0};
  const auto s = summarize(e, {0.2, 0.5, 0.3}, 1);
  EXPECT_DOUBLE_EQ(s.made, 5.0);
  EXPECT_DOUBLE_EQ(s.mfde, 6.0);
  // Ties resolve to the lowest index.
  EXPECT_DOUBLE_EQ(summarize(e, {0.4, 0.4, 0.2}, 1).made, 0.1);
}

TEST(Summarize, KTooLargeIsContractError) {
  AdeFde e;
  e.num_agents = 1;
  e.modes = 2;
  e.ade = {1, 1};
  e.fde = {1, 1};
  EXPECT_THROW(summarize(e, {0.5, 0.5}, 3), ContractError);
  EXPECT_THROW(summarize(e, {0.5, 0.5}, 0), ContractError);
}

TEST(Summarize, MatchesNaiveOracleOn100Fixtures) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const int Na = rng.uniform_int(1, 5);
    const int K = rng.uniform_int(1, 6);
    const int T = rng.uniform_int(1, 20);
    const ModeSet m = random_mode_set(rng, Na, K, T);
    const auto gt = random_track(rng, Na, T);
    const auto e = ade_fde(m, gt);
    for (int k = 1; k <= K; ++k) {
      const auto s = summarize(e, m.probs, k);
      const auto n = naive_summary(m, gt, k);
      EXPECT_NEAR(s.made, n.made, 1e-9) << trial;
      EXPECT_NEAR(s.mfde, n.mfde, 1e-9) << trial;
      EXPECT_NEAR(s.bmfde, n.bmfde, 1e-9) << trial;
      EXPECT_NEAR(s.mr, n.mr, 1e-9) << trial;
    }
  }
}

TEST(Summarize, PropertiesOnRandomFixtures) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const ModeSet m = random_mode_set(rng, 4, 6, 8);
    const auto gt = random_track(rng, 4, 8);
    const auto e = ade_fde(m, gt);
    Summary prev = summarize(e, m.probs, 1);
    for (int k = 2; k <= 6; ++k) {
      const Summary s = summarize(e, m.probs, k);
      EXPECT_LE(s.made, prev.made);
      EXPECT_LE(s.mfde, prev.mfde);
      prev = s;
    }
    for (int k = 1; k <= 6; ++k) {
      for (const auto& r : per_agent(e, m.probs, k)) {
        EXPECT_TRUE(r.mr == 0.0 || r.mr == 1.0);
        EXPECT_GE(r.made, 0.0);
        EXPECT_GE(r.mfde, 0.0);
        EXPECT_GE(r.bmfde, r.mfde);
      }
    }
  }
}

TEST(Summarize, ScaleCovariance) {
  Rng rng(24);
  for (double scale : {0.5, 3.0}) {
    ModeSet m = random_mode_set(rng, 5, 6, 10);
    auto gt = random_track(rng, 5, 10);
    const auto base = summarize(ade_fde(m, gt), m.probs, 6);
    const auto base_mr = summarize(ade_fde(m, gt), m.probs, 6, 2.0 / scale);
    for (auto& x : m.traj) x *= scale;
    for (auto& x : gt) x *= scale;
    const auto s = summarize(ade_fde(m, gt), m.probs, 6);
    EXPECT_NEAR(s.made, scale * base.made, 1e-9);
    EXPECT_NEAR(s.mfde, scale * base.mfde, 1e-9);
    EXPECT_EQ(s.mr, base_mr.mr);
  }
}

MetricsRow row(int length, double v) {
  MetricsRow r;
  r.length = length;
  r.made1 = r.mfde1 = r.made6 = r.mfde6 = r.bmfde6 = r.mr6 = v;
  return r;
}

TEST(AvgDelta, HandArithmetic) {
  const auto d = avg_delta({row(10, 0.70), row(20, 0.68), row(30, 0.66), row(40, 0.65), row(50, 0.64)}, 50);
  EXPECT_NEAR(d.made1, 0.0325, 1e-12);
  EXPECT_NEAR(d.mr6, 0.0325, 1e-12);
}

TEST(AvgDelta, FlatAndSingle) {
  EXPECT_EQ(avg_delta({row(10, 0.5), row(20, 0.5), row(50, 0.5)}, 50).mfde6, 0.0);
  EXPECT_NEAR(avg_delta({row(10, 0.9), row(50, 0.5)}, 50).bmfde6, 0.4, 1e-12);
}

TEST(AvgDelta, MissingRowsAreContractErrors) {
  EXPECT_THROW(avg_delta({row(10, 0.9), row(20, 0.5)}, 50), ContractError);
  EXPECT_THROW(avg_delta({row(50, 0.5)}, 50), ContractError);
}

TEST(Accumulator, MergeEqualsSinglePass) {
  Rng rng(25);
  MetricsAccumulator all(20), a(20), b(20);
  for (int i = 0; i < 7; ++i) {
    const int Na = rng.uniform_int(1, 4);
    const ModeSet m = random_mode_set(rng, Na, 6, 5);
    const auto gt = random_track(rng, Na, 5);
    all.add(m, gt);
    (i % 2 ? a : b).add(m, gt);
  }
  a.merge(b);
  const auto x = all.row();
  const auto y = a.row();
  EXPECT_EQ(x.num_agents, y.num_agents);
  EXPECT_NEAR(x.made1, y.made1, 1e-12);
  EXPECT_NEAR(x.bmfde6, y.bmfde6, 1e-12);
  EXPECT_NEAR(x.mr6, y.mr6, 1e-12);
  MetricsAccumulator other(10);
  EXPECT_THROW(a.merge(other), ContractError);
}

TEST(Report, CsvAndJson) {
  MetricsReport r;
  r.full_length = 50;
  r.rows = {row(10, 0.75), row(50, 0.5)};
  r.rows[0].num_agents = r.rows[1].num_agents = 3;
  std::ostringstream csv;
  write_report_csv(r, csv);
  EXPECT_EQ(csv.str(), std::string(kReportHeader) + "\n10,0.75,0.75,0.75,0.75,0.75,0.75,3\n50,0.5,0.5,0.5,0.5,0.5,0.5,3\n");
  const auto j = nlohmann::json::parse(report_summary_json(r));
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_DOUBLE_EQ(j["avg_delta"]["MR_6"].get<double>(), 0.25);
  r.rows.erase(r.rows.begin());
  EXPECT_FALSE(nlohmann::json::parse(report_summary_json(r)).contains("avg_delta"));
  EXPECT_DOUBLE_EQ(r.at(50).made1, 0.5);
  EXPECT_THROW(r.at(10), ContractError);
}

}  // namespace
}  // namespace prf
