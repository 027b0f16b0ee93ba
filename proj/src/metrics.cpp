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

#include "prf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "prf/error.hpp"

namespace prf {

ModeSet to_mode_set(const Prediction& p) {
  ModeSet m;
  m.num_agents = p.num_agents();
  m.modes = p.modes();
  m.horizon = p.horizon();
  m.traj = p.traj.to_vector();
  m.probs = p.probs.to_vector();
  return m;
}

AdeFde ade_fde(const ModeSet& pred, const std::vector<double>& gt) {
  const int Na = pred.num_agents;
  const int K = pred.modes;
  const int T = pred.horizon;
  if (T <= 0) throw ContractError("ade_fde: empty horizon");
  if (pred.traj.size() != static_cast<std::size_t>(Na) * K * T * 2 || gt.size() != static_cast<std::size_t>(Na) * T * 2) {
    throw ContractError("ade_fde: shape mismatch");
  }
  AdeFde e;
  e.num_agents = Na;
  e.modes = K;
  e.ade.assign(static_cast<std::size_t>(Na) * K, 0.0);
  e.fde.assign(e.ade.size(), 0.0);
  for (int i = 0; i < Na; ++i) {
    for (int k = 0; k < K; ++k) {
      const double* p = pred.traj.data() + (static_cast<std::size_t>(i) * K + k) * T * 2;
      const double* g = gt.data() + static_cast<std::size_t>(i) * T * 2;
      double acc = 0.0;
      double last = 0.0;
      for (int t = 0; t < T; ++t) {
        last = std::hypot(p[2 * t] - g[2 * t], p[2 * t + 1] - g[2 * t + 1]);
        acc += last;
      }
      e.ade[static_cast<std::size_t>(i) * K + k] = acc / T;
      e.fde[static_cast<std::size_t>(i) * K + k] = last;
    }
  }
  return e;
}

std::vector<Summary> per_agent(const AdeFde& e, const std::vector<double>& probs, int K, double delta) {
  if (K < 1 || K > e.modes) throw ContractError("K = " + std::to_string(K) + " exceeds available modes");
  if (probs.size() != e.ade.size()) throw ContractError("probs shape mismatch");
  std::vector<Summary> out(e.num_agents);
  std::vector<int> order(e.modes);
  for (int i = 0; i < e.num_agents; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * e.modes;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[base + a] > probs[base + b]; });
    double made = std::numeric_limits<double>::infinity();
    double mfde = made;
    int kstar = -1;
    for (int j = 0; j < K; ++j) {
      const int k = order[j];
      mfde = std::min(mfde, e.fde[base + k]);
      if (e.ade[base + k] < made || (e.ade[base + k] == made && k < kstar)) {
        made = e.ade[base + k];
        kstar = k;
      }
    }
    const double fk = e.fde[base + kstar];
    const double miss = 1.0 - probs[base + kstar];
    out[i] = {made, mfde, fk + miss * miss, fk > delta ? 1.0 : 0.0};
  }
  return out;
}

Summary summarize(const AdeFde& e, const std::vector<double>& probs, int K, double delta) {
  const auto rows = per_agent(e, probs, K, delta);
  Summary s;
  for (const auto& r : rows) {
    s.made += r.made;
    s.mfde += r.mfde;
    s.bmfde += r.bmfde;
    s.mr += r.mr;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    s = {s.made / n, s.mfde / n, s.bmfde / n, s.mr / n};
  }
  return s;
}

AvgDelta avg_delta(const std::vector<MetricsRow>& rows, int full_length) {
  const auto full = std::find_if(rows.begin(), rows.end(), [&](const MetricsRow& r) { return r.length == full_length; });
  if (full == rows.end()) throw ContractError("avg_delta: no row at full length " + std::to_string(full_length));
  AvgDelta d;
  int n = 0;
  for (const auto& r : rows) {
    if (r.length >= full_length) continue;
    d.made1 += r.made1 - full->made1;
    d.mfde1 += r.mfde1 - full->mfde1;
    d.made6 += r.made6 - full->made6;
    d.mfde6 += r.mfde6 - full->mfde6;
    d.bmfde6 += r.bmfde6 - full->bmfde6;
    d.mr6 += r.mr6 - full->mr6;
    ++n;
  }
  if (n == 0) throw ContractError("avg_delta: no incomplete length");
  return {d.made1 / n, d.mfde1 / n, d.made6 / n, d.mfde6 / n, d.bmfde6 / n, d.mr6 / n};
}

void MetricsAccumulator::add(const ModeSet& pred, const std::vector<double>& gt) {
  const AdeFde e = ade_fde(pred, gt);
  const int k6 = std::min(k_multi_, pred.modes);
  for (const auto& [sum, k] : {std::pair{&sum1_, 1}, std::pair{&sum6_, k6}}) {
    for (const auto& r : per_agent(e, pred.probs, k, delta_)) {
      sum->made += r.made;
      sum->mfde += r.mfde;
      sum->bmfde += r.bmfde;
      sum->mr += r.mr;
    }
  }
  count_ += pred.num_agents;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  if (other.length_ != length_) throw ContractError("cannot merge metrics of different lengths");
  for (const auto& [a, b] : {std::pair{&sum1_, &other.sum1_}, std::pair{&sum6_, &other.sum6_}}) {
    a->made += b->made;
    a->mfde += b->mfde;
    a->bmfde += b->bmfde;
    a->mr += b->mr;
  }
  count_ += other.count_;
}

MetricsRow MetricsAccumulator::row() const {
  MetricsRow r;
  r.length = length_;
  r.num_agents = count_;
  if (count_ == 0) return r;
  const double n = count_;
  r.made1 = sum1_.made / n;
  r.mfde1 = sum1_.mfde / n;
  r.made6 = sum6_.made / n;
  r.mfde6 = sum6_.mfde / n;
  r.bmfde6 = sum6_.bmfde / n;
  r.mr6 = sum6_.mr / n;
  return r;
}

const MetricsRow& MetricsReport::at(int length) const {
  for (const auto& r : rows) {
    if (r.length == length) return r;
  }
  throw ContractError("no metrics row for length " + std::to_string(length));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const MetricsReport& r, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& row : r.rows) {
    out << row.length << ',' << fmt(row.made1) << ',' << fmt(row.mfde1) << ',' << fmt(row.made6) << ','
        << fmt(row.mfde6) << ',' << fmt(row.bmfde6) << ',' << fmt(row.mr6) << ',' << row.num_agents << '\n';
  }
}

std::string report_summary_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["full_length"] = r.full_length;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"T_v", row.length},
                    {"mADE_1", row.made1},
                    {"mFDE_1", row.mfde1},
                    {"mADE_6", row.made6},
                    {"mFDE_6", row.mfde6},
                    {"b_mFDE_6", row.bmfde6},
                    {"MR_6", row.mr6},
                    {"num_agents", row.num_agents}});
  }
  const bool has_full = std::any_of(r.rows.begin(), r.rows.end(), [&](const auto& x) { return x.length == r.full_length; });
  const bool has_short = std::any_of(r.rows.begin(), r.rows.end(), [&](const auto& x) { return x.length < r.full_length; });
  if (has_full && has_short) {
    const AvgDelta d = r.delta();
    j["avg_delta"] = {{"mADE_1", d.made1}, {"mFDE_1", d.mfde1}, {"mADE_6", d.made6},
                      {"mFDE_6", d.mfde6}, {"b_mFDE_6", d.bmfde6}, {"MR_6", d.mr6}};
  }
  return j.dump(2);
}

void write_report(const MetricsReport& r, const std::filesystem::path& csv_path) {
  std::ofstream f(csv_path);
  if (!f) throw std::runtime_error("cannot open " + csv_path.string());
  write_report_csv(r, f);
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream j(json_path);
  if (!j) throw std::runtime_error("cannot open " + json_path.string());
  j << report_summary_json(r) << '\n';
}

}  // namespace prf
