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

// Displacement metrics over multimodal predictions.
//
// For a budget of K modes the K most probable modes are scored (stable order,
// lowest index first on ties), so K = 1 evaluates the argmax-probability mode.
// mADE_K and mFDE_K are independent minima; b-mFDE_K and MR_K use k*, the
// smallest-ADE mode among the scored ones.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "prf/backbone.hpp"

namespace prf {

inline constexpr double kMissThreshold = 2.0;  // meters

/// Plain multimodal prediction: traj is N_a x K x T x 2, probs N_a x K.
struct ModeSet {
  int num_agents = 0;
  int modes = 0;
  int horizon = 0;
  std::vector<double> traj;
  std::vector<double> probs;
};

ModeSet to_mode_set(const Prediction& p);

struct AdeFde {
  int num_agents = 0;
  int modes = 0;
  std::vector<double> ade;  // N_a x K
  std::vector<double> fde;  // N_a x K
};

AdeFde ade_fde(const ModeSet& pred, const std::vector<double>& gt);

struct Summary {
  double made = 0.0;
  double mfde = 0.0;
  double bmfde = 0.0;
  double mr = 0.0;
};

/// Per-agent values of the four metrics, averaged by `summarize`.
std::vector<Summary> per_agent(const AdeFde& e, const std::vector<double>& probs, int K,
                               double delta = kMissThreshold);
Summary summarize(const AdeFde& e, const std::vector<double>& probs, int K, double delta = kMissThreshold);

struct MetricsRow {
  int length = 0;  // T_v
  double made1 = 0.0;
  double mfde1 = 0.0;
  double made6 = 0.0;
  double mfde6 = 0.0;
  double bmfde6 = 0.0;
  double mr6 = 0.0;
  int num_agents = 0;
};

/// Mean over incomplete lengths of metric(T_v) - metric(T_o), per column.
struct AvgDelta {
  double made1 = 0.0;
  double mfde1 = 0.0;
  double made6 = 0.0;
  double mfde6 = 0.0;
  double bmfde6 = 0.0;
  double mr6 = 0.0;
};

AvgDelta avg_delta(const std::vector<MetricsRow>& rows, int full_length);

/// Accumulates per-agent metrics for one observation length.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(int length, int k_multi = 6, double delta = kMissThreshold)
      : length_(length), k_multi_(k_multi), delta_(delta) {}

  void add(const ModeSet& pred, const std::vector<double>& gt);
  /// Weighted merge with another shard of the same length.
  void merge(const MetricsAccumulator& other);
  MetricsRow row() const;

 private:
  int length_;
  int k_multi_;
  double delta_;
  int count_ = 0;
  Summary sum1_;
  Summary sum6_;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  int full_length = 0;

  const MetricsRow& at(int length) const;
  /// Requires a row at `full_length` and at least one shorter one.
  AvgDelta delta() const { return avg_delta(rows, full_length); }
};

inline constexpr const char* kReportHeader = "T_v,mADE_1,mFDE_1,mADE_6,mFDE_6,b_mFDE_6,MR_6,num_agents";

void write_report_csv(const MetricsReport& r, std::ostream& out);
/// JSON object with the rows and, when computable, avg_delta.
std::string report_summary_json(const MetricsReport& r);
void write_report(const MetricsReport& r, const std::filesystem::path& csv_path);

}  // namespace prf
