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

// Training, evaluation, profiling and feature dumps.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "prf/config.hpp"
#include "prf/metrics.hpp"
#include "prf/model.hpp"
#include "prf/objectives.hpp"
#include "prf/scenario.hpp"
#include "prf/windowing.hpp"

namespace prf {

enum class TrainMode {
  Prf,     // cascade trained with rolling starts
  Ori,     // full-length windows only
  It,      // one fixed length, no cascade
  Direct,  // one unit per omission index straight to full length
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double lr = 0.003;
  double weight_decay = 0.01;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Prf;
  int it_length = 0;  // required for TrainMode::It
  bool rsts = true;   // rolling starts (Prf only)
  bool detach_teacher = true;
  /// Units consume the previous unit's output instead of native features.
  bool cascaded_units = false;
  ModelConfig model;

  void validate() const;
};

/// "prf", "ori", "direct" or "it:<length>".
void parse_train_mode(const std::string& text, TrainConfig& cfg);
std::string train_mode_name(const TrainConfig& cfg);
InferencePath inference_path(TrainMode mode);

inline constexpr const char* kLossHeader = "step,reg,cls,rpm_mode,rpm_state,rdm_distill,total";

struct TrainStats {
  long steps = 0;
  std::vector<long> unit_windows;  // index u: windows consumed by unit u
  long decoder_samples = 0;
  std::vector<LossBreakdown> losses;  // one per optimizer step
};

struct TrainResult {
  std::unique_ptr<Model> model;
  TrainStats stats;
};

/// Deterministic given (dataset, config). When `loss_csv` is set, one row per
/// optimizer step is written to it. Throws NumericError on a non-finite loss.
TrainResult train(const std::vector<Scenario>& dataset, const TrainConfig& config, std::ostream* loss_csv = nullptr);

/// Loss terms of one scene under `config` (all rolling-start samples in
/// Prf mode), averaged over its samples. Adds window counts to `stats`.
LossTerms scene_loss(const Model& model, const Scenario& s, const TrainConfig& config, TrainStats* stats = nullptr);

/// Checkpoint extras: the training mode string.
std::string train_extra_json(const TrainConfig& config);
TrainMode mode_from_extra(const std::string& extra_json);

/// Window of length `length` ending at the scenario's split index, adapting
/// non-admissible lengths through `policy`.
ObservationWindow evaluation_window(const Scenario& s, int length, int dT, LengthPolicy policy);

/// Ground-truth future (N_a x T_f x 2) of the targets starting at `start`.
std::vector<double> future_positions(const Scenario& s, int start, int horizon);
/// dT x 2 per target, ordered backward from `window_start` - 1.
std::vector<double> omitted_positions(const Scenario& s, int window_start, int dT);

Prediction predict(const Model& model, const Scenario& s, const ObservationWindow& w, InferencePath path);

MetricsReport evaluate(const Model& model, const std::vector<Scenario>& dataset, const std::vector<int>& lengths,
                       LengthPolicy policy, InferencePath path);

struct ProfileRecord {
  int length = 0;  // T_v
  int stages = 0;  // v
  std::uint64_t cascade_macs = 0;
  std::uint64_t total_macs = 0;
  double wall_seconds = 0.0;  // median over runs
};

std::vector<ProfileRecord> profile(const Model& model, const Scenario& s, const std::vector<int>& lengths,
                                   InferencePath path, int runs = 20);
void write_profile_csv(const std::vector<ProfileRecord>& records, std::ostream& out);

struct AlignmentRow {
  int from_v = 0;
  int to_v = 0;
  double mean_error = 0.0;
  int rows = 0;
};

struct FeatureDump {
  std::vector<std::string> ids;  // scenario id per row
  std::vector<int> agents;       // target agent per row
  int width = 0;
  std::vector<double> distilled;  // rows x C
  std::vector<double> native;     // rows x C (full-length window)
  std::vector<AlignmentRow> alignment;
};

/// Distilled features of `length`-step windows against native full-length
/// ones, target agents only, plus per-stage alignment errors.
FeatureDump dump_features(const Model& model, const std::vector<Scenario>& dataset, int length, InferencePath path);
/// Writes <prefix>.distilled.tsv, <prefix>.native.tsv and <prefix>.alignment.tsv.
void write_feature_dump(const FeatureDump& d, const std::string& prefix);
FeatureDump read_feature_dump(const std::string& prefix);

/// SVG line chart of one report column against T_v for several reports.
std::string plot_svg(const std::vector<std::pair<std::string, MetricsReport>>& reports, const std::string& column);
MetricsReport read_report_csv(std::istream& in, int full_length);

}  // namespace prf
