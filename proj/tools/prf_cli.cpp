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

// prf: data generation, training, evaluation and diagnostics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "prf/error.hpp"
#include "prf/harness.hpp"
#include "prf/run_config.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Overrides {
  std::string config;
  std::string mode;
  std::string mixer;
  std::string length_policy;
  std::optional<std::uint64_t> seed;
  std::optional<int> dt;
  std::string lengths;
  bool no_rsts = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON run configuration");
  sub->add_option("--mode", o.mode, "prf | ori | direct | it:<length>");
  sub->add_option("--mixer", o.mixer, "selective | gru | attention");
  sub->add_option("--length-policy", o.length_policy, "truncate | pad | uniform");
  sub->add_option("--seed", o.seed, "seed for data or training");
  sub->add_option("--dt", o.dt, "retrospective interval");
  sub->add_option("--lengths", o.lengths, "comma separated observation lengths");
}

prf::RunConfig resolve(const Overrides& o, bool seed_is_data) {
  prf::RunConfig c = o.config.empty() ? prf::parse_run_config("{}") : prf::load_run_config(o.config);
  if (!o.mode.empty()) prf::parse_train_mode(o.mode, c.train);
  if (!o.mixer.empty()) c.train.model.mixer = prf::parse_mixer(o.mixer);
  if (!o.length_policy.empty()) c.length_policy = prf::parse_length_policy(o.length_policy);
  if (o.seed) (seed_is_data ? c.data.seed : c.train.seed) = *o.seed;
  if (o.dt) c.train.model.interval = *o.dt;
  if (!o.lengths.empty()) c.lengths = prf::parse_lengths(o.lengths);
  if (o.no_rsts) c.train.rsts = false;
  c.sync();
  c.validate();
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  return f;
}

void check_data(const std::vector<prf::Scenario>& data, const prf::ModelConfig& mc) {
  for (const auto& s : data) {
    if (s.split_index != mc.history || s.horizon() < mc.horizon) {
      throw prf::DataError("scenario " + s.id + ": T_o/T_f do not match the checkpoint");
    }
  }
}

prf::InferencePath path_of(const prf::LoadedCheckpoint& ck) {
  return prf::inference_path(prf::mode_from_extra(ck.extra_json));
}

int run(int argc, char** argv) {
  CLI::App app{"Variable-length trajectory prediction toolkit"};
  app.require_subcommand(1);

  Overrides o;
  std::string data_path, out_path, ckpt_path, loss_path, column = "mADE_6";
  std::vector<std::string> reports;
  int length = 0, runs = 20, full_length = 0;
  std::optional<int> num_scenarios, epochs;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scenario file");
  add_common(gen, o);
  gen->add_option("--out", out_path, "scenario file")->required();
  gen->add_option("--num", num_scenarios, "number of scenarios");

  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(tr, o);
  tr->add_option("--data", data_path, "scenario file")->required();
  tr->add_option("--out", out_path, "checkpoint file")->required();
  tr->add_option("--loss-csv", loss_path, "per-step loss CSV");
  tr->add_option("--epochs", epochs, "override train.epochs");
  tr->add_flag("--no-rsts", o.no_rsts, "train on the standard window only");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint at several lengths");
  add_common(ev, o);
  ev->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  ev->add_option("--data", data_path, "scenario file")->required();
  ev->add_option("--out", out_path, "report CSV (a .json summary is written next to it)")->required();

  auto* pr = app.add_subcommand("profile", "count multiply-accumulates and time inference");
  add_common(pr, o);
  pr->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  pr->add_option("--data", data_path, "scenario file (first scenario is profiled)")->required();
  pr->add_option("--out", out_path, "profile CSV (stdout when omitted)");
  pr->add_option("--runs", runs, "timed runs per length");

  auto* dump = app.add_subcommand("dump-features", "write distilled and native features");
  add_common(dump, o);
  dump->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  dump->add_option("--data", data_path, "scenario file")->required();
  dump->add_option("--length", length, "observation length")->required();
  dump->add_option("--out", out_path, "output prefix")->required();

  auto* plot = app.add_subcommand("plot", "plot report columns against length as SVG");
  plot->add_option("--report", reports, "label=report.csv, repeatable")->required();
  plot->add_option("--column", column, "metric column");
  plot->add_option("--full-length", full_length, "T_o of the reports");
  plot->add_option("--out", out_path, "SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  if (gen->parsed()) {
    prf::RunConfig c = resolve(o, true);
    if (num_scenarios) c.data.num_scenarios = *num_scenarios;
    c.data.validate();
    prf::write_scenarios(prf::generate_dataset(c.data), out_path);
  } else if (tr->parsed()) {
    prf::RunConfig c = resolve(o, false);
    if (epochs) c.train.epochs = *epochs;
    const auto data = prf::read_scenarios(data_path);
    std::ofstream loss;
    if (!loss_path.empty()) loss = open_out(loss_path);
    const auto res = prf::train(data, c.train, loss_path.empty() ? nullptr : &loss);
    prf::save_checkpoint(*res.model, prf::train_extra_json(c.train), out_path);
    std::cerr << "trained " << res.stats.steps << " steps\n";
  } else if (ev->parsed()) {
    const prf::RunConfig c = resolve(o, false);
    const auto ck = prf::load_checkpoint(ckpt_path);
    const auto data = prf::read_scenarios(data_path);
    check_data(data, ck.model->config());
    const auto lengths = c.lengths.empty()
                             ? prf::admissible_lengths(ck.model->config().history, ck.model->config().interval)
                             : c.lengths;
    const auto report = prf::evaluate(*ck.model, data, lengths, c.length_policy, path_of(ck));
    prf::write_report(report, out_path);
  } else if (pr->parsed()) {
    const prf::RunConfig c = resolve(o, false);
    const auto ck = prf::load_checkpoint(ckpt_path);
    const auto data = prf::read_scenarios(data_path);
    if (data.empty()) throw prf::DataError("no scenarios in " + data_path);
    check_data(data, ck.model->config());
    const auto lengths = c.lengths.empty()
                             ? prf::admissible_lengths(ck.model->config().history, ck.model->config().interval)
                             : c.lengths;
    const auto recs = prf::profile(*ck.model, data.front(), lengths, path_of(ck), runs);
    if (out_path.empty()) {
      prf::write_profile_csv(recs, std::cout);
    } else {
      auto f = open_out(out_path);
      prf::write_profile_csv(recs, f);
    }
  } else if (dump->parsed()) {
    const auto ck = prf::load_checkpoint(ckpt_path);
    const auto data = prf::read_scenarios(data_path);
    check_data(data, ck.model->config());
    prf::write_feature_dump(prf::dump_features(*ck.model, data, length, path_of(ck)), out_path);
  } else if (plot->parsed()) {
    std::vector<std::pair<std::string, prf::MetricsReport>> loaded;
    for (const auto& spec : reports) {
      const auto eq = spec.find('=');
      const std::string label = eq == std::string::npos ? spec : spec.substr(0, eq);
      const std::string file = eq == std::string::npos ? spec : spec.substr(eq + 1);
      std::ifstream f(file);
      if (!f) throw prf::DataError("cannot open " + file);
      loaded.emplace_back(label, prf::read_report_csv(f, full_length));
    }
    auto f = open_out(out_path);
    f << prf::plot_svg(loaded, column);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const prf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const prf::LengthError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const prf::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const prf::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
