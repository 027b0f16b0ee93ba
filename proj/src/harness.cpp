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

#include "prf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "prf/error.hpp"

namespace prf {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void accumulate(Tensor& acc, const Tensor& t) {
  if (!t.defined()) return;
  acc = acc.defined() ? ag::add(acc, t) : t;
}

void accumulate(LossTerms& acc, const LossTerms& t) {
  accumulate(acc.reg, t.reg);
  accumulate(acc.cls, t.cls);
  accumulate(acc.rpm_mode, t.rpm_mode);
  accumulate(acc.rpm_state, t.rpm_state);
  accumulate(acc.rdm_distill, t.rdm_distill);
}

LossTerms scaled(const LossTerms& t, double s) {
  auto sc = [s](const Tensor& x) { return x.defined() ? ag::scale(x, s) : x; };
  return {sc(t.reg), sc(t.cls), sc(t.rpm_mode), sc(t.rpm_state), sc(t.rdm_distill)};
}

void count_unit(TrainStats* stats, int u) {
  if (!stats) return;
  if (static_cast<int>(stats->unit_windows.size()) <= u) stats->unit_windows.resize(u + 1, 0);
  ++stats->unit_windows[u];
}

/// Native features of window [start - T_v, start) for every v in [v_lo, v_hi].
std::map<int, FeatureBundle> encode_windows(const Model& model, const Scenario& s, const MapEncoding& map, int start,
                                            int v_lo, int v_hi) {
  const auto& cfg = model.config();
  std::map<int, FeatureBundle> out;
  for (int v = v_lo; v <= v_hi; ++v) {
    const int T_v = cfg.history - v * cfg.interval;
    out.emplace(v, model.backbone().encode_agents(slice_window(s, start - T_v, start, v), map));
  }
  return out;
}

LossTerms decoder_terms(const Model& model, const Scenario& s, const FeatureBundle& f, int start) {
  const Prediction p = model.backbone().decode_future(f, s.target_ids);
  auto [reg, cls] = trajectory_loss(p.traj, p.probs, future_positions(s, start, model.config().horizon));
  LossTerms t;
  t.reg = reg;
  t.cls = cls;
  return t;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 0) throw ConfigError("epochs", "must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size", "must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be nonnegative");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm", "must be positive");
  if (mode == TrainMode::It) {
    const auto lens = admissible_lengths(model.history, model.interval);
    if (std::find(lens.begin(), lens.end(), it_length) == lens.end()) {
      throw ConfigError("mode", "it length " + std::to_string(it_length) + " is not admissible");
    }
  }
}

void parse_train_mode(const std::string& text, TrainConfig& cfg) {
  if (text == "prf") {
    cfg.mode = TrainMode::Prf;
  } else if (text == "ori") {
    cfg.mode = TrainMode::Ori;
  } else if (text == "direct") {
    cfg.mode = TrainMode::Direct;
  } else if (text.rfind("it:", 0) == 0) {
    cfg.mode = TrainMode::It;
    try {
      std::size_t used = 0;
      cfg.it_length = std::stoi(text.substr(3), &used);
      if (used != text.size() - 3) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("mode", "bad it length in '" + text + "'");
    }
  } else {
    throw ConfigError("mode", "unknown mode '" + text + "'");
  }
}

std::string train_mode_name(const TrainConfig& cfg) {
  switch (cfg.mode) {
    case TrainMode::Prf: return "prf";
    case TrainMode::Ori: return "ori";
    case TrainMode::It: return "it:" + std::to_string(cfg.it_length);
    case TrainMode::Direct: return "direct";
  }
  return "?";
}

InferencePath inference_path(TrainMode mode) {
  switch (mode) {
    case TrainMode::Prf: return InferencePath::Cascade;
    case TrainMode::Direct: return InferencePath::Direct;
    default: return InferencePath::None;
  }
}

std::string train_extra_json(const TrainConfig& config) {
  nlohmann::ordered_json j{{"mode", train_mode_name(config)},
                           {"rsts", config.rsts},
                           {"epochs", config.epochs},
                           {"seed", config.seed}};
  return j.dump();
}

TrainMode mode_from_extra(const std::string& extra_json) {
  TrainConfig c;
  try {
    const auto j = nlohmann::json::parse(extra_json);
    parse_train_mode(j.value("mode", std::string("prf")), c);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint extras: ") + e.what());
  }
  return c.mode;
}

std::vector<double> future_positions(const Scenario& s, int start, int horizon) {
  if (start < 0 || start + horizon > s.num_steps) throw BoundsError("future slice outside the scenario");
  std::vector<double> gt;
  gt.reserve(s.target_ids.size() * horizon * 2);
  for (int a : s.target_ids) {
    for (int t = start; t < start + horizon; ++t) {
      gt.push_back(s.state(a, t, 0));
      gt.push_back(s.state(a, t, 1));
    }
  }
  return gt;
}

std::vector<double> omitted_positions(const Scenario& s, int window_start, int dT) {
  if (window_start - dT < 0 || window_start > s.num_steps) throw BoundsError("omitted segment outside the scenario");
  std::vector<double> gt;
  gt.reserve(s.target_ids.size() * dT * 2);
  for (int a : s.target_ids) {
    for (int j = 0; j < dT; ++j) {
      gt.push_back(s.state(a, window_start - 1 - j, 0));
      gt.push_back(s.state(a, window_start - 1 - j, 1));
    }
  }
  return gt;
}

LossTerms scene_loss(const Model& model, const Scenario& s, const TrainConfig& config, TrainStats* stats) {
  const auto& mc = model.config();
  const int T_o = mc.history;
  const int dT = mc.interval;
  const int tau = mc.tau();
  if (s.split_index != T_o || s.horizon() < mc.horizon) {
    throw DataError("scenario " + s.id + " does not match the model horizons");
  }
  const MapEncoding map = model.backbone().encode_map(s.map);
  const auto& targets = s.target_ids;

  switch (config.mode) {
    case TrainMode::Ori:
    case TrainMode::It: {
      const int v = config.mode == TrainMode::Ori ? 0 : omission_index(config.it_length, T_o, dT);
      const auto F = encode_windows(model, s, map, T_o, v, v);
      if (stats) ++stats->decoder_samples;
      return decoder_terms(model, s, F.at(v), T_o);
    }
    case TrainMode::Direct: {
      const auto F = encode_windows(model, s, map, T_o, 0, tau);
      std::vector<Tensor> distill;
      std::vector<RetroOutput> outs;
      std::vector<std::vector<double>> segs;
      for (int v = tau; v >= 1; --v) {
        const FeatureBundle out = model.direct_unit(v).forward(F.at(v), 0);
        distill.push_back(distillation_loss(out, F.at(0), config.detach_teacher));
        outs.push_back(recover(out, v, model.rpm(), targets));
        segs.push_back(omitted_positions(s, T_o - (T_o - v * dT), dT));
        count_unit(stats, v);
      }
      LossTerms t = decoder_terms(model, s, F.at(0), T_o);
      if (stats) ++stats->decoder_samples;
      t.rdm_distill = stage_average(distill);
      std::tie(t.rpm_mode, t.rpm_state) = rpm_loss(outs, segs);
      return t;
    }
    case TrainMode::Prf:
      break;
  }

  auto samples = rsts_enumerate(T_o, mc.horizon, dT, s.num_steps);
  if (!config.rsts) samples.resize(1);
  LossTerms acc;
  for (const auto& smp : samples) {
    const int v_min = smp.decoder.v;
    const auto F = encode_windows(model, s, map, smp.prediction_start, v_min, tau);
    std::vector<Tensor> distill;
    std::vector<RetroOutput> outs;
    std::vector<std::vector<double>> segs;
    Tensor prev;
    for (const auto& uw : smp.units) {
      const int u = uw.unit;
      FeatureBundle in = F.at(u);
      if (config.cascaded_units && prev.defined()) in = in.with_feats(prev, u);
      const FeatureBundle out = model.units()[u - 1](in);
      prev = out.agent_feats;
      distill.push_back(distillation_loss(out, F.at(u - 1), config.detach_teacher));
      outs.push_back(recover(out, u, model.rpm(), targets));
      segs.push_back(omitted_positions(s, uw.input.start, dT));
      count_unit(stats, u);
    }
    const FeatureBundle dec = retrospect(F.at(v_min), model.units(), nullptr, false, targets).first;
    LossTerms t = decoder_terms(model, s, dec, smp.prediction_start);
    if (stats) ++stats->decoder_samples;
    t.rdm_distill = stage_average(distill);
    if (!outs.empty()) std::tie(t.rpm_mode, t.rpm_state) = rpm_loss(outs, segs);
    accumulate(acc, t);
  }
  return scaled(acc, 1.0 / static_cast<double>(samples.size()));
}

TrainResult train(const std::vector<Scenario>& dataset, const TrainConfig& config, std::ostream* loss_csv) {
  config.validate();
  if (dataset.empty()) throw DataError("empty training set");
  ModelConfig mc = config.model;
  mc.seed = config.seed;
  TrainResult res;
  res.model = std::make_unique<Model>(mc, config.mode == TrainMode::Direct);
  Model& model = *res.model;
  for (const auto& s : dataset) {
    if (s.split_index != mc.history || s.horizon() < mc.horizon) {
      throw DataError("scenario " + s.id + ": T_o/T_f do not match the training config");
    }
  }
  res.stats.unit_windows.assign(mc.tau() + 1, 0);
  AdamW opt(model.params(), config.lr, config.weight_decay);
  Rng rng(Rng::mix(config.seed, 0x747261696eULL));
  std::vector<int> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  if (loss_csv) *loss_csv << kLossHeader << '\n';

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      const double w = 1.0 / static_cast<double>(b1 - b0);
      model.params().zero_grad();
      LossBreakdown sum;
      for (std::size_t j = b0; j < b1; ++j) {
        const Scenario& s = dataset[order[j]];
        const std::string where = "step " + std::to_string(res.stats.steps) + " (epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(b0 / config.batch_size) + ", scenario " + s.id + ")";
        LossTerms t;
        try {
          t = scaled(scene_loss(model, s, config, &res.stats), w);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at " + where);
        }
        const LossBreakdown v = t.values();
        if (!std::isfinite(v.total)) throw NumericError("non-finite loss at " + where);
        t.total().backward();
        sum = total_loss(sum.reg + v.reg, sum.cls + v.cls, sum.rpm_mode + v.rpm_mode, sum.rpm_state + v.rpm_state,
                         sum.rdm_distill + v.rdm_distill);
      }
      clip_grad_norm(model.params(), config.clip_norm);
      opt.step();
      if (loss_csv) {
        *loss_csv << res.stats.steps << ',' << fmt(sum.reg) << ',' << fmt(sum.cls) << ',' << fmt(sum.rpm_mode) << ','
                  << fmt(sum.rpm_state) << ',' << fmt(sum.rdm_distill) << ',' << fmt(sum.total) << '\n';
      }
      res.stats.losses.push_back(sum);
      ++res.stats.steps;
    }
  }
  return res;
}

ObservationWindow evaluation_window(const Scenario& s, int length, int dT, LengthPolicy policy) {
  const int T_o = s.split_index;
  check_interval(T_o, dT);
  if (length < 1 || length > T_o) {
    throw LengthError("length " + std::to_string(length) + " outside [1, " + std::to_string(T_o) + "]");
  }
  if (length % dT == 0) return make_incomplete(s, (T_o - length) / dT, dT, T_o);
  const ObservationWindow raw = slice_window(s, T_o - length, T_o, 0);
  ObservationWindow w = adapt_arbitrary_length(raw.states, raw.valid, s.num_agents, length, dT, T_o, policy);
  w.end_step = T_o;
  w.start_step = T_o - w.length;
  return w;
}

Prediction predict(const Model& model, const Scenario& s, const ObservationWindow& w, InferencePath path) {
  const MapEncoding map = model.backbone().encode_map(s.map);
  const FeatureBundle f = model.backbone().encode_agents(w, map);
  return model.backbone().decode_future(model.infer_features(f, path), s.target_ids);
}

MetricsReport evaluate(const Model& model, const std::vector<Scenario>& dataset, const std::vector<int>& lengths,
                       LengthPolicy policy, InferencePath path) {
  ag::NoGradGuard guard;
  const auto& mc = model.config();
  MetricsReport report;
  report.full_length = mc.history;
  std::vector<MetricsAccumulator> acc;
  for (int L : lengths) acc.emplace_back(L, 6);
  for (const auto& s : dataset) {
    if (s.split_index != mc.history || s.horizon() < mc.horizon) {
      throw DataError("scenario " + s.id + ": T_o/T_f do not match the checkpoint");
    }
    const MapEncoding map = model.backbone().encode_map(s.map);
    const auto gt = future_positions(s, mc.history, mc.horizon);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      const ObservationWindow w = evaluation_window(s, lengths[i], mc.interval, policy);
      const FeatureBundle f = model.backbone().encode_agents(w, map);
      const Prediction p = model.backbone().decode_future(model.infer_features(f, path), s.target_ids);
      acc[i].add(to_mode_set(p), gt);
    }
  }
  for (const auto& a : acc) report.rows.push_back(a.row());
  return report;
}

std::vector<ProfileRecord> profile(const Model& model, const Scenario& s, const std::vector<int>& lengths,
                                   InferencePath path, int runs) {
  ag::NoGradGuard guard;
  const auto& mc = model.config();
  std::vector<ProfileRecord> out;
  for (int L : lengths) {
    const ObservationWindow w = evaluation_window(s, L, mc.interval, LengthPolicy::Truncate);
    ProfileRecord rec;
    rec.length = w.length;
    rec.stages = w.v;
    {
      ag::OpCounter total;
      const MapEncoding map = model.backbone().encode_map(s.map);
      const FeatureBundle f = model.backbone().encode_agents(w, map);
      FeatureBundle g;
      {
        ag::OpCounter cascade;
        g = model.infer_features(f, path);
        rec.cascade_macs = cascade.macs();
      }
      model.backbone().decode_future(g, s.target_ids);
      rec.total_macs = total.macs();
    }
    std::vector<double> times;
    for (int r = 0; r < std::max(runs, 1); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      predict(model, s, w, path);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    rec.wall_seconds = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    out.push_back(rec);
  }
  return out;
}

void write_profile_csv(const std::vector<ProfileRecord>& records, std::ostream& out) {
  out << "T_v,stages,cascade_macs,total_macs,wall_seconds\n";
  for (const auto& r : records) {
    out << r.length << ',' << r.stages << ',' << r.cascade_macs << ',' << r.total_macs << ',' << fmt(r.wall_seconds)
        << '\n';
  }
}

namespace {

double row_distance(const Tensor& a, const Tensor& b, int agent) {
  const int C = a.c();
  double sq = 0.0;
  for (int j = 0; j < C; ++j) {
    const double d = a.at(0, agent, j) - b.at(0, agent, j);
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

FeatureDump dump_features(const Model& model, const std::vector<Scenario>& dataset, int length, InferencePath path) {
  ag::NoGradGuard guard;
  const auto& mc = model.config();
  const int v = omission_index(length, mc.history, mc.interval);
  FeatureDump d;
  d.width = mc.width;
  std::map<std::pair<int, int>, std::pair<double, int>> stage_err;
  auto add_err = [&](int from, int to, double e) {
    auto& slot = stage_err[{from, to}];
    slot.first += e;
    ++slot.second;
  };
  for (const auto& s : dataset) {
    const MapEncoding map = model.backbone().encode_map(s.map);
    const auto F = encode_windows(model, s, map, mc.history, 0, v);
    FeatureBundle cur = F.at(v);
    if (v > 0) {
      switch (path) {
        case InferencePath::Cascade:
          for (int u = v; u >= 1; --u) {
            cur = model.units()[u - 1](cur);
            for (int a : s.target_ids) add_err(u, u - 1, row_distance(cur.agent_feats, F.at(u - 1).agent_feats, a));
          }
          break;
        case InferencePath::Direct:
          cur = model.direct_unit(v).forward(cur, 0);
          for (int a : s.target_ids) add_err(v, 0, row_distance(cur.agent_feats, F.at(0).agent_feats, a));
          break;
        case InferencePath::None:
          cur = cur.with_feats(cur.agent_feats, 0);
          for (int a : s.target_ids) add_err(v, 0, row_distance(cur.agent_feats, F.at(0).agent_feats, a));
          break;
      }
    } else {
      for (std::size_t i = 0; i < s.target_ids.size(); ++i) add_err(0, 0, 0.0);
    }
    for (int a : s.target_ids) {
      d.ids.push_back(s.id);
      d.agents.push_back(a);
      for (int j = 0; j < mc.width; ++j) {
        d.distilled.push_back(cur.agent_feats.at(0, a, j));
        d.native.push_back(F.at(0).agent_feats.at(0, a, j));
      }
    }
  }
  for (auto it = stage_err.rbegin(); it != stage_err.rend(); ++it) {
    d.alignment.push_back({it->first.first, it->first.second, it->second.first / it->second.second, it->second.second});
  }
  return d;
}

void write_feature_dump(const FeatureDump& d, const std::string& prefix) {
  auto write_feats = [&](const std::string& path, const std::vector<double>& feats) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "scenario_id\tagent";
    for (int j = 0; j < d.width; ++j) f << "\tf" << j;
    f << '\n';
    for (std::size_t r = 0; r < d.ids.size(); ++r) {
      f << d.ids[r] << '\t' << d.agents[r];
      for (int j = 0; j < d.width; ++j) f << '\t' << fmt(feats[r * d.width + j]);
      f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path);
  };
  write_feats(prefix + ".distilled.tsv", d.distilled);
  write_feats(prefix + ".native.tsv", d.native);
  std::ofstream f(prefix + ".alignment.tsv");
  if (!f) throw std::runtime_error("cannot open " + prefix + ".alignment.tsv");
  f << "from_v\tto_v\tmean_error\trows\n";
  for (const auto& a : d.alignment) f << a.from_v << '\t' << a.to_v << '\t' << fmt(a.mean_error) << '\t' << a.rows << '\n';
}

FeatureDump read_feature_dump(const std::string& prefix) {
  FeatureDump d;
  auto read_feats = [&](const std::string& path, std::vector<double>& feats, bool keep_ids) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError(1, path + ": empty");
    d.width = static_cast<int>(std::count(line.begin(), line.end(), '\t')) - 1;
    int lineno = 1;
    while (std::getline(f, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string id;
      int agent = 0;
      if (!(ls >> id >> agent)) throw ParseError(lineno, path + ": malformed row");
      if (keep_ids) {
        d.ids.push_back(id);
        d.agents.push_back(agent);
      }
      for (int j = 0; j < d.width; ++j) {
        double x = 0.0;
        if (!(ls >> x)) throw ParseError(lineno, path + ": too few values");
        feats.push_back(x);
      }
    }
  };
  read_feats(prefix + ".distilled.tsv", d.distilled, true);
  read_feats(prefix + ".native.tsv", d.native, false);
  std::ifstream f(prefix + ".alignment.tsv");
  if (!f) throw DataError("cannot open " + prefix + ".alignment.tsv");
  std::string line;
  std::getline(f, line);
  AlignmentRow a;
  while (f >> a.from_v >> a.to_v >> a.mean_error >> a.rows) d.alignment.push_back(a);
  return d;
}

MetricsReport read_report_csv(std::istream& in, int full_length) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw ParseError(1, "unexpected report header");
  MetricsReport r;
  r.full_length = full_length;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    MetricsRow row;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%d", &row.length, &row.made1, &row.mfde1, &row.made6,
                    &row.mfde6, &row.bmfde6, &row.mr6, &row.num_agents) != 8) {
      throw ParseError(lineno, "malformed report row");
    }
    r.rows.push_back(row);
  }
  return r;
}

std::string plot_svg(const std::vector<std::pair<std::string, MetricsReport>>& reports, const std::string& column) {
  auto pick = [&](const MetricsRow& r) -> double {
    if (column == "mADE_1") return r.made1;
    if (column == "mFDE_1") return r.mfde1;
    if (column == "mADE_6") return r.made6;
    if (column == "mFDE_6") return r.mfde6;
    if (column == "b_mFDE_6") return r.bmfde6;
    if (column == "MR_6") return r.mr6;
    throw ConfigError("column", "unknown metric column '" + column + "'");
  };
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [name, rep] : reports) {
    for (const auto& r : rep.rows) {
      xmin = std::min(xmin, static_cast<double>(r.length));
      xmax = std::max(xmax, static_cast<double>(r.length));
      ymin = std::min(ymin, pick(r));
      ymax = std::max(ymax, pick(r));
    }
  }
  if (xmin > xmax) throw DataError("nothing to plot");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  ymin = std::min(ymin, 0.0);
  const double W = 640, H = 400, L = 60, R = 150, Tm = 30, B = 50;
  auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - Tm - B); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">observation length</text>\n";
  o << "<text x=\"15\" y=\"" << Tm - 10 << "\">" << column << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", y);
    o << "<text x=\"" << L - 5 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
      << "</text>\n";
  }
  std::vector<int> xs;
  for (const auto& [name, rep] : reports) {
    for (const auto& r : rep.rows) xs.push_back(r.length);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (int x : xs) {
    o << "<text x=\"" << sx(x) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << x
      << "</text>\n";
  }
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const char* color = kColors[k % 6];
    auto rows = reports[k].second.rows;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.length < b.length; });
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) o << sx(r.length) << ',' << sy(pick(r)) << ' ';
    o << "\"/>\n";
    for (const auto& r : rows) {
      o << "<circle cx=\"" << sx(r.length) << "\" cy=\"" << sy(pick(r)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    o << "<text x=\"" << W - R + 10 << "\" y=\"" << Tm + 20 * (k + 1) << "\" fill=\"" << color << "\">"
      << reports[k].first << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace prf
