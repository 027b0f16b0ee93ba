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

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prf::testing {

ModelConfig tiny_config(MixerKind mixer) {
  ModelConfig c;
  c.width = 8;
  c.heads = 2;
  c.enc_layers = 1;
  c.modes = 3;
  c.history = 12;
  c.horizon = 6;
  c.interval = 4;
  c.rdm_layers = 1;
  c.rpm_layers = 1;
  c.mixer = mixer;
  c.seed = 5;
  return c;
}

Scenario tiny_scenario(std::uint64_t seed, int history, int horizon, int interval) {
  GenConfig g;
  g.seed = seed;
  g.num_scenarios = 1;
  g.min_agents = 3;
  g.max_agents = 3;
  g.num_targets = 2;
  g.history = history;
  g.horizon = horizon;
  g.points_per_polyline = 4;
  g.late_entry_prob = 0.0;
  g.tracking_loss_prob = 0.0;
  Scenario s = generate_dataset(g).front();
  s.target_ids = {0, 1};
  for (int t = interval; t < s.num_steps; ++t) {
    s.valid[2 * s.num_steps + t] = 0;
    for (int ch = 0; ch < kAgentChannels; ++ch) s.state(2, t, ch) = 0.0;
  }
  return s;
}

GradCheck check_gradients(nn::ParamStore& ps, const std::function<ag::Tensor()>& loss,
                          const std::vector<std::string>& prefixes, double h, double floor, std::size_t max_entries) {
  auto selected = [&](const std::string& name) {
    if (prefixes.empty()) return true;
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const auto& p) { return name.rfind(p, 0) == 0; });
  };
  ps.zero_grad();
  loss().backward();
  GradCheck out;
  for (const auto& [name, t0] : ps.items()) {
    if (!selected(name)) continue;
    ag::Tensor t = t0;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (std::all_of(analytic.begin(), analytic.end(), [](double g) { return g == 0.0; })) {
      out.no_grad.push_back(name);
    }
    const std::size_t n = t.numel();
    const std::size_t stride = max_entries && n > max_entries ? (n + max_entries - 1) / max_entries : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      ag::NoGradGuard guard;
      const double orig = t.data()[i];
      t.mutable_data()[i] = orig + h;
      const double up = loss().item();
      t.mutable_data()[i] = orig - h;
      const double down = loss().item();
      t.mutable_data()[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

NaiveSummary naive_summary(const ModeSet& pred, const std::vector<double>& gt, int K, double delta) {
  const int Na = pred.num_agents;
  const int M = pred.modes;
  const int T = pred.horizon;
  NaiveSummary total;
  for (int i = 0; i < Na; ++i) {
    // K most probable modes, earlier index first on ties.
    std::vector<bool> used(M, false);
    std::vector<int> chosen;
    for (int j = 0; j < K; ++j) {
      int best = -1;
      for (int k = 0; k < M; ++k) {
        if (used[k]) continue;
        if (best < 0 || pred.probs[i * M + k] > pred.probs[i * M + best]) best = k;
      }
      used[best] = true;
      chosen.push_back(best);
    }
    double made = std::numeric_limits<double>::infinity();
    double mfde = made;
    int kstar = -1;
    double fde_star = 0.0;
    for (int k : chosen) {
      double sum = 0.0;
      double last = 0.0;
      for (int t = 0; t < T; ++t) {
        const double dx = pred.traj[((i * M + k) * T + t) * 2] - gt[(i * T + t) * 2];
        const double dy = pred.traj[((i * M + k) * T + t) * 2 + 1] - gt[(i * T + t) * 2 + 1];
        last = std::sqrt(dx * dx + dy * dy);
        sum += last;
      }
      const double ade = sum / T;
      if (last < mfde) mfde = last;
      if (ade < made || (ade == made && k < kstar)) {
        made = ade;
        kstar = k;
        fde_star = last;
      }
    }
    const double p = pred.probs[i * M + kstar];
    total.made += made;
    total.mfde += mfde;
    total.bmfde += fde_star + (1.0 - p) * (1.0 - p);
    total.mr += fde_star > delta ? 1.0 : 0.0;
  }
  if (Na > 0) {
    total.made /= Na;
    total.mfde /= Na;
    total.bmfde /= Na;
    total.mr /= Na;
  }
  return total;
}

ModeSet random_mode_set(Rng& rng, int Na, int K, int T) {
  ModeSet m;
  m.num_agents = Na;
  m.modes = K;
  m.horizon = T;
  for (int i = 0; i < Na * K * T * 2; ++i) m.traj.push_back(rng.normal(0.0, 3.0));
  for (int i = 0; i < Na; ++i) {
    double z = 0.0;
    std::vector<double> w(K);
    for (auto& x : w) z += (x = rng.uniform(0.01, 1.0));
    for (double x : w) m.probs.push_back(x / z);
  }
  return m;
}

std::vector<double> random_track(Rng& rng, int Na, int T) {
  std::vector<double> gt;
  for (int i = 0; i < Na * T * 2; ++i) gt.push_back(rng.normal(0.0, 3.0));
  return gt;
}

}  // namespace prf::testing
