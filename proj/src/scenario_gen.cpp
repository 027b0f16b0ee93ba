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
#include <cmath>
#include <numbers>
#include <set>

#include "prf/error.hpp"
#include "prf/rng.hpp"
#include "prf/scenario.hpp"

namespace prf {

namespace {

using Point = std::array<double, 2>;
using Path = std::vector<Point>;

constexpr double kPi = std::numbers::pi;
constexpr double kLaneHalfWidth = 1.75;

struct Lane {
  Path points;
  LaneType type;
};

Path straight_path(Point a, Point b, double step = 0.5) {
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  Path out;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
  }
  return out;
}

/// Circular arc around `center` from angle a0 to a1 (signed sweep).
Path arc_path(Point center, double radius, double a0, double a1, double step = 0.5) {
  const double len = std::abs(a1 - a0) * radius;
  const int n = std::max(2, static_cast<int>(std::ceil(len / step)));
  Path out;
  for (int i = 0; i <= n; ++i) {
    const double a = a0 + (a1 - a0) * static_cast<double>(i) / n;
    out.push_back({center[0] + radius * std::cos(a), center[1] + radius * std::sin(a)});
  }
  return out;
}

Path rotate(const Path& p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Path out;
  out.reserve(p.size());
  for (const auto& q : p) out.push_back({c * q[0] - s * q[1], s * q[0] + c * q[1]});
  return out;
}

/// Points at arc-length multiples of `spacing` along a dense path.
Path resample(const Path& dense, double spacing) {
  Path out{dense.front()};
  double carried = 0.0;  // arc length since the last emitted point
  for (std::size_t i = 1; i < dense.size(); ++i) {
    Point a = dense[i - 1];
    const Point& b = dense[i];
    double seg = std::hypot(b[0] - a[0], b[1] - a[1]);
    while (carried + seg >= spacing) {
      const double t = (spacing - carried) / seg;
      a = {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
      out.push_back(a);
      seg = std::hypot(b[0] - a[0], b[1] - a[1]);
      carried = 0.0;
    }
    carried += seg;
  }
  return out;
}

// Two-lane approach geometry for a four-way junction centered at the origin,
// seen from traffic entering westward-to-eastward on y = -kLaneHalfWidth.
constexpr double kJunctionStop = 10.0;

Path right_turn() {
  const double r = kJunctionStop - kLaneHalfWidth;
  return arc_path({-kJunctionStop, -kJunctionStop}, r, kPi / 2.0, 0.0);
}

Path left_turn() {
  const double r = kJunctionStop + kLaneHalfWidth;
  return arc_path({-kJunctionStop, kJunctionStop}, r, -kPi / 2.0, 0.0);
}

std::vector<Lane> layout_straight(Rng& rng) {
  std::vector<Lane> lanes;
  const int n = rng.uniform_int(2, 3);
  for (int i = 0; i < n; ++i) {
    const double y = 3.5 * i;
    if (i % 2 == 0) {
      lanes.push_back({straight_path({-100.0, y}, {100.0, y}), LaneType::Through});
    } else {
      lanes.push_back({straight_path({100.0, y}, {-100.0, y}), LaneType::Through});
    }
  }
  return lanes;
}

std::vector<Lane> layout_curve(Rng& rng) {
  const double radius = rng.uniform(40.0, 120.0);
  const double sweep = 200.0 / radius;
  std::vector<Lane> lanes;
  lanes.push_back({arc_path({0.0, 0.0}, radius, -sweep / 2.0, sweep / 2.0), LaneType::Curved});
  lanes.push_back({arc_path({0.0, 0.0}, radius + 3.5, sweep / 2.0, -sweep / 2.0), LaneType::Curved});
  return lanes;
}

std::vector<Lane> junction_arms(const std::vector<double>& arm_angles) {
  // Each arm at angle a carries an inbound lane (toward the center) and an
  // outbound lane, drawn here for the west arm and rotated into place.
  std::vector<Lane> lanes;
  for (double a : arm_angles) {
    const Path in = straight_path({-100.0, -kLaneHalfWidth}, {-kJunctionStop, -kLaneHalfWidth});
    const Path out = straight_path({-kJunctionStop, kLaneHalfWidth}, {-100.0, kLaneHalfWidth});
    lanes.push_back({rotate(in, a), LaneType::Through});
    lanes.push_back({rotate(out, a), LaneType::Through});
  }
  return lanes;
}

std::vector<Lane> layout_intersection() {
  std::vector<Lane> lanes = junction_arms({0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0});
  // Through lanes across the box.
  for (double a : {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0}) {
    lanes.push_back({rotate(straight_path({-kJunctionStop, -kLaneHalfWidth},
                                          {kJunctionStop, -kLaneHalfWidth}),
                            a),
                     LaneType::Connector});
    lanes.push_back({rotate(right_turn(), a), LaneType::Connector});
    lanes.push_back({rotate(left_turn(), a), LaneType::Connector});
  }
  return lanes;
}

std::vector<Lane> layout_t_junction() {
  // Arms west (0), east (pi) and south (pi/2 rotation of the west arm lands
  // it on the south side).
  std::vector<Lane> lanes = junction_arms({0.0, kPi, kPi / 2.0});
  lanes.push_back({straight_path({-kJunctionStop, -kLaneHalfWidth}, {kJunctionStop, -kLaneHalfWidth}),
                   LaneType::Connector});
  lanes.push_back({rotate(straight_path({-kJunctionStop, -kLaneHalfWidth},
                                        {kJunctionStop, -kLaneHalfWidth}),
                          kPi),
                   LaneType::Connector});
  lanes.push_back({right_turn(), LaneType::Connector});
  lanes.push_back({rotate(left_turn(), kPi), LaneType::Connector});
  lanes.push_back({rotate(right_turn(), kPi / 2.0), LaneType::Connector});
  lanes.push_back({rotate(left_turn(), kPi / 2.0), LaneType::Connector});
  return lanes;
}

void check_weight(const std::string& field, double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError(field, "weight must be finite and nonnegative");
}

void check_mix(const std::string& field, std::initializer_list<double> ws) {
  double total = 0.0;
  for (double w : ws) total += w;
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(field, "weights must sum to 1");
}

template <std::size_t N>
int pick(Rng& rng, const std::array<double, N>& weights) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = N; i-- > 0;) {
    if (weights[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

/// Chains of polylines whose last endpoint coincides with the next one's
/// first endpoint, i.e. the lanes they were cut from.
std::vector<Path> lane_chains(const VectorMap& map) {
  std::vector<Path> chains;
  for (int p = 0; p < map.num_polylines; ++p) {
    const bool continues = p > 0 && !chains.empty() &&
                           map.at(p, 0, 0) == chains.back().back()[0] &&
                           map.at(p, 0, 1) == chains.back().back()[1];
    if (!continues) chains.emplace_back();
    for (int s = continues ? 1 : 0; s < map.num_points; ++s) {
      chains.back().push_back({map.at(p, s, 0), map.at(p, s, 1)});
    }
  }
  return chains;
}

/// Position and heading at arc length `s` along `path`, extending the last
/// segment beyond the end.
std::pair<Point, double> along(const Path& path, double s) {
  s = std::max(s, 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Point& a = path[i - 1];
    const Point& b = path[i];
    const double seg = std::hypot(b[0] - a[0], b[1] - a[1]);
    const double heading = std::atan2(b[1] - a[1], b[0] - a[0]);
    if (s <= seg || i + 1 == path.size()) {
      const double t = seg > 0.0 ? s / seg : 0.0;
      return {{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}, heading};
    }
    s -= seg;
  }
  return {path.front(), 0.0};
}

/// Arc length travelled after time t with initial speed v and acceleration a
/// (the agent stops instead of reversing), plus the speed at t.
std::pair<double, double> travel(double v, double a, double t) {
  if (a < 0.0) {
    const double stop = v / -a;
    if (t >= stop) return {v * stop + 0.5 * a * stop * stop, 0.0};
  }
  return {v * t + 0.5 * a * t * t, v + a * t};
}

}  // namespace

std::array<double, 2> VectorMap::centroid(int p) const {
  double x = 0.0;
  double y = 0.0;
  for (int s = 0; s < num_points; ++s) {
    x += at(p, s, 0);
    y += at(p, s, 1);
  }
  return {x / num_points, y / num_points};
}

double VectorMap::max_step() const {
  double worst = 0.0;
  for (int p = 0; p < num_polylines; ++p) {
    for (int s = 1; s < num_points; ++s) {
      worst = std::max(worst, std::hypot(at(p, s, 0) - at(p, s - 1, 0), at(p, s, 1) - at(p, s - 1, 1)));
    }
  }
  return worst;
}

void VectorMap::validate(double max_step_length) const {
  if (num_polylines < 1) throw DataError("map: needs at least one polyline");
  if (num_points < 2) throw DataError("map: polylines need at least two endpoints");
  if (channels < 3) throw DataError("map: needs x, y and heading channels");
  if (data.size() != static_cast<std::size_t>(num_polylines) * num_points * channels) {
    throw DataError("map: data size does not match P x S x C_m");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw DataError("map: non-finite value");
  }
  if (max_step() > max_step_length + 1e-9) throw DataError("map: endpoint step exceeds max step length");
}

void Scenario::validate(double max_step_length) const {
  map.validate(max_step_length);
  if (split_index <= 0) throw DataError("scenario " + id + ": T_o must be positive");
  if (horizon() <= 0) throw DataError("scenario " + id + ": T_f must be positive");
  if (num_agents <= 0) throw DataError("scenario " + id + ": no agents");
  const std::size_t cells = static_cast<std::size_t>(num_agents) * num_steps;
  if (states.size() != cells * kAgentChannels) throw DataError("scenario " + id + ": state array size");
  if (valid.size() != cells) throw DataError("scenario " + id + ": mask size");
  if (target_ids.empty() || static_cast<int>(target_ids.size()) > num_agents) {
    throw DataError("scenario " + id + ": N_a must satisfy 0 < N_a <= N");
  }
  std::set<int> seen;
  for (int t : target_ids) {
    if (t < 0 || t >= num_agents || !seen.insert(t).second) {
      throw DataError("scenario " + id + ": bad target id " + std::to_string(t));
    }
    for (int step = split_index; step < num_steps; ++step) {
      if (!is_valid(t, step)) throw DataError("scenario " + id + ": target invalid in the future");
    }
  }
  for (int a = 0; a < num_agents; ++a) {
    for (int t = 0; t < num_steps; ++t) {
      if (!is_valid(a, t)) continue;
      for (int ch = 0; ch < kAgentChannels; ++ch) {
        if (!std::isfinite(state(a, t, ch))) throw DataError("scenario " + id + ": non-finite valid state");
      }
    }
  }
}

void GenConfig::validate() const {
  if (num_scenarios < 0) throw ConfigError("num_scenarios", "must be nonnegative");
  if (min_agents < 1) throw ConfigError("min_agents", "must be at least 1");
  if (max_agents < min_agents) throw ConfigError("max_agents", "must be >= min_agents");
  if (num_targets < 1 || num_targets > min_agents) {
    throw ConfigError("num_targets", "must be in [1, min_agents]");
  }
  if (history <= 0) throw ConfigError("history", "must be positive");
  if (horizon <= 0) throw ConfigError("horizon", "must be positive");
  if (history + horizon > max_total_steps) {
    throw ConfigError("history", "T_o + T_f exceeds the maximum horizon of " + std::to_string(max_total_steps));
  }
  if (points_per_polyline < 2) throw ConfigError("points_per_polyline", "must be at least 2");
  if (!(point_spacing > 0.0) || point_spacing > max_step_length) {
    throw ConfigError("point_spacing", "must be in (0, max_step_length]");
  }
  check_weight("grammar.straight", grammar.straight);
  check_weight("grammar.curve", grammar.curve);
  check_weight("grammar.intersection", grammar.intersection);
  check_weight("grammar.t_junction", grammar.t_junction);
  check_mix("grammar", {grammar.straight, grammar.curve, grammar.intersection, grammar.t_junction});
  check_weight("motion.constant_velocity", motion.constant_velocity);
  check_weight("motion.constant_turn_rate", motion.constant_turn_rate);
  check_weight("motion.lane_follower", motion.lane_follower);
  check_mix("motion", {motion.constant_velocity, motion.constant_turn_rate, motion.lane_follower});
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std", "must be >= 0");
  if (!(velocity_noise_std >= 0.0)) throw ConfigError("velocity_noise_std", "must be >= 0");
  if (!(late_entry_prob >= 0.0 && late_entry_prob <= 1.0)) throw ConfigError("late_entry_prob", "must be in [0, 1]");
  if (!(tracking_loss_prob >= 0.0 && tracking_loss_prob <= 1.0)) {
    throw ConfigError("tracking_loss_prob", "must be in [0, 1]");
  }
  if (!(min_speed >= 0.0) || max_speed < min_speed) throw ConfigError("max_speed", "must be >= min_speed >= 0");
}

std::vector<AgentState> simulate_agent(const MotionSpec& spec, int steps, double dt, double noise_std,
                                       double velocity_noise_std, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AgentState> out(steps);
  for (int i = 0; i < steps; ++i) {
    const double t = i * dt;
    AgentState s;
    switch (spec.kind) {
      case MotionKind::ConstantVelocity: {
        const auto [dist, speed] = travel(spec.speed, spec.acceleration, t);
        const double c = std::cos(spec.heading);
        const double sn = std::sin(spec.heading);
        s = {spec.x0 + c * dist, spec.y0 + sn * dist, spec.heading, c * speed, sn * speed};
        break;
      }
      case MotionKind::ConstantTurnRate: {
        // Integrated with midpoint sub-steps; exact enough for synthetic data.
        constexpr int kSub = 8;
        double x = spec.x0;
        double y = spec.y0;
        const double h = t / (kSub * std::max(i, 1));
        for (int k = 0; k < kSub * i; ++k) {
          const double tm = (k + 0.5) * h;
          const double vm = std::max(0.0, travel(spec.speed, spec.acceleration, tm).second);
          const double hm = spec.heading + spec.turn_rate * tm;
          x += vm * std::cos(hm) * h;
          y += vm * std::sin(hm) * h;
        }
        const double heading = spec.heading + spec.turn_rate * t;
        const double speed = travel(spec.speed, spec.acceleration, t).second;
        s = {x, y, heading, speed * std::cos(heading), speed * std::sin(heading)};
        break;
      }
      case MotionKind::LaneFollower: {
        const auto [dist, speed] = travel(spec.speed, spec.acceleration, t);
        const auto [pos, heading] = along(spec.lane, spec.lane_offset + dist);
        s = {pos[0], pos[1], heading, speed * std::cos(heading), speed * std::sin(heading)};
        break;
      }
    }
    if (noise_std > 0.0) {
      s.x += rng.normal(0.0, noise_std);
      s.y += rng.normal(0.0, noise_std);
    }
    if (velocity_noise_std > 0.0) {
      s.vx += rng.normal(0.0, velocity_noise_std);
      s.vy += rng.normal(0.0, velocity_noise_std);
    }
    out[i] = s;
  }
  return out;
}

VectorMap generate_map(const GenConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::vector<Lane> lanes;
  switch (pick<4>(rng, {config.grammar.straight, config.grammar.curve, config.grammar.intersection,
                        config.grammar.t_junction})) {
    case 0: lanes = layout_straight(rng); break;
    case 1: lanes = layout_curve(rng); break;
    case 2: lanes = layout_intersection(); break;
    default: lanes = layout_t_junction(); break;
  }
  const double angle = rng.uniform(-kPi, kPi);
  const Point shift{rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)};

  const int S = config.points_per_polyline;
  VectorMap map;
  map.num_points = S;
  map.channels = kMapChannels;
  for (const auto& lane : lanes) {
    Path pts = resample(rotate(lane.points, angle), config.point_spacing);
    for (auto& p : pts) {
      p[0] += shift[0];
      p[1] += shift[1];
    }
    for (std::size_t first = 0; first + S <= pts.size(); first += S - 1) {
      for (int s = 0; s < S; ++s) {
        const Point& p = pts[first + s];
        const std::size_t nxt = s + 1 < S ? first + s + 1 : first + s;
        const std::size_t prv = s + 1 < S ? first + s : first + s - 1;
        const double heading = std::atan2(pts[nxt][1] - pts[prv][1], pts[nxt][0] - pts[prv][0]);
        map.data.push_back(p[0]);
        map.data.push_back(p[1]);
        map.data.push_back(heading);
        for (int k = 0; k < kLaneTypes; ++k) {
          map.data.push_back(k == static_cast<int>(lane.type) ? 1.0 : 0.0);
        }
      }
      ++map.num_polylines;
    }
  }
  map.validate(config.max_step_length);
  return map;
}

Scenario generate_scenario(const VectorMap& map, const GenConfig& config, std::uint64_t seed) {
  config.validate();
  map.validate(config.max_step_length);
  Rng rng(seed);
  const int T = config.history + config.horizon;
  const int T_o = config.history;

  Scenario sc;
  sc.map = map;
  sc.num_agents = rng.uniform_int(config.min_agents, config.max_agents);
  sc.num_steps = T;
  sc.split_index = T_o;
  sc.states.assign(static_cast<std::size_t>(sc.num_agents) * T * kAgentChannels, 0.0);
  sc.valid.assign(static_cast<std::size_t>(sc.num_agents) * T, 1);

  // Distinct target indices.
  std::vector<int> order(sc.num_agents);
  for (int i = 0; i < sc.num_agents; ++i) order[i] = i;
  for (int i = sc.num_agents - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  sc.target_ids.assign(order.begin(), order.begin() + config.num_targets);
  std::sort(sc.target_ids.begin(), sc.target_ids.end());

  const auto chains = lane_chains(map);
  for (int a = 0; a < sc.num_agents; ++a) {
    MotionSpec spec;
    const Path& lane = chains[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(chains.size()) - 1))];
    double lane_len = 0.0;
    for (std::size_t i = 1; i < lane.size(); ++i) {
      lane_len += std::hypot(lane[i][0] - lane[i - 1][0], lane[i][1] - lane[i - 1][1]);
    }
    const double offset = rng.uniform(0.0, std::max(0.0, lane_len * 0.4));
    const auto [start, heading] = along(lane, offset);
    spec.kind = static_cast<MotionKind>(pick<3>(rng, {config.motion.constant_velocity,
                                                      config.motion.constant_turn_rate,
                                                      config.motion.lane_follower}));
    spec.x0 = start[0];
    spec.y0 = start[1];
    spec.speed = rng.uniform(config.min_speed, config.max_speed);
    spec.acceleration = rng.uniform(-1.0, 1.0);
    switch (spec.kind) {
      case MotionKind::ConstantVelocity:
        spec.heading = heading + rng.normal(0.0, 0.1);
        break;
      case MotionKind::ConstantTurnRate:
        spec.heading = heading + rng.normal(0.0, 0.1);
        spec.turn_rate = rng.uniform(-0.3, 0.3);
        break;
      case MotionKind::LaneFollower:
        spec.heading = heading;
        spec.lane = lane;
        spec.lane_offset = offset;
        break;
    }
    const auto traj = simulate_agent(spec, T, kTimeStep, config.noise_std, config.velocity_noise_std,
                                     rng.next_u64());
    for (int t = 0; t < T; ++t) {
      sc.state(a, t, 0) = traj[t].x;
      sc.state(a, t, 1) = traj[t].y;
      sc.state(a, t, 2) = traj[t].heading;
      sc.state(a, t, 3) = traj[t].vx;
      sc.state(a, t, 4) = traj[t].vy;
    }

    const bool is_target = std::find(sc.target_ids.begin(), sc.target_ids.end(), a) != sc.target_ids.end();
    const bool late = rng.bernoulli(config.late_entry_prob);
    const bool lost = rng.bernoulli(config.tracking_loss_prob);
    const int late_steps = T_o > 1 ? rng.uniform_int(1, T_o - 1) : 0;
    const int loss_start = T_o > 2 ? rng.uniform_int(1, T_o - 2) : 0;
    const int loss_len = T_o > 2 ? rng.uniform_int(1, std::max(1, std::min(15, T_o - 1 - loss_start))) : 0;
    if (is_target) continue;
    auto* mask = sc.valid.data() + static_cast<std::size_t>(a) * T;
    if (late && late_steps > 0) std::fill(mask, mask + late_steps, 0);
    if (lost && loss_len > 0) std::fill(mask + loss_start, mask + loss_start + loss_len, 0);
    for (int t = 0; t < T; ++t) {
      if (!mask[t]) {
        for (int ch = 0; ch < kAgentChannels; ++ch) sc.state(a, t, ch) = 0.0;
      }
    }
  }
  sc.validate(config.max_step_length);
  return sc;
}

std::vector<Scenario> generate_dataset(const GenConfig& config) {
  config.validate();
  std::vector<Scenario> out;
  out.reserve(config.num_scenarios);
  for (int i = 0; i < config.num_scenarios; ++i) {
    const auto map_seed = Rng::mix(config.seed, 2 * static_cast<std::uint64_t>(i));
    const auto agent_seed = Rng::mix(config.seed, 2 * static_cast<std::uint64_t>(i) + 1);
    Scenario sc = generate_scenario(generate_map(config, map_seed), config, agent_seed);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06d", i);
    sc.id = buf;
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace prf
