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

// Synthetic driving scenes: vectorized lane maps plus kinematic agents with
// late-entry and tracking-loss observation patterns.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace prf {

inline constexpr double kTimeStep = 0.1;  // seconds, 10 Hz
inline constexpr int kAgentChannels = 5;  // x, y, heading, vx, vy
inline constexpr int kLaneTypes = 3;      // through, curved, junction connector
inline constexpr int kMapChannels = 3 + kLaneTypes;  // x, y, heading, lane-type one-hot

enum class LaneType : int { Through = 0, Curved = 1, Connector = 2 };

/// P polylines x S endpoints x C_m channels, row-major.
struct VectorMap {
  int num_polylines = 0;
  int num_points = 0;
  int channels = kMapChannels;
  std::vector<double> data;

  double at(int p, int s, int ch) const {
    return data[(static_cast<std::size_t>(p) * num_points + s) * channels + ch];
  }
  double& at(int p, int s, int ch) {
    return data[(static_cast<std::size_t>(p) * num_points + s) * channels + ch];
  }
  /// Mean endpoint position of polyline p.
  std::array<double, 2> centroid(int p) const;
  /// Largest distance between consecutive endpoints over all polylines.
  double max_step() const;

  /// Throws DataError when an invariant does not hold.
  void validate(double max_step_length = 5.0) const;

  friend bool operator==(const VectorMap&, const VectorMap&) = default;
};

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// One scene. Agent arrays span T_o + T_f steps; the first `split_index`
/// steps are history.
struct Scenario {
  std::string id;
  VectorMap map;
  int num_agents = 0;
  int num_steps = 0;
  std::vector<double> states;        // N x T x kAgentChannels
  std::vector<std::uint8_t> valid;   // N x T
  std::vector<int> target_ids;
  int split_index = 0;

  int history() const { return split_index; }
  int horizon() const { return num_steps - split_index; }

  double state(int agent, int t, int ch) const {
    return states[(static_cast<std::size_t>(agent) * num_steps + t) * kAgentChannels + ch];
  }
  double& state(int agent, int t, int ch) {
    return states[(static_cast<std::size_t>(agent) * num_steps + t) * kAgentChannels + ch];
  }
  bool is_valid(int agent, int t) const {
    return valid[static_cast<std::size_t>(agent) * num_steps + t] != 0;
  }

  /// Throws DataError when an invariant does not hold.
  void validate(double max_step_length = 5.0) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct MapGrammar {
  double straight = 0.25;
  double curve = 0.25;
  double intersection = 0.25;
  double t_junction = 0.25;
};

struct MotionMix {
  double constant_velocity = 0.3;
  double constant_turn_rate = 0.3;
  double lane_follower = 0.4;
};

struct GenConfig {
  std::uint64_t seed = 0;
  int num_scenarios = 100;
  int min_agents = 4;
  int max_agents = 8;
  int num_targets = 1;
  int history = 50;  // T_o
  int horizon = 60;  // T_f
  int points_per_polyline = 11;
  double point_spacing = 4.0;
  double max_step_length = 5.0;
  int max_total_steps = 1024;
  MapGrammar grammar;
  MotionMix motion;
  double noise_std = 0.05;       // position noise, meters
  double velocity_noise_std = 0.3;
  double late_entry_prob = 0.2;
  double tracking_loss_prob = 0.1;
  double min_speed = 3.0;
  double max_speed = 14.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

enum class MotionKind { ConstantVelocity, ConstantTurnRate, LaneFollower };

/// Kinematic description of one agent's ground-truth motion.
struct MotionSpec {
  MotionKind kind = MotionKind::ConstantVelocity;
  double x0 = 0.0;
  double y0 = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double turn_rate = 0.0;     // rad/s, constant-turn-rate only
  double acceleration = 0.0;  // m/s^2 along the path, clamped at zero speed
  /// Dense centerline for lane followers (x, y pairs at unit arc spacing).
  std::vector<std::array<double, 2>> lane;
  double lane_offset = 0.0;   // starting arc length along `lane`
};

/// Rolls a motion model forward for `steps` ticks of `dt`, adding
/// N(0, noise_std) to positions and N(0, velocity_noise_std) to velocities.
std::vector<AgentState> simulate_agent(const MotionSpec& spec, int steps, double dt,
                                       double noise_std, double velocity_noise_std,
                                       std::uint64_t seed);

VectorMap generate_map(const GenConfig& config, std::uint64_t seed);
Scenario generate_scenario(const VectorMap& map, const GenConfig& config, std::uint64_t seed);
/// `config.num_scenarios` scenes; scene i is a pure function of (config, i).
std::vector<Scenario> generate_dataset(const GenConfig& config);

inline constexpr const char* kScenarioHeader = "prf-scenario v1";

/// One scenario per line after a `prf-scenario v1` header. Each line holds
/// tab-separated `key=value` fields in this order:
///   id=<string>
///   map=<P>,<S>,<C_m>|<P*S*C_m floats>
///   agents=<N>,<T>,<C_a>|<N*T*C_a floats>
///   mask=<N>,<T>|<N*T characters 0/1>
///   targets=<space-separated agent indices>
///   split_index=<T_o>
/// Floats are space-separated decimal text with 17 significant digits.
void write_scenarios(const std::vector<Scenario>& scenarios, std::ostream& out);
std::vector<Scenario> read_scenarios(std::istream& in);
void write_scenarios(const std::vector<Scenario>& scenarios, const std::filesystem::path& path);
std::vector<Scenario> read_scenarios(const std::filesystem::path& path);

void write_scenario(const Scenario& s, const std::filesystem::path& path);
Scenario read_scenario(const std::filesystem::path& path);

}  // namespace prf
