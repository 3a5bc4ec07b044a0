#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "saferl/util/rng.hpp"

namespace saferl::envs {

enum class Task { kRun, kCircle };

// Kinematic point-mass on the plane, double-integrator dynamics. Run asks
// for forward progress under a lane and a speed limit; Circle asks for fast
// circulation while keeping |x| inside a band narrower than the radius.
struct EnvSpec {
  Task task = Task::kRun;
  double dt = 0.05;
  double max_force = 1.0;
  int episode_len = 200;  // 300 for circle

  // Run parameters.
  double y_lim = 0.5;
  double v_lim = 1.0;  // full throttle exceeds this by design
  double goal_x = 60.0;
  double goal_y = 0.0;

  // Circle parameters.
  double radius = 1.0;
  double x_lim = 0.8;  // 0.8 * radius by default

  double reset_jitter_pos = 0.05;
  double reset_jitter_vel = 0.01;

  int obs_dim() const { return task == Task::kRun ? 7 : 6; }
  double cost_max() const { return task == Task::kRun ? 2.0 : 1.0; }

  void validate() const;
  nlohmann::json to_json() const;
  static EnvSpec from_json(const nlohmann::json& j);
  static EnvSpec run_default();
  static EnvSpec circle_default();
};

struct EnvState {
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  int t = 0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  double cost = 0.0;
  bool done = false;
};

// Nominal start plus uniform jitter: origin for Run, (radius, 0) for Circle.
EnvState reset_state(const EnvSpec& spec, Rng& rng);

// Deterministic transition; actions are clamped to the force box. Throws
// FaultError if the incoming state is non-finite.
StepResult step(const EnvSpec& spec, const EnvState& state,
                std::span<const double> action);

// Fixed-order observation: [x, y, vx, vy, task features]. Run features are
// (goal_x - x, goal_y - y, v_lim - speed); Circle features are
// (sqrt(x^2+y^2) - radius, x_lim - |x|).
void observe(const EnvSpec& spec, const EnvState& state,
             std::vector<double>& obs);

// Per-dimension multipliers that bring every observation component to unit
// order. Networks and attackers operate on the scaled vectors; the scale is
// a pure function of the spec so runs stay reproducible.
std::vector<double> observation_scale(const EnvSpec& spec);

// obs * scale, elementwise.
void scale_observation(std::span<const double> scale, std::vector<double>& obs);

}  // namespace saferl::envs
