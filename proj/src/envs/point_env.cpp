#include "saferl/envs/point_env.hpp"

#include <algorithm>
#include <cmath>

#include "saferl/util/errors.hpp"

namespace saferl::envs {

void EnvSpec::validate() const {
  if (!(dt > 0.0) || !(max_force > 0.0) || episode_len <= 0) {
    throw InputError("env spec: dt, max_force, episode_len must be positive");
  }
  if (!(y_lim > 0.0) || !(v_lim > 0.0) || !(radius > 0.0) ||
      !(x_lim > 0.0)) {
    throw InputError("env spec: limits must be positive");
  }
  if (task == Task::kRun && !(goal_x > 0.0)) {
    throw InputError("env spec: goal_x must be positive");
  }
  if (reset_jitter_pos < 0.0 || reset_jitter_vel < 0.0) {
    throw InputError("env spec: jitter must be nonnegative");
  }
}

nlohmann::json EnvSpec::to_json() const {
  return nlohmann::json{
      {"task", task == Task::kRun ? "run" : "circle"},
      {"dt", dt},
      {"max_force", max_force},
      {"episode_len", episode_len},
      {"y_lim", y_lim},
      {"v_lim", v_lim},
      {"goal_x", goal_x},
      {"goal_y", goal_y},
      {"radius", radius},
      {"x_lim", x_lim},
      {"reset_jitter_pos", reset_jitter_pos},
      {"reset_jitter_vel", reset_jitter_vel},
  };
}

EnvSpec EnvSpec::from_json(const nlohmann::json& j) {
  EnvSpec spec;
  try {
    const std::string task = j.value("task", "run");
    if (task == "run") {
      spec = run_default();
    } else if (task == "circle") {
      spec = circle_default();
    } else {
      throw InputError("env spec: unknown task " + task);
    }
    spec.dt = j.value("dt", spec.dt);
    spec.max_force = j.value("max_force", spec.max_force);
    spec.episode_len = j.value("episode_len", spec.episode_len);
    spec.y_lim = j.value("y_lim", spec.y_lim);
    spec.v_lim = j.value("v_lim", spec.v_lim);
    spec.goal_x = j.value("goal_x", spec.goal_x);
    spec.goal_y = j.value("goal_y", spec.goal_y);
    spec.radius = j.value("radius", spec.radius);
    if (j.contains("x_lim")) {
      spec.x_lim = j.at("x_lim").get<double>();
    } else {
      spec.x_lim = 0.8 * spec.radius;
    }
    spec.reset_jitter_pos = j.value("reset_jitter_pos", spec.reset_jitter_pos);
    spec.reset_jitter_vel = j.value("reset_jitter_vel", spec.reset_jitter_vel);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("env spec json: ") + e.what());
  }
  spec.validate();
  return spec;
}

EnvSpec EnvSpec::run_default() {
  EnvSpec spec;
  spec.task = Task::kRun;
  spec.episode_len = 200;
  return spec;
}

EnvSpec EnvSpec::circle_default() {
  EnvSpec spec;
  spec.task = Task::kCircle;
  spec.episode_len = 300;
  spec.radius = 1.0;
  spec.x_lim = 0.8;
  return spec;
}

EnvState reset_state(const EnvSpec& spec, Rng& rng) {
  EnvState s;
  const double cx = spec.task == Task::kCircle ? spec.radius : 0.0;
  s.x = cx + rng.uniform(-spec.reset_jitter_pos, spec.reset_jitter_pos);
  s.y = rng.uniform(-spec.reset_jitter_pos, spec.reset_jitter_pos);
  s.vx = rng.uniform(-spec.reset_jitter_vel, spec.reset_jitter_vel);
  s.vy = rng.uniform(-spec.reset_jitter_vel, spec.reset_jitter_vel);
  s.t = 0;
  return s;
}

StepResult step(const EnvSpec& spec, const EnvState& state,
                std::span<const double> action) {
  if (action.size() != 2) throw InputError("env step: action must be 2-d");
  if (!std::isfinite(state.x) || !std::isfinite(state.y) ||
      !std::isfinite(state.vx) || !std::isfinite(state.vy)) {
    throw FaultError("env step: non-finite state");
  }
  if (!std::isfinite(action[0]) || !std::isfinite(action[1])) {
    throw FaultError("env step: non-finite action");
  }
  const double ax = std::clamp(action[0], -spec.max_force, spec.max_force);
  const double ay = std::clamp(action[1], -spec.max_force, spec.max_force);

  StepResult out;
  EnvState& n = out.next;
  n.vx = state.vx + ax * spec.dt;
  n.vy = state.vy + ay * spec.dt;
  n.x = state.x + n.vx * spec.dt;
  n.y = state.y + n.vy * spec.dt;
  n.t = state.t + 1;

  if (spec.task == Task::kRun) {
    const double before = std::hypot(spec.goal_x - state.x,
                                     spec.goal_y - state.y);
    const double after = std::hypot(spec.goal_x - n.x, spec.goal_y - n.y);
    out.reward = before - after;
    const double speed = std::hypot(state.vx, state.vy);
    out.cost = (std::abs(state.y) > spec.y_lim ? 1.0 : 0.0) +
               (speed > spec.v_lim ? 1.0 : 0.0);
  } else {
    const double rad = std::hypot(state.x, state.y);
    out.reward = (-state.y * state.vx + state.x * state.vy) /
                 (1.0 + std::abs(rad - spec.radius));
    out.cost = std::abs(state.x) > spec.x_lim ? 1.0 : 0.0;
  }
  out.done = n.t >= spec.episode_len;
  return out;
}

void observe(const EnvSpec& spec, const EnvState& state,
             std::vector<double>& obs) {
  obs.resize(spec.obs_dim());
  obs[0] = state.x;
  obs[1] = state.y;
  obs[2] = state.vx;
  obs[3] = state.vy;
  if (spec.task == Task::kRun) {
    obs[4] = spec.goal_x - state.x;
    obs[5] = spec.goal_y - state.y;
    obs[6] = spec.v_lim - std::hypot(state.vx, state.vy);
  } else {
    obs[4] = std::hypot(state.x, state.y) - spec.radius;
    obs[5] = spec.x_lim - std::abs(state.x);
  }
}

std::vector<double> observation_scale(const EnvSpec& spec) {
  spec.validate();
  if (spec.task == Task::kRun) {
    const double pos = 1.0 / spec.goal_x;
    const double lat = 1.0 / (2.0 * spec.y_lim);
    const double vel = 1.0 / (2.0 * spec.v_lim);
    return {pos, lat, vel, vel, pos, lat, vel};
  }
  const double pos = 1.0 / spec.radius;
  return {pos, pos, 0.5, 0.5, pos, pos};
}

void scale_observation(std::span<const double> scale,
                       std::vector<double>& obs) {
  if (scale.size() != obs.size()) {
    throw SizeError("scale_observation: dimension mismatch");
  }
  for (std::size_t i = 0; i < obs.size(); ++i) obs[i] *= scale[i];
}

}  // namespace saferl::envs
