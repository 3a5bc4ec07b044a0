#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "saferl/envs/point_env.hpp"
#include "saferl/util/errors.hpp"
#include "saferl/util/rng.hpp"

using namespace saferl;
using envs::EnvSpec;
using envs::EnvState;

namespace {

EnvSpec run_no_jitter() {
  EnvSpec spec = EnvSpec::run_default();
  spec.reset_jitter_pos = 0.0;
  spec.reset_jitter_vel = 0.0;
  return spec;
}

EnvState make_state(double x, double y, double vx, double vy, int t = 0) {
  EnvState s;
  s.x = x;
  s.y = y;
  s.vx = vx;
  s.vy = vy;
  s.t = t;
  return s;
}

double run_distance(const EnvSpec& spec, const EnvState& s) {
  return std::hypot(spec.goal_x - s.x, spec.goal_y - s.y);
}

}  // namespace

TEST_CASE("reset is reproducible and zero jitter gives the nominal start") {
  const EnvSpec run = EnvSpec::run_default();
  Rng a(42), b(42);
  const EnvState sa = envs::reset_state(run, a);
  const EnvState sb = envs::reset_state(run, b);
  CHECK(sa.x == sb.x);
  CHECK(sa.y == sb.y);
  CHECK(sa.vx == sb.vx);
  CHECK(sa.vy == sb.vy);
  CHECK(sa.t == 0);

  Rng c(7);
  const EnvState nominal = envs::reset_state(run_no_jitter(), c);
  CHECK(nominal.x == 0.0);
  CHECK(nominal.y == 0.0);
  CHECK(nominal.vx == 0.0);
  CHECK(nominal.vy == 0.0);

  EnvSpec circle = EnvSpec::circle_default();
  circle.reset_jitter_pos = 0.0;
  circle.reset_jitter_vel = 0.0;
  Rng d(7);
  const EnvState on_ring = envs::reset_state(circle, d);
  CHECK(on_ring.x == circle.radius);
  CHECK(on_ring.y == 0.0);
}

TEST_CASE("resets stay inside the configured jitter box") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvSpec circle = EnvSpec::circle_default();
  Rng rng(101);
  for (int i = 0; i < 10000; ++i) {
    const EnvState s = envs::reset_state(run, rng);
    CHECK(std::abs(s.x) <= run.reset_jitter_pos);
    CHECK(std::abs(s.y) <= run.reset_jitter_pos);
    CHECK(std::abs(s.vx) <= run.reset_jitter_vel);
    CHECK(std::abs(s.vy) <= run.reset_jitter_vel);
    const EnvState sc = envs::reset_state(circle, rng);
    CHECK(std::abs(sc.x - circle.radius) <= circle.reset_jitter_pos);
    CHECK(std::abs(sc.y) <= circle.reset_jitter_pos);
  }
}

TEST_CASE("double integrator update follows the closed form") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvState s = make_state(1.0, -2.0, 0.3, 0.1, 5);
  const auto out = envs::step(run, s, std::vector<double>{0.5, -1.0});
  CHECK(out.next.vx == doctest::Approx(0.3 + 0.5 * run.dt).epsilon(1e-15));
  CHECK(out.next.vy == doctest::Approx(0.1 - 1.0 * run.dt).epsilon(1e-15));
  CHECK(out.next.x == doctest::Approx(1.0 + out.next.vx * run.dt));
  CHECK(out.next.y == doctest::Approx(-2.0 + out.next.vy * run.dt));
  CHECK(out.next.t == 6);
  CHECK_FALSE(out.done);
}

TEST_CASE("actions are clamped to the force box") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvState s = make_state(0.0, 0.0, 0.0, 0.0);
  const auto big = envs::step(run, s, std::vector<double>{50.0, -50.0});
  const auto unit = envs::step(run, s, std::vector<double>{1.0, -1.0});
  CHECK(big.next.vx == unit.next.vx);
  CHECK(big.next.vy == unit.next.vy);
}

TEST_CASE("circle reward on the ring equals radius times tangential speed") {
  const EnvSpec circle = EnvSpec::circle_default();
  for (double v : {0.1, 0.5, 1.0, -0.7}) {
    const EnvState s = make_state(circle.radius, 0.0, 0.0, v);
    const auto out = envs::step(circle, s, std::vector<double>{0.0, 0.0});
    CHECK(out.reward == doctest::Approx(circle.radius * v).epsilon(1e-12));
  }
}

TEST_CASE("circle reward decays away from the ring and flips with direction") {
  const EnvSpec circle = EnvSpec::circle_default();
  const EnvState off = make_state(2.0 * circle.radius, 0.0, 0.0, 1.0);
  const auto out = envs::step(circle, off, std::vector<double>{0.0, 0.0});
  CHECK(out.reward ==
        doctest::Approx(2.0 * circle.radius / (1.0 + circle.radius)));
  const EnvState cw = make_state(circle.radius, 0.0, 0.0, -1.0);
  CHECK(envs::step(circle, cw, std::vector<double>{0.0, 0.0}).reward < 0.0);
}

TEST_CASE("circle cost marks positions beyond the x corridor") {
  const EnvSpec circle = EnvSpec::circle_default();
  const auto inside = envs::step(circle, make_state(0.5, 0.5, 0.0, 0.0),
                                 std::vector<double>{0.0, 0.0});
  CHECK(inside.cost == 0.0);
  const auto outside = envs::step(circle, make_state(0.9, 0.0, 0.0, 0.0),
                                  std::vector<double>{0.0, 0.0});
  CHECK(outside.cost == 1.0);
  const auto mirrored = envs::step(circle, make_state(-0.9, 0.0, 0.0, 0.0),
                                   std::vector<double>{0.0, 0.0});
  CHECK(mirrored.cost == 1.0);
}

TEST_CASE("run cost sums the lane and speed indicators") {
  const EnvSpec run = EnvSpec::run_default();
  const std::vector<double> coast = {0.0, 0.0};
  CHECK(envs::step(run, make_state(3.0, 0.2, 0.8, 0.0), coast).cost == 0.0);
  CHECK(envs::step(run, make_state(3.0, 0.7, 0.8, 0.0), coast).cost == 1.0);
  CHECK(envs::step(run, make_state(3.0, 0.2, 1.4, 0.0), coast).cost == 1.0);
  CHECK(envs::step(run, make_state(3.0, 0.7, 1.4, 0.0), coast).cost == 2.0);
  CHECK(envs::step(run, make_state(3.0, 0.0, 0.8, 0.8), coast).cost == 1.0);
}

TEST_CASE("run reward telescopes to the total distance decrease") {
  const EnvSpec run = run_no_jitter();
  Rng rng(11);
  EnvState s = envs::reset_state(run, rng);
  const double initial = run_distance(run, s);
  double total = 0.0;
  std::vector<double> action(2);
  for (int t = 0; t < run.episode_len; ++t) {
    action[0] = rng.uniform(-1.0, 1.0);
    action[1] = rng.uniform(-1.0, 1.0);
    const auto out = envs::step(run, s, action);
    total += out.reward;
    s = out.next;
  }
  CHECK(total == doctest::Approx(initial - run_distance(run, s)).epsilon(1e-9));
}

TEST_CASE("episode terminates exactly at the rollout length") {
  const EnvSpec run = EnvSpec::run_default();
  const std::vector<double> coast = {0.0, 0.0};
  const auto before = envs::step(
      run, make_state(0.0, 0.0, 0.0, 0.0, run.episode_len - 2), coast);
  CHECK_FALSE(before.done);
  const auto last = envs::step(
      run, make_state(0.0, 0.0, 0.0, 0.0, run.episode_len - 1), coast);
  CHECK(last.done);
}

TEST_CASE("non finite states and actions are rejected") {
  const EnvSpec run = EnvSpec::run_default();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(envs::step(run, make_state(nan, 0.0, 0.0, 0.0),
                             std::vector<double>{0.0, 0.0}),
                  FaultError);
  CHECK_THROWS_AS(envs::step(run, make_state(0.0, 0.0, inf, 0.0),
                             std::vector<double>{0.0, 0.0}),
                  FaultError);
  CHECK_THROWS_AS(envs::step(run, make_state(0.0, 0.0, 0.0, 0.0),
                             std::vector<double>{nan, 0.0}),
                  FaultError);
  CHECK_THROWS_AS(envs::step(run, make_state(0.0, 0.0, 0.0, 0.0),
                             std::vector<double>{0.0}),
                  InputError);
}

TEST_CASE("observations match the per task oracle formulas") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvSpec circle = EnvSpec::circle_default();
  CHECK(run.obs_dim() == 7);
  CHECK(circle.obs_dim() == 6);

  std::vector<double> obs;
  envs::observe(run, make_state(0.0, 0.0, 0.0, 0.0), obs);
  REQUIRE(obs.size() == 7);
  CHECK(obs[0] == 0.0);
  CHECK(obs[1] == 0.0);
  CHECK(obs[2] == 0.0);
  CHECK(obs[3] == 0.0);
  CHECK(obs[4] == doctest::Approx(run.goal_x));
  CHECK(obs[5] == doctest::Approx(0.0));
  CHECK(obs[6] == doctest::Approx(run.v_lim));

  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const EnvState s = make_state(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                                  rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    envs::observe(run, s, obs);
    CHECK(obs[0] == s.x);
    CHECK(obs[1] == s.y);
    CHECK(obs[2] == s.vx);
    CHECK(obs[3] == s.vy);
    CHECK(obs[4] == doctest::Approx(run.goal_x - s.x).epsilon(1e-15));
    CHECK(obs[5] == doctest::Approx(run.goal_y - s.y).epsilon(1e-15));
    CHECK(obs[6] ==
          doctest::Approx(run.v_lim - std::hypot(s.vx, s.vy)).epsilon(1e-12));

    envs::observe(circle, s, obs);
    REQUIRE(obs.size() == 6);
    CHECK(obs[4] == doctest::Approx(std::hypot(s.x, s.y) - circle.radius)
                        .epsilon(1e-12));
    CHECK(obs[5] ==
          doctest::Approx(circle.x_lim - std::abs(s.x)).epsilon(1e-15));
  }
}

TEST_CASE("observation width stays constant across an episode") {
  const EnvSpec circle = EnvSpec::circle_default();
  Rng rng(19);
  EnvState s = envs::reset_state(circle, rng);
  std::vector<double> obs;
  std::vector<double> action(2);
  for (int t = 0; t < 50; ++t) {
    envs::observe(circle, s, obs);
    CHECK(obs.size() == static_cast<std::size_t>(circle.obs_dim()));
    action[0] = rng.uniform(-1.0, 1.0);
    action[1] = rng.uniform(-1.0, 1.0);
    s = envs::step(circle, s, action).next;
  }
}

TEST_CASE("per step costs stay within the task cost alphabet") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvSpec circle = EnvSpec::circle_default();
  CHECK(run.cost_max() == 2.0);
  CHECK(circle.cost_max() == 1.0);
  Rng rng(23);
  std::vector<double> action(2);
  EnvState s = envs::reset_state(run, rng);
  double episode_cost = 0.0;
  for (int t = 0; t < run.episode_len; ++t) {
    action[0] = rng.uniform(-1.0, 1.0);
    action[1] = rng.uniform(-1.0, 1.0);
    const auto out = envs::step(run, s, action);
    CHECK((out.cost == 0.0 || out.cost == 1.0 || out.cost == 2.0));
    episode_cost += out.cost;
    s = out.next;
  }
  CHECK(episode_cost <= run.episode_len * run.cost_max());

  EnvState c = envs::reset_state(circle, rng);
  for (int t = 0; t < circle.episode_len; ++t) {
    action[0] = rng.uniform(-1.0, 1.0);
    action[1] = rng.uniform(-1.0, 1.0);
    const auto out = envs::step(circle, c, action);
    CHECK((out.cost == 0.0 || out.cost == 1.0));
    c = out.next;
  }
}

TEST_CASE("dynamics are deterministic given state and action") {
  const EnvSpec run = EnvSpec::run_default();
  const EnvState s = make_state(1.5, -0.25, 0.4, -0.6, 9);
  const std::vector<double> action = {0.3, 0.7};
  const auto a = envs::step(run, s, action);
  const auto b = envs::step(run, s, action);
  CHECK(a.next.x == b.next.x);
  CHECK(a.next.y == b.next.y);
  CHECK(a.next.vx == b.next.vx);
  CHECK(a.next.vy == b.next.vy);
  CHECK(a.reward == b.reward);
  CHECK(a.cost == b.cost);
}

TEST_CASE("speeding earns strictly more run reward than staying feasible") {
  const EnvSpec run = run_no_jitter();
  Rng rng(29);

  EnvState greedy = envs::reset_state(run, rng);
  double greedy_reward = 0.0, greedy_cost = 0.0;
  for (int t = 0; t < run.episode_len; ++t) {
    const auto out = envs::step(run, greedy, std::vector<double>{1.0, 0.0});
    greedy_reward += out.reward;
    greedy_cost += out.cost;
    greedy = out.next;
  }

  EnvState capped = envs::reset_state(run, rng);
  double capped_reward = 0.0, capped_cost = 0.0;
  for (int t = 0; t < run.episode_len; ++t) {
    const double headroom = run.v_lim - capped.vx;
    const double a = std::min(1.0, std::max(0.0, headroom / run.dt));
    const auto out = envs::step(run, capped, std::vector<double>{a, 0.0});
    capped_reward += out.reward;
    capped_cost += out.cost;
    capped = out.next;
  }

  CHECK(capped_cost == 0.0);
  CHECK(greedy_cost > 0.0);
  CHECK(capped_reward > 0.0);
  CHECK(greedy_reward > capped_reward);
}

TEST_CASE("counter clockwise circulation accrues reward without cost") {
  EnvSpec circle = EnvSpec::circle_default();
  circle.reset_jitter_pos = 0.0;
  circle.reset_jitter_vel = 0.0;
  Rng rng(31);
  EnvState s = envs::reset_state(circle, rng);
  double total_reward = 0.0, total_cost = 0.0, late_cost = 0.0;
  // Track a velocity field that orbits counter clockwise at radius 0.75,
  // inside the corridor, at tangential speed 0.5.
  const double orbit_r = 0.75, orbit_v = 0.5;
  for (int t = 0; t < circle.episode_len; ++t) {
    const double rad = std::hypot(s.x, s.y);
    const double ux = rad > 1e-9 ? s.x / rad : 1.0;
    const double uy = rad > 1e-9 ? s.y / rad : 0.0;
    const double vx_des = -orbit_v * uy + (orbit_r - rad) * ux;
    const double vy_des = orbit_v * ux + (orbit_r - rad) * uy;
    const std::vector<double> action = {(vx_des - s.vx) / circle.dt,
                                        (vy_des - s.vy) / circle.dt};
    const auto out = envs::step(circle, s, action);
    total_reward += out.reward;
    total_cost += out.cost;
    if (t >= 100) late_cost += out.cost;
    s = out.next;
  }
  CHECK(total_reward > 10.0);
  CHECK(total_cost < 0.2 * circle.episode_len);
  CHECK(late_cost == 0.0);
}

TEST_CASE("env spec json round trips and rejects bad input") {
  EnvSpec spec = EnvSpec::circle_default();
  spec.dt = 0.025;
  spec.radius = 2.0;
  spec.x_lim = 1.4;
  const EnvSpec back = EnvSpec::from_json(spec.to_json());
  CHECK(back.task == envs::Task::kCircle);
  CHECK(back.dt == spec.dt);
  CHECK(back.radius == spec.radius);
  CHECK(back.x_lim == spec.x_lim);
  CHECK(back.episode_len == spec.episode_len);

  const EnvSpec run = EnvSpec::from_json(EnvSpec::run_default().to_json());
  CHECK(run.task == envs::Task::kRun);
  CHECK(run.episode_len == 200);

  CHECK_THROWS_AS(EnvSpec::from_json({{"task", "swim"}}), InputError);
  CHECK_THROWS_AS(EnvSpec::from_json({{"task", "run"}, {"dt", -0.1}}),
                  InputError);
  EnvSpec bad = EnvSpec::run_default();
  bad.episode_len = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
