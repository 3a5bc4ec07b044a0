#include "saferl/tabular/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saferl/tabular/solve.hpp"
#include "saferl/util/errors.hpp"
#include "detail.hpp"

namespace saferl::tabular {

namespace {

void fill_simplex(Rng& rng, double* out, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = -std::log(1.0 - rng.uniform());
    sum += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= sum;
}

// Costs of the return-greedy and cost-min deterministic policies at mu0.
struct CostEnvelope {
  double greedy_cost = 0.0;
  double min_cost = 0.0;
};

CostEnvelope cost_envelope(const TabularCmdp& m) {
  const auto identity = TabularAdversary::identity(m.n_states);
  CostEnvelope env;
  double best_ret = -std::numeric_limits<double>::infinity();
  env.min_cost = std::numeric_limits<double>::infinity();
  std::vector<int> actions(m.n_states, 0);
  while (true) {
    const auto pi =
        TabularPolicy::deterministic(m.n_states, m.n_actions, actions);
    const auto v_r = detail::exact_values(m, pi, identity, Objective::kReward);
    const auto v_c = detail::exact_values(m, pi, identity, Objective::kCost);
    double ret = 0.0, cost = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
      ret += m.mu0[s] * v_r[s];
      cost += m.mu0[s] * v_c[s];
    }
    if (ret > best_ret) {
      best_ret = ret;
      env.greedy_cost = cost;
    }
    env.min_cost = std::min(env.min_cost, cost);
    int s = 0;
    for (; s < m.n_states; ++s) {
      if (++actions[s] < m.n_actions) break;
      actions[s] = 0;
    }
    if (s == m.n_states) break;
  }
  return env;
}

}  // namespace

TabularCmdp random_cmdp(Rng& rng, int n_states, int n_actions, double gamma) {
  TabularCmdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.gamma = gamma;
  m.c_max = 1.0;
  const std::size_t nsas =
      static_cast<std::size_t>(n_states) * n_actions * n_states;
  m.transition.resize(nsas);
  m.reward.resize(nsas);
  m.cost.assign(nsas, 0.0);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      fill_simplex(rng, &m.transition[m.idx(s, a, 0)], n_states);
    }
  }
  for (auto& r : m.reward) r = rng.uniform();

  std::vector<char> unsafe(n_states, 0);
  int n_unsafe = 0;
  for (int s = 0; s < n_states; ++s) {
    if (rng.uniform() < 0.4) {
      unsafe[s] = 1;
      ++n_unsafe;
    }
  }
  if (n_unsafe == 0) unsafe[rng.uniform_int(0, n_states - 1)] = 1;
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      for (int sp = 0; sp < n_states; ++sp) {
        if (unsafe[sp]) {
          m.cost[m.idx(s, a, sp)] = rng.uniform(0.2, 1.0) * m.c_max;
        }
      }
    }
  }
  m.mu0.resize(n_states);
  fill_simplex(rng, m.mu0.data(), n_states);
  m.kappa = 0.5 * m.c_max / (1.0 - gamma);
  m.validate();
  return m;
}

TabularPolicy random_policy(Rng& rng, int n_states, int n_actions) {
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.resize(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    fill_simplex(rng, &pi.probs[static_cast<std::size_t>(s) * n_actions],
                 n_actions);
  }
  return pi;
}

StateBall random_ball(Rng& rng, int n_states, int max_extra) {
  StateBall ball(n_states);
  for (int s = 0; s < n_states; ++s) {
    ball[s].push_back(s);
    const int extra = rng.uniform_int(0, max_extra);
    for (int i = 0; i < extra; ++i) {
      const int cand = rng.uniform_int(0, n_states - 1);
      if (std::find(ball[s].begin(), ball[s].end(), cand) == ball[s].end()) {
        ball[s].push_back(cand);
      }
    }
    std::sort(ball[s].begin(), ball[s].end());
  }
  return ball;
}

TabularCmdp random_tempting_cmdp(Rng& rng, int n_states, int n_actions,
                                 double gamma) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TabularCmdp m = random_cmdp(rng, n_states, n_actions, gamma);
    const CostEnvelope env = cost_envelope(m);
    if (env.greedy_cost - env.min_cost < 0.05) continue;
    const double u = rng.uniform(0.3, 0.7);
    m.kappa = env.min_cost + u * (env.greedy_cost - env.min_cost);
    if (classify_temptation(m).status == Temptation::kTempting) return m;
  }
  throw FaultError("failed to draw a tempting instance");
}

TabularCmdp random_nontempting_cmdp(Rng& rng, int n_states, int n_actions,
                                    double gamma, bool vacuous) {
  TabularCmdp m = random_cmdp(rng, n_states, n_actions, gamma);
  if (vacuous) {
    // Every policy's cost is below c_max / (1 - gamma).
    m.kappa = m.c_max / (1.0 - gamma) + 1.0;
  } else {
    const CostEnvelope env = cost_envelope(m);
    m.kappa = env.greedy_cost + 0.1;
  }
  return m;
}

}  // namespace saferl::tabular
