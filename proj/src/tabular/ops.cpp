#include "saferl/tabular/ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "saferl/kernels/kernels.hpp"
#include "saferl/tabular/cmdp.hpp"
#include "saferl/util/errors.hpp"
#include "saferl/util/rng.hpp"
#include "detail.hpp"

namespace saferl::tabular {

namespace {

constexpr int kMaxSweeps = 1000000;

void check_value_dim(const std::vector<double>& v, int n_states) {
  if (v.size() != static_cast<std::size_t>(n_states)) {
    throw InputError("value vector length does not match state count");
  }
}

// Expected objective plus discounted continuation per (s, a):
// w[s][a] = sum_s' P(s'|s,a) (f(s,a,s') + gamma v(s')).
void action_values(const TabularCmdp& m, const std::vector<double>& f,
                   const std::vector<double>& v, std::vector<double>& w) {
  const auto& k = kern::active();
  const int n = m.n_states;
  w.resize(static_cast<std::size_t>(n) * m.n_actions);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      const std::size_t base = m.idx(s, a, 0);
      const double ef = k.dot(&m.transition[base], &f[base], n);
      const double cont = k.dot(&m.transition[base], v.data(), n);
      w[static_cast<std::size_t>(s) * m.n_actions + a] =
          ef + m.gamma * cont;
    }
  }
}

double policy_row_value(const TabularPolicy& pi, int shown,
                        const std::vector<double>& w, int s, int n_actions) {
  double acc = 0.0;
  const std::size_t prow = static_cast<std::size_t>(shown) * n_actions;
  const std::size_t wrow = static_cast<std::size_t>(s) * n_actions;
  for (int a = 0; a < n_actions; ++a) acc += pi.probs[prow + a] * w[wrow + a];
  return acc;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

std::vector<double> fixed_point(
    const TabularCmdp& m,
    const std::function<std::vector<double>(const std::vector<double>&)>& op,
    double tol) {
  std::vector<double> v(m.n_states, 0.0);
  for (int it = 0; it < kMaxSweeps; ++it) {
    std::vector<double> next = op(v);
    const double res = sup_diff(next, v);
    v = std::move(next);
    if (res < tol) return v;
  }
  throw FaultError("value iteration failed to converge");
}

}  // namespace

std::vector<double> bellman_policy_op(const std::vector<double>& v,
                                      const TabularCmdp& m,
                                      const TabularPolicy& pi,
                                      const TabularAdversary& nu,
                                      Objective f) {
  check_value_dim(v, m.n_states);
  std::vector<double> w;
  action_values(m, m.tensor(f), v, w);
  std::vector<double> out(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    out[s] = policy_row_value(pi, nu.mapping[s], w, s, m.n_actions);
  }
  return out;
}

ValuePair evaluate_policy(const TabularCmdp& m, const TabularPolicy& pi,
                          const TabularAdversary& nu, double tol) {
  ValuePair vp;
  vp.v_r = fixed_point(
      m,
      [&](const std::vector<double>& v) {
        return bellman_policy_op(v, m, pi, nu, Objective::kReward);
      },
      tol);
  vp.v_c = fixed_point(
      m,
      [&](const std::vector<double>& v) {
        return bellman_policy_op(v, m, pi, nu, Objective::kCost);
      },
      tol);
  return vp;
}

double weighted_value(const std::vector<double>& v,
                      const std::vector<double>& mu0) {
  if (v.size() != mu0.size()) {
    throw InputError("weighted_value: length mismatch");
  }
  return kern::active().dot(v.data(), mu0.data(), v.size());
}

ValuePair evaluate_mixed_policy(const TabularCmdp& m, const MixedPolicy& pi,
                                const TabularAdversary& nu, double tol) {
  pi.validate();
  ValuePair out;
  out.v_r.assign(m.n_states, 0.0);
  out.v_c.assign(m.n_states, 0.0);
  for (std::size_t i = 0; i < pi.components.size(); ++i) {
    const ValuePair vp = evaluate_policy(m, pi.components[i], nu, tol);
    const auto& k = kern::active();
    k.axpy(pi.weights[i], vp.v_r.data(), out.v_r.data(), out.v_r.size());
    k.axpy(pi.weights[i], vp.v_c.data(), out.v_c.data(), out.v_c.size());
  }
  return out;
}

std::vector<double> bellman_adversary_op(const std::vector<double>& v,
                                         const TabularCmdp& m,
                                         const TabularPolicy& pi,
                                         const StateBall& ball, Objective f) {
  check_value_dim(v, m.n_states);
  validate_ball(ball, m.n_states);
  std::vector<double> w;
  action_values(m, m.tensor(f), v, w);
  std::vector<double> out(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int shown : ball[s]) {
      best = std::max(best, policy_row_value(pi, shown, w, s, m.n_actions));
    }
    out[s] = best;
  }
  return out;
}

AdversarySolution optimal_adversary(const TabularCmdp& m,
                                    const TabularPolicy& pi,
                                    const StateBall& ball, Objective f,
                                    double tol) {
  AdversarySolution sol;
  sol.values = fixed_point(
      m,
      [&](const std::vector<double>& v) {
        return bellman_adversary_op(v, m, pi, ball, f);
      },
      tol);

  // Greedy extraction after convergence; ties resolve to the lowest index.
  std::vector<double> w;
  action_values(m, m.tensor(f), sol.values, w);
  sol.adversary.ball = ball;
  sol.adversary.mapping.resize(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_shown = ball[s].front();
    for (int shown : ball[s]) {
      const double q = policy_row_value(pi, shown, w, s, m.n_actions);
      if (q > best) {
        best = q;
        best_shown = shown;
      }
    }
    sol.adversary.mapping[s] = best_shown;
  }
  sol.objective_value = weighted_value(sol.values, m.mu0);
  return sol;
}

BruteForceResult brute_force_adversary(const TabularCmdp& m,
                                       const TabularPolicy& pi,
                                       const StateBall& ball, Objective f,
                                       double tol, double budget) {
  validate_ball(ball, m.n_states);
  double combos = 1.0;
  for (const auto& members : ball) {
    combos *= static_cast<double>(members.size());
    if (combos > budget) {
      throw SizeError("brute_force_adversary: candidate count exceeds budget");
    }
  }

  TabularAdversary nu;
  nu.ball = ball;
  nu.mapping.resize(m.n_states);
  std::vector<std::size_t> cursor(m.n_states, 0);
  for (int s = 0; s < m.n_states; ++s) nu.mapping[s] = ball[s][0];

  BruteForceResult best;
  best.objective_value = -std::numeric_limits<double>::infinity();
  while (true) {
    const ValuePair vp = evaluate_policy(m, pi, nu, tol);
    const auto& v = (f == Objective::kReward) ? vp.v_r : vp.v_c;
    const double val = weighted_value(v, m.mu0);
    if (val > best.objective_value) {
      best.objective_value = val;
      best.adversary = nu;
    }
    // Odometer step over the per-state member lists.
    int s = 0;
    for (; s < m.n_states; ++s) {
      if (++cursor[s] < ball[s].size()) {
        nu.mapping[s] = ball[s][cursor[s]];
        break;
      }
      cursor[s] = 0;
      nu.mapping[s] = ball[s][0];
    }
    if (s == m.n_states) break;
  }
  return best;
}

double penalty_floor(const TabularCmdp& m, Objective f) {
  double f_max = m.c_max;
  if (f == Objective::kReward) {
    f_max = 0.0;
    for (double r : m.reward) f_max = std::max(f_max, std::abs(r));
  }
  return f_max / (1.0 - m.gamma);
}

double default_penalty(const TabularCmdp& m, Objective f) {
  return 2.0 * std::max(penalty_floor(m, f),
                        m.c_max / (1.0 - m.gamma));
}

AdversaryMdp build_adversary_mdp(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball, Objective f,
                                 double penalty_c) {
  validate_ball(ball, m.n_states);
  if (!(penalty_c > penalty_floor(m, f))) {
    throw InputError(
        "adversary mdp: penalty too small to dominate in-ball returns");
  }
  const int n = m.n_states;
  AdversaryMdp out;
  out.n_states = n;
  out.gamma = m.gamma;
  out.penalty = penalty_c;
  out.p_hat.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  out.r_hat.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  const auto& tensor = m.tensor(f);
  for (int s = 0; s < n; ++s) {
    std::vector<bool> in_ball(n, false);
    for (int member : ball[s]) in_ball[member] = true;
    for (int shown = 0; shown < n; ++shown) {
      for (int sp = 0; sp < n; ++sp) {
        double flow = 0.0;
        double num = 0.0;
        for (int a = 0; a < m.n_actions; ++a) {
          const double w = pi.prob(shown, a) * m.p(s, a, sp);
          flow += w;
          num += w * tensor[m.idx(s, a, sp)];
        }
        const std::size_t o = (static_cast<std::size_t>(s) * n + shown) * n +
                              sp;
        out.p_hat[o] = flow;
        if (!in_ball[shown]) {
          out.r_hat[o] = -penalty_c;
        } else {
          out.r_hat[o] = flow > 0.0 ? num / flow : 0.0;
        }
      }
    }
  }
  return out;
}

AdversaryMdpSolution solve_adversary_mdp(const AdversaryMdp& mdp,
                                         const std::vector<double>& mu0,
                                         double tol) {
  const int n = mdp.n_states;
  if (mu0.size() != static_cast<std::size_t>(n)) {
    throw InputError("adversary mdp: mu0 length mismatch");
  }
  auto q_value = [&](const std::vector<double>& v, int s, int shown) {
    double acc = 0.0;
    const std::size_t base = (static_cast<std::size_t>(s) * n + shown) * n;
    for (int sp = 0; sp < n; ++sp) {
      acc += mdp.p_hat[base + sp] *
             (mdp.r_hat[base + sp] + mdp.gamma * v[sp]);
    }
    return acc;
  };

  std::vector<double> v(n, 0.0);
  for (int it = 0; it < kMaxSweeps; ++it) {
    std::vector<double> next(n);
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int shown = 0; shown < n; ++shown) {
        best = std::max(best, q_value(v, s, shown));
      }
      next[s] = best;
    }
    const double res = sup_diff(next, v);
    v = std::move(next);
    if (res < tol) break;
    if (it + 1 == kMaxSweeps) {
      throw FaultError("adversary mdp: value iteration failed to converge");
    }
  }

  AdversaryMdpSolution sol;
  sol.values = v;
  sol.greedy.resize(n);
  for (int s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int shown = 0; shown < n; ++shown) {
      const double q = q_value(v, s, shown);
      if (q > best) {
        best = q;
        arg = shown;
      }
    }
    sol.greedy[s] = arg;
  }
  sol.objective_value = weighted_value(sol.values, mu0);
  return sol;
}

double check_contraction(const TabularCmdp& m, const TabularPolicy& pi,
                         const TabularAdversary& nu, OpKind kind,
                         int n_trials, std::uint64_t seed) {
  if (n_trials <= 0) throw InputError("check_contraction: need trials");
  Rng rng(seed);
  auto apply = [&](const std::vector<double>& v) {
    switch (kind) {
      case OpKind::kPolicy:
        return bellman_policy_op(v, m, pi, nu, Objective::kCost);
      case OpKind::kAdversaryReward:
        return bellman_adversary_op(v, m, pi, nu.ball, Objective::kReward);
      case OpKind::kAdversaryCost:
      default:
        return bellman_adversary_op(v, m, pi, nu.ball, Objective::kCost);
    }
  };
  double worst = 0.0;
  std::vector<double> u(m.n_states), v(m.n_states);
  for (int t = 0; t < n_trials; ++t) {
    for (int s = 0; s < m.n_states; ++s) {
      u[s] = rng.uniform(-5.0, 5.0);
      v[s] = rng.uniform(-5.0, 5.0);
    }
    const double denom = sup_diff(u, v);
    if (denom < 1e-300) continue;
    const double num = sup_diff(apply(u), apply(v));
    worst = std::max(worst, num / denom);
  }
  return worst;
}

std::vector<int> cost_support(const TabularCmdp& m) {
  std::vector<char> hit(m.n_states, 0);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      for (int sp = 0; sp < m.n_states; ++sp) {
        if (m.c(s, a, sp) > 0.0) hit[sp] = 1;
      }
    }
  }
  std::vector<int> out;
  for (int s = 0; s < m.n_states; ++s) {
    if (hit[s]) out.push_back(s);
  }
  return out;
}

namespace {

double tv_distance(const TabularPolicy& pi, int s1, int s2) {
  double acc = 0.0;
  for (int a = 0; a < pi.n_actions; ++a) {
    acc += std::abs(pi.prob(s1, a) - pi.prob(s2, a));
  }
  return 0.5 * acc;
}

// Largest TV-to-distance ratio over a single ball, with the ball radius.
struct LocalSmoothness {
  double lipschitz = 0.0;
  double radius = 0.0;
};

LocalSmoothness measure_ball(const TabularPolicy& pi, const StateBall& ball,
                             const StateMetric& metric, int s) {
  LocalSmoothness out;
  for (int member : ball[s]) {
    const double d = metric(member, s);
    out.radius = std::max(out.radius, d);
    if (member == s) continue;
    const double tv = tv_distance(pi, member, s);
    if (d <= 0.0) {
      if (tv > 1e-12) {
        throw InputError(
            "bound check: zero-distance ball member with a different policy "
            "row makes the smoothness ratio undefined");
      }
      continue;
    }
    out.lipschitz = std::max(out.lipschitz, tv / d);
  }
  return out;
}

double mass_into(const TabularCmdp& m, const std::vector<int>& support,
                 int s) {
  double worst = 0.0;
  for (int a = 0; a < m.n_actions; ++a) {
    double acc = 0.0;
    for (int sp : support) acc += m.p(s, a, sp);
    worst = std::max(worst, acc);
  }
  return worst;
}

}  // namespace

BoundCheck verify_one_step_bound(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball, int state,
                                 const StateMetric& metric) {
  validate_ball(ball, m.n_states);
  if (state < 0 || state >= m.n_states) {
    throw InputError("one-step bound: state index out of range");
  }
  const std::vector<double> v_c =
      detail::exact_values(m, pi, TabularAdversary::identity(m.n_states),
                           Objective::kCost);

  // Worst single-state corruption: continuation still follows the clean
  // value function, only the first action distribution is swapped.
  std::vector<double> w;
  action_values(m, m.cost, v_c, w);
  double lhs = 0.0;
  for (int shown : ball[state]) {
    const double corrupted =
        policy_row_value(pi, shown, w, state, m.n_actions);
    lhs = std::max(lhs, corrupted - v_c[state]);
  }

  const LocalSmoothness s = measure_ball(pi, ball, metric, state);
  const std::vector<int> support = cost_support(m);
  const double p_s = mass_into(m, support, state);

  BoundCheck out;
  out.lhs = lhs;
  out.inputs.lipschitz_l = s.lipschitz;
  out.inputs.epsilon = s.radius;
  out.inputs.p_s = p_s;
  out.inputs.unsafe_states = support;
  out.rhs = 2.0 * s.lipschitz * s.radius *
            (p_s * m.c_max + m.gamma * m.c_max / (1.0 - m.gamma));
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

BoundCheck verify_episodic_bound(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball,
                                 const StateMetric& metric) {
  validate_ball(ball, m.n_states);
  const std::vector<double> v_c =
      detail::exact_values(m, pi, TabularAdversary::identity(m.n_states),
                           Objective::kCost);
  const double natural = weighted_value(v_c, m.mu0);
  if (natural > m.kappa + 1e-9) {
    throw InputError("episodic bound: policy is infeasible on this instance");
  }

  double lipschitz = 0.0;
  double radius = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    const LocalSmoothness local = measure_ball(pi, ball, metric, s);
    lipschitz = std::max(lipschitz, local.lipschitz);
    radius = std::max(radius, local.radius);
  }
  const std::vector<int> support = cost_support(m);
  double p_max = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    p_max = std::max(p_max, mass_into(m, support, s));
  }

  BoundCheck out;
  out.lhs = brute_force_adversary(m, pi, ball, Objective::kCost)
                .objective_value;
  out.inputs.lipschitz_l = lipschitz;
  out.inputs.epsilon = radius;
  out.inputs.p_s = p_max;
  out.inputs.unsafe_states = support;
  const double g = m.gamma;
  const double le = lipschitz * radius;
  out.rhs = m.kappa +
            2.0 * le * m.c_max *
                (1.0 / (1.0 - g) + 4.0 * g * le / ((1.0 - g) * (1.0 - g))) *
                (p_max + g / (1.0 - g));
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

AttackMetrics attack_metrics(double natural_reward, double natural_cost,
                             double attacked_reward, double attacked_cost) {
  AttackMetrics out;
  out.j_effect = attacked_cost - natural_cost;
  out.j_stealth = attacked_reward - natural_reward;
  out.effective = out.j_effect > 0.0;
  out.stealthy = out.j_stealth >= 0.0;
  return out;
}

}  // namespace saferl::tabular
