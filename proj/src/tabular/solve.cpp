#include "saferl/tabular/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saferl/util/errors.hpp"
#include "detail.hpp"

namespace saferl::tabular {

namespace detail {

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * n + col]);
    for (int row = col + 1; row < n; ++row) {
      const double cand = std::abs(a[static_cast<std::size_t>(row) * n + col]);
      if (cand > best) {
        best = cand;
        pivot = row;
      }
    }
    if (best < 1e-300) throw FaultError("solve_dense: singular matrix");
    if (pivot != col) {
      for (int k = col; k < n; ++k) {
        std::swap(a[static_cast<std::size_t>(col) * n + k],
                  a[static_cast<std::size_t>(pivot) * n + k]);
      }
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[static_cast<std::size_t>(col) * n + col];
    for (int row = col + 1; row < n; ++row) {
      const double factor = a[static_cast<std::size_t>(row) * n + col] * inv;
      if (factor == 0.0) continue;
      for (int k = col; k < n; ++k) {
        a[static_cast<std::size_t>(row) * n + k] -=
            factor * a[static_cast<std::size_t>(col) * n + k];
      }
      b[row] -= factor * b[col];
    }
  }
  std::vector<double> x(n);
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int k = row + 1; k < n; ++k) {
      acc -= a[static_cast<std::size_t>(row) * n + k] * x[k];
    }
    x[row] = acc / a[static_cast<std::size_t>(row) * n + row];
  }
  return x;
}

std::vector<double> exact_values(const TabularCmdp& m, const TabularPolicy& pi,
                                 const TabularAdversary& nu, Objective f) {
  const int n = m.n_states;
  const auto& tensor = m.tensor(f);
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> b(n, 0.0);
  for (int s = 0; s < n; ++s) {
    a[static_cast<std::size_t>(s) * n + s] = 1.0;
    const int shown = nu.mapping[s];
    for (int act = 0; act < m.n_actions; ++act) {
      const double pa = pi.prob(shown, act);
      if (pa == 0.0) continue;
      for (int sp = 0; sp < n; ++sp) {
        const double w = pa * m.p(s, act, sp);
        a[static_cast<std::size_t>(s) * n + sp] -= m.gamma * w;
        b[s] += w * tensor[m.idx(s, act, sp)];
      }
    }
  }
  return solve_dense(std::move(a), std::move(b), n);
}

}  // namespace detail

namespace {

struct PolicyPoint {
  double cost = 0.0;
  double ret = 0.0;
  std::vector<int> actions;
};

// Evaluates every deterministic policy at mu0 by exact linear solves.
std::vector<PolicyPoint> enumerate_points(const TabularCmdp& m,
                                          double budget) {
  double combos = 1.0;
  for (int s = 0; s < m.n_states; ++s) {
    combos *= static_cast<double>(m.n_actions);
    if (combos > budget) {
      throw SizeError("policy enumeration exceeds budget");
    }
  }
  const auto identity = TabularAdversary::identity(m.n_states);
  std::vector<PolicyPoint> points;
  points.reserve(static_cast<std::size_t>(combos));
  std::vector<int> actions(m.n_states, 0);
  while (true) {
    const auto pi =
        TabularPolicy::deterministic(m.n_states, m.n_actions, actions);
    PolicyPoint pt;
    pt.actions = actions;
    pt.ret = 0.0;
    const auto v_r = detail::exact_values(m, pi, identity, Objective::kReward);
    const auto v_c = detail::exact_values(m, pi, identity, Objective::kCost);
    for (int s = 0; s < m.n_states; ++s) {
      pt.ret += m.mu0[s] * v_r[s];
      pt.cost += m.mu0[s] * v_c[s];
    }
    points.push_back(std::move(pt));
    int s = 0;
    for (; s < m.n_states; ++s) {
      if (++actions[s] < m.n_actions) break;
      actions[s] = 0;
    }
    if (s == m.n_states) break;
  }
  return points;
}

double cross(const PolicyPoint& o, const PolicyPoint& a,
             const PolicyPoint& b) {
  return (a.cost - o.cost) * (b.ret - o.ret) -
         (a.ret - o.ret) * (b.cost - o.cost);
}

// Upper concave envelope of the (cost, return) cloud, costs ascending.
std::vector<PolicyPoint> upper_hull(std::vector<PolicyPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) {
    if (l.cost != r.cost) return l.cost < r.cost;
    return l.ret > r.ret;
  });
  // Keep only the best return per cost value.
  std::vector<PolicyPoint> dedup;
  for (auto& p : pts) {
    if (!dedup.empty() && p.cost == dedup.back().cost) continue;
    dedup.push_back(std::move(p));
  }
  std::vector<PolicyPoint> hull;
  for (auto& p : dedup) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull.back(), p) >= 0.0) {
      hull.pop_back();
    }
    hull.push_back(std::move(p));
  }
  return hull;
}

ConstrainedOptimum pure_optimum(const TabularCmdp& m, const PolicyPoint& pt) {
  ConstrainedOptimum out;
  out.policy.components.push_back(
      TabularPolicy::deterministic(m.n_states, m.n_actions, pt.actions));
  out.policy.weights.push_back(1.0);
  out.v_r = pt.ret;
  out.v_c = pt.cost;
  return out;
}

}  // namespace

ConstrainedOptimum solve_constrained_optimum(const TabularCmdp& m,
                                             double budget) {
  const auto points = enumerate_points(m, budget);

  const PolicyPoint* best_feasible = nullptr;
  const PolicyPoint* best_overall = nullptr;
  for (const auto& pt : points) {
    if (!best_overall || pt.ret > best_overall->ret) best_overall = &pt;
    if (pt.cost <= m.kappa &&
        (!best_feasible || pt.ret > best_feasible->ret)) {
      best_feasible = &pt;
    }
  }
  if (!best_feasible) {
    throw InfeasibleError(
        "no deterministic policy meets the cost budget on this instance");
  }
  // Budget slack at the unconstrained optimum: nothing to trade away.
  if (best_overall->ret <= best_feasible->ret) {
    return pure_optimum(m, *best_feasible);
  }

  // The return-best mixture subject to the budget lies on the upper concave
  // envelope of the deterministic cloud, on the edge crossing the budget.
  const auto hull = upper_hull(points);
  const PolicyPoint* peak = &hull.front();
  for (const auto& p : hull) {
    if (p.ret > peak->ret) peak = &p;
  }
  if (peak->cost <= m.kappa) {
    return pure_optimum(m, *peak);
  }
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const PolicyPoint& lo = hull[i];
    const PolicyPoint& hi = hull[i + 1];
    if (lo.cost <= m.kappa && m.kappa < hi.cost && hi.ret > lo.ret) {
      const double alpha = (m.kappa - lo.cost) / (hi.cost - lo.cost);
      ConstrainedOptimum out;
      out.policy.components.push_back(
          TabularPolicy::deterministic(m.n_states, m.n_actions, lo.actions));
      out.policy.components.push_back(
          TabularPolicy::deterministic(m.n_states, m.n_actions, hi.actions));
      out.policy.weights = {1.0 - alpha, alpha};
      out.v_r = lo.ret + alpha * (hi.ret - lo.ret);
      out.v_c = lo.cost + alpha * (hi.cost - lo.cost);
      return out;
    }
  }
  // The envelope never rises past the budget, so the best feasible hull
  // vertex is optimal.
  const PolicyPoint* best_vertex = nullptr;
  for (const auto& p : hull) {
    if (p.cost <= m.kappa && (!best_vertex || p.ret > best_vertex->ret)) {
      best_vertex = &p;
    }
  }
  return pure_optimum(m, best_vertex ? *best_vertex : *best_feasible);
}

TemptationResult classify_temptation(const TabularCmdp& m, double budget) {
  const auto points = enumerate_points(m, budget);
  const auto opt = solve_constrained_optimum(m, budget);

  // Mixtures cannot beat the best component, so the unconstrained optimum
  // over mixtures is attained by a deterministic policy. Ties prefer the
  // cheapest witness.
  const PolicyPoint* top = nullptr;
  for (const auto& pt : points) {
    if (!top || pt.ret > top->ret ||
        (pt.ret == top->ret && pt.cost < top->cost)) {
      top = &pt;
    }
  }

  TemptationResult out;
  out.constrained_v_r = opt.v_r;
  out.constrained_v_c = opt.v_c;
  if (top->ret > opt.v_r + 1e-9) {
    out.status = Temptation::kTempting;
    out.witness =
        TabularPolicy::deterministic(m.n_states, m.n_actions, top->actions);
    out.witness_v_r = top->ret;
    out.witness_v_c = top->cost;
    if (top->cost <= m.kappa + 1e-12) {
      throw FaultError(
          "temptation witness is feasible; enumeration is inconsistent");
    }
  }
  return out;
}

}  // namespace saferl::tabular
