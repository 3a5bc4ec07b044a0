#pragma once

#include <cstdint>
#include <vector>

#include "saferl/tabular/cmdp.hpp"

namespace saferl::tabular {

// ---------------------------------------------------------------------------
// Policy evaluation under a fixed observation adversary.
//
// The victim acts on the corrupted observation while the world transitions
// from the true state: T_pi V(s) = sum_a pi(a | nu(s)) sum_s' P(s'|s,a)
// (f(s,a,s') + gamma V(s')).
// ---------------------------------------------------------------------------

std::vector<double> bellman_policy_op(const std::vector<double>& v,
                                      const TabularCmdp& m,
                                      const TabularPolicy& pi,
                                      const TabularAdversary& nu,
                                      Objective f);

struct ValuePair {
  std::vector<double> v_r;
  std::vector<double> v_c;
};

// Fixed points of the policy operator for both objectives, by value
// iteration to sup-norm residual below tol.
ValuePair evaluate_policy(const TabularCmdp& m, const TabularPolicy& pi,
                          const TabularAdversary& nu, double tol = 1e-10);

// mu0-weighted scalar value.
double weighted_value(const std::vector<double>& v,
                      const std::vector<double>& mu0);

// Mixture values are weight-convex combinations of component values.
ValuePair evaluate_mixed_policy(const TabularCmdp& m, const MixedPolicy& pi,
                                const TabularAdversary& nu,
                                double tol = 1e-10);

// ---------------------------------------------------------------------------
// Optimal adversaries. The adversary operator maximizes over the ball:
// T* V(s) = max_{s~ in B(s)} sum_a pi(a | s~) sum_s' P(s'|s,a)
// (f(s,a,s') + gamma V(s')). Its fixed point is the value of the strongest
// deterministic observation attack for the given objective.
// ---------------------------------------------------------------------------

std::vector<double> bellman_adversary_op(const std::vector<double>& v,
                                         const TabularCmdp& m,
                                         const TabularPolicy& pi,
                                         const StateBall& ball, Objective f);

struct AdversarySolution {
  TabularAdversary adversary;     // greedy argmax, ties to lowest index
  std::vector<double> values;     // fixed point of the adversary operator
  double objective_value = 0.0;   // mu0-weighted
};

AdversarySolution optimal_adversary(const TabularCmdp& m,
                                    const TabularPolicy& pi,
                                    const StateBall& ball, Objective f,
                                    double tol = 1e-10);

// Enumerates every deterministic adversary over the ball (product of the
// member counts must stay within budget, else SizeError) and evaluates each
// with evaluate_policy. Ground truth for the fixed-point route.
struct BruteForceResult {
  TabularAdversary adversary;
  double objective_value = 0.0;
};

BruteForceResult brute_force_adversary(const TabularCmdp& m,
                                       const TabularPolicy& pi,
                                       const StateBall& ball, Objective f,
                                       double tol = 1e-10,
                                       double budget = 1e5);

// ---------------------------------------------------------------------------
// The adversary's problem as an MDP over corrupted observations. Actions are
// the shown states; rewards are flow-averaged over the victim's response,
// with a penalty driving out-of-ball choices away from the optimum.
// ---------------------------------------------------------------------------

struct AdversaryMdp {
  int n_states = 0;  // actions coincide with states
  std::vector<double> p_hat;  // [s][shown][s']
  std::vector<double> r_hat;  // [s][shown][s']
  double gamma = 0.9;
  double penalty = 0.0;
};

// Largest objective magnitude divided by (1 - gamma); any valid penalty must
// exceed it. The default penalty doubles it.
double penalty_floor(const TabularCmdp& m, Objective f);
double default_penalty(const TabularCmdp& m, Objective f);

AdversaryMdp build_adversary_mdp(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball, Objective f,
                                 double penalty_c);

struct AdversaryMdpSolution {
  std::vector<double> values;
  std::vector<int> greedy;  // optimal shown state per true state
  double objective_value = 0.0;
};

AdversaryMdpSolution solve_adversary_mdp(const AdversaryMdp& mdp,
                                         const std::vector<double>& mu0,
                                         double tol = 1e-10);

// ---------------------------------------------------------------------------
// Contraction diagnostics: max over sampled value pairs of
// ||T U - T V||_inf / ||U - V||_inf for the chosen operator.
// ---------------------------------------------------------------------------

enum class OpKind { kPolicy, kAdversaryReward, kAdversaryCost };

double check_contraction(const TabularCmdp& m, const TabularPolicy& pi,
                         const TabularAdversary& nu, OpKind kind,
                         int n_trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Smoothness-based safety bounds. L is measured as the largest total
// variation distance between policy rows across a ball, divided by the state
// distance; epsilon is the largest distance across a ball.
// ---------------------------------------------------------------------------

struct BoundInputs {
  double lipschitz_l = 0.0;
  double epsilon = 0.0;
  double p_s = 0.0;  // largest one-step mass into cost-bearing states
  std::vector<int> unsafe_states;
};

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  BoundInputs inputs;
};

// States that can carry cost: s' with c(s, a, s') > 0 for some (s, a).
std::vector<int> cost_support(const TabularCmdp& m);

// Worst one-step rise of the corrupted cost value at a single state against
// 2 L eps (p_s c_max + gamma c_max / (1 - gamma)).
BoundCheck verify_one_step_bound(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball, int state,
                                 const StateMetric& metric);

// Worst episodic corrupted cost of a feasible policy against
// kappa + 2 L eps c_max (1/(1-gamma) + 4 gamma L eps/(1-gamma)^2)
// (max_s p_s + gamma/(1-gamma)).
BoundCheck verify_episodic_bound(const TabularCmdp& m, const TabularPolicy& pi,
                                 const StateBall& ball,
                                 const StateMetric& metric);

// ---------------------------------------------------------------------------
// Attack quality relative to the natural values at mu0.
// ---------------------------------------------------------------------------

struct AttackMetrics {
  double j_effect = 0.0;   // attacked cost minus natural cost
  double j_stealth = 0.0;  // attacked reward minus natural reward
  bool effective = false;  // j_effect > 0
  bool stealthy = false;   // j_stealth >= 0
};

AttackMetrics attack_metrics(double natural_reward, double natural_cost,
                             double attacked_reward, double attacked_cost);

}  // namespace saferl::tabular
