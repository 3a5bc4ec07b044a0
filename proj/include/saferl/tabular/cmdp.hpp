#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace saferl::tabular {

enum class Objective { kReward, kCost };

// Finite constrained MDP. Tensors are dense, row-major over (s, a, s').
// Costs live in [0, c_max]; rewards are unrestricted reals.
struct TabularCmdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // P[s][a][s']
  std::vector<double> reward;      // r(s, a, s')
  std::vector<double> cost;        // c(s, a, s')
  double gamma = 0.9;
  std::vector<double> mu0;         // initial state distribution
  double kappa = 0.0;              // episodic cost budget
  double c_max = 1.0;

  std::size_t idx(int s, int a, int sp) const {
    return (static_cast<std::size_t>(s) * n_actions + a) * n_states + sp;
  }
  double p(int s, int a, int sp) const { return transition[idx(s, a, sp)]; }
  double r(int s, int a, int sp) const { return reward[idx(s, a, sp)]; }
  double c(int s, int a, int sp) const { return cost[idx(s, a, sp)]; }

  const std::vector<double>& tensor(Objective f) const {
    return f == Objective::kReward ? reward : cost;
  }

  // Throws InputError on shape mismatches, transition rows that do not sum
  // to one, costs outside [0, c_max], or mu0 not being a distribution.
  void validate() const;

  nlohmann::json to_json() const;
  static TabularCmdp from_json(const nlohmann::json& j);
};

// Stationary stochastic policy, probs[s][a] row-major.
struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  double prob(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * n_actions + a];
  }
  void validate() const;
  static TabularPolicy uniform(int n_states, int n_actions);
  // Deterministic policy taking actions[s] with probability one.
  static TabularPolicy deterministic(int n_states, int n_actions,
                                     const std::vector<int>& actions);

  nlohmann::json to_json() const;
  static TabularPolicy from_json(const nlohmann::json& j);
};

// Trajectory-wise mixture: one component is drawn per episode and followed
// throughout. Values are therefore weight-convex combinations of component
// values.
struct MixedPolicy {
  std::vector<TabularPolicy> components;
  std::vector<double> weights;

  void validate() const;
};

// Per-state perturbation sets. ball[s] lists the states the adversary may
// show when the true state is s; always contains s itself.
using StateBall = std::vector<std::vector<int>>;

void validate_ball(const StateBall& ball, int n_states);

// Deterministic observation adversary: the victim sees mapping[s] in state s.
struct TabularAdversary {
  std::vector<int> mapping;
  StateBall ball;

  static TabularAdversary identity(int n_states);
  void validate(int n_states) const;
};

// Distances between states, used to measure policy smoothness and ball radii.
struct StateMetric {
  int n_states = 0;
  std::vector<double> dist;  // row-major

  double operator()(int i, int j) const {
    return dist[static_cast<std::size_t>(i) * n_states + j];
  }
  // dist(i, j) = |i - j|
  static StateMetric index_distance(int n_states);
};

}  // namespace saferl::tabular
