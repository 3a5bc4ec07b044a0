#include "saferl/tabular/cmdp.hpp"

#include <cmath>
#include <cstdlib>

#include "saferl/util/errors.hpp"

namespace saferl::tabular {

namespace {

constexpr double kDistTol = 1e-9;

void check_distribution(const std::vector<double>& p, std::size_t offset,
                        std::size_t n, const char* what) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = p[offset + i];
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError(std::string(what) + ": negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kDistTol) {
    throw InputError(std::string(what) + ": entries sum to " +
                     std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

void TabularCmdp::validate() const {
  if (n_states <= 0 || n_actions <= 0) {
    throw InputError("cmdp: state and action counts must be positive");
  }
  const std::size_t nsas = static_cast<std::size_t>(n_states) * n_actions *
                           n_states;
  if (transition.size() != nsas || reward.size() != nsas ||
      cost.size() != nsas) {
    throw InputError("cmdp: tensor shapes do not match (S, A, S)");
  }
  if (mu0.size() != static_cast<std::size_t>(n_states)) {
    throw InputError("cmdp: mu0 length does not match state count");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InputError("cmdp: gamma must lie in (0, 1)");
  }
  if (!(c_max > 0.0) || !std::isfinite(c_max)) {
    throw InputError("cmdp: c_max must be positive and finite");
  }
  if (!std::isfinite(kappa)) {
    throw InputError("cmdp: kappa must be finite");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      check_distribution(transition, idx(s, a, 0), n_states,
                         "cmdp transition row");
    }
  }
  for (std::size_t i = 0; i < nsas; ++i) {
    if (!std::isfinite(reward[i])) {
      throw InputError("cmdp: non-finite reward entry");
    }
    const double c = cost[i];
    if (!(c >= 0.0) || c > c_max + kDistTol || !std::isfinite(c)) {
      throw InputError("cmdp: cost entry outside [0, c_max]");
    }
  }
  check_distribution(mu0, 0, mu0.size(), "cmdp mu0");
}

nlohmann::json TabularCmdp::to_json() const {
  return nlohmann::json{
      {"n_states", n_states}, {"n_actions", n_actions},
      {"gamma", gamma},       {"kappa", kappa},
      {"c_max", c_max},       {"mu0", mu0},
      {"transition", transition},
      {"reward", reward},     {"cost", cost},
  };
}

TabularCmdp TabularCmdp::from_json(const nlohmann::json& j) {
  TabularCmdp m;
  try {
    m.n_states = j.at("n_states").get<int>();
    m.n_actions = j.at("n_actions").get<int>();
    m.gamma = j.at("gamma").get<double>();
    m.kappa = j.at("kappa").get<double>();
    m.c_max = j.at("c_max").get<double>();
    m.mu0 = j.at("mu0").get<std::vector<double>>();
    m.transition = j.at("transition").get<std::vector<double>>();
    m.reward = j.at("reward").get<std::vector<double>>();
    m.cost = j.at("cost").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cmdp json: ") + e.what());
  }
  m.validate();
  return m;
}

void TabularPolicy::validate() const {
  if (n_states <= 0 || n_actions <= 0 ||
      probs.size() != static_cast<std::size_t>(n_states) * n_actions) {
    throw InputError("policy: shape mismatch");
  }
  for (int s = 0; s < n_states; ++s) {
    check_distribution(probs, static_cast<std::size_t>(s) * n_actions,
                       n_actions, "policy row");
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.assign(static_cast<std::size_t>(n_states) * n_actions,
                  1.0 / n_actions);
  return pi;
}

TabularPolicy TabularPolicy::deterministic(int n_states, int n_actions,
                                           const std::vector<int>& actions) {
  if (actions.size() != static_cast<std::size_t>(n_states)) {
    throw InputError("deterministic policy: one action per state required");
  }
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.probs.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  for (int s = 0; s < n_states; ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions) {
      throw InputError("deterministic policy: action index out of range");
    }
    pi.probs[static_cast<std::size_t>(s) * n_actions + actions[s]] = 1.0;
  }
  return pi;
}

nlohmann::json TabularPolicy::to_json() const {
  return nlohmann::json{{"n_states", n_states},
                        {"n_actions", n_actions},
                        {"probs", probs}};
}

TabularPolicy TabularPolicy::from_json(const nlohmann::json& j) {
  TabularPolicy pi;
  try {
    pi.n_states = j.at("n_states").get<int>();
    pi.n_actions = j.at("n_actions").get<int>();
    pi.probs = j.at("probs").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("policy json: ") + e.what());
  }
  pi.validate();
  return pi;
}

void MixedPolicy::validate() const {
  if (components.empty() || components.size() != weights.size()) {
    throw InputError("mixed policy: component/weight mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InputError("mixed policy: negative weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kDistTol) {
    throw InputError("mixed policy: weights must sum to one");
  }
  for (const auto& c : components) c.validate();
}

void validate_ball(const StateBall& ball, int n_states) {
  if (ball.size() != static_cast<std::size_t>(n_states)) {
    throw InputError("ball: one member set per state required");
  }
  for (int s = 0; s < n_states; ++s) {
    if (ball[s].empty()) throw InputError("ball: empty perturbation set");
    bool has_self = false;
    for (int m : ball[s]) {
      if (m < 0 || m >= n_states) {
        throw InputError("ball: member index out of range");
      }
      if (m == s) has_self = true;
    }
    if (!has_self) throw InputError("ball: set must contain the true state");
  }
}

TabularAdversary TabularAdversary::identity(int n_states) {
  TabularAdversary nu;
  nu.mapping.resize(n_states);
  nu.ball.resize(n_states);
  for (int s = 0; s < n_states; ++s) {
    nu.mapping[s] = s;
    nu.ball[s] = {s};
  }
  return nu;
}

void TabularAdversary::validate(int n_states) const {
  if (mapping.size() != static_cast<std::size_t>(n_states)) {
    throw InputError("adversary: mapping length mismatch");
  }
  validate_ball(ball, n_states);
  for (int s = 0; s < n_states; ++s) {
    bool in_ball = false;
    for (int m : ball[s]) in_ball |= (m == mapping[s]);
    if (!in_ball) {
      throw InputError("adversary: mapping leaves the perturbation set");
    }
  }
}

StateMetric StateMetric::index_distance(int n_states) {
  StateMetric m;
  m.n_states = n_states;
  m.dist.resize(static_cast<std::size_t>(n_states) * n_states);
  for (int i = 0; i < n_states; ++i) {
    for (int j = 0; j < n_states; ++j) {
      m.dist[static_cast<std::size_t>(i) * n_states + j] =
          std::abs(i - j);
    }
  }
  return m;
}

}  // namespace saferl::tabular
