#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "saferl/attack/attackers.hpp"
#include "saferl/nn/gaussian_policy.hpp"
#include "saferl/util/errors.hpp"
#include "saferl/util/rng.hpp"

using namespace saferl;
using attack::AttackConfig;
using attack::Corruption;

namespace {

// Policy whose mean is an affine map; a single-layer net has no rectifier,
// so the map is exact.
nn::GaussianPolicy affine_policy(const std::vector<std::vector<double>>& rows,
                                 const std::vector<double>& bias,
                                 double log_std = 0.0) {
  const int out = static_cast<int>(rows.size());
  const int in = static_cast<int>(rows[0].size());
  nn::GaussianPolicy pi;
  pi.mean_net = nn::Mlp::zeros({in, out});
  for (int i = 0; i < out; ++i) {
    for (int j = 0; j < in; ++j) pi.mean_net.weights[0][i * in + j] = rows[i][j];
  }
  pi.mean_net.biases[0] = bias;
  pi.log_std.assign(out, log_std);
  return pi;
}

nn::GaussianPolicy identity_policy(int n) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) rows[i][i] = 1.0;
  return affine_policy(rows, std::vector<double>(n, 0.0));
}

struct QuadraticQ : attack::QFunction {
  std::vector<double> target;
  explicit QuadraticQ(std::vector<double> t) : target(std::move(t)) {}
  double value(std::span<const double>,
               std::span<const double> action) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < action.size(); ++i) {
      const double d = action[i] - target[i];
      s -= d * d;
    }
    return s;
  }
  void action_grad(std::span<const double>, std::span<const double> action,
                   std::vector<double>& grad) const override {
    grad.resize(action.size());
    for (std::size_t i = 0; i < action.size(); ++i) {
      grad[i] = -2.0 * (action[i] - target[i]);
    }
  }
};

struct ConstantQ : attack::QFunction {
  double c;
  explicit ConstantQ(double v) : c(v) {}
  double value(std::span<const double>, std::span<const double>) const override {
    return c;
  }
  void action_grad(std::span<const double>, std::span<const double> action,
                   std::vector<double>& grad) const override {
    grad.assign(action.size(), 0.0);
  }
};

struct NanGradQ : attack::QFunction {
  double value(std::span<const double>, std::span<const double>) const override {
    return 0.0;
  }
  void action_grad(std::span<const double>, std::span<const double> action,
                   std::vector<double>& grad) const override {
    grad.assign(action.size(), std::numeric_limits<double>::quiet_NaN());
  }
};

// Reads the state's first coordinate as its value.
struct FirstCoordValue : attack::StateValue {
  double value(std::span<const double> obs) const override { return obs[0]; }
};

bool in_ball(const Corruption& c, double eps) {
  for (std::size_t i = 0; i < c.original.size(); ++i) {
    if (std::abs(c.corrupted[i] - c.original[i]) > eps + 1e-12) return false;
  }
  return true;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("attack config rejects out-of-range fields") {
  AttackConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  AttackConfig bad = cfg;
  bad.epsilon = -0.1;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = cfg;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = cfg;
  bad.amad_xi = 1.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = cfg;
  bad.mix_weight = -0.25;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = cfg;
  bad.sgld_beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("random attack with zero radius returns the observation") {
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  Rng rng(5);
  const std::vector<double> obs = {0.4, -1.2, 3.0};
  const Corruption c = attack::random_attack(obs, cfg, rng);
  CHECK(same_bits(c.corrupted, obs));
  CHECK_FALSE(c.failed);
}

TEST_CASE("random attack draws stay in the ball and center on the state") {
  AttackConfig cfg;
  cfg.epsilon = 0.2;
  Rng rng(7);
  const std::vector<double> obs = {1.0, -0.5};
  const int n = 100000;
  std::vector<double> acc(2, 0.0);
  for (int i = 0; i < n; ++i) {
    const Corruption c = attack::random_attack(obs, cfg, rng);
    REQUIRE(in_ball(c, cfg.epsilon));
    acc[0] += c.corrupted[0];
    acc[1] += c.corrupted[1];
  }
  // Per-coordinate std of a uniform draw on [-eps, eps] is eps/sqrt(3).
  const double se = cfg.epsilon / std::sqrt(3.0 * n);
  CHECK(std::abs(acc[0] / n - obs[0]) <= 4.0 * se);
  CHECK(std::abs(acc[1] / n - obs[1]) <= 4.0 * se);
}

TEST_CASE("value gradient attack with zero radius is the identity") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const QuadraticQ q({5.0, 5.0});
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  cfg.steps = 200;
  const std::vector<double> obs = {0.1, -0.1};
  const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
  CHECK(same_bits(c.corrupted, obs));
  CHECK(c.iterations == 0);
}

TEST_CASE("value gradient attack solves the box-constrained quadratic") {
  const nn::GaussianPolicy pi = identity_policy(3);
  AttackConfig cfg;
  cfg.epsilon = 0.5;
  const std::vector<double> obs = {0.0, 1.0, -1.0};

  SUBCASE("optimum outside the ball clamps to the nearest face") {
    const QuadraticQ q({3.0, -2.0, -1.1});
    const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
    REQUIRE(in_ball(c, cfg.epsilon));
    CHECK(c.corrupted[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.corrupted[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.corrupted[2] == doctest::Approx(-1.1).epsilon(2e-3));
  }

  SUBCASE("interior optimum is reached to early-stop precision") {
    const QuadraticQ q({0.3, 0.8, -1.2});
    const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
    CHECK(c.corrupted[0] == doctest::Approx(0.3).epsilon(2e-3));
    CHECK(c.corrupted[1] == doctest::Approx(0.8).epsilon(2e-3));
    CHECK(c.corrupted[2] == doctest::Approx(-1.2).epsilon(2e-3));
    CHECK(c.iterations < cfg.steps);
  }
}

TEST_CASE("objective trace is non-decreasing on a concave objective") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const QuadraticQ q({2.0, -2.0});
  AttackConfig cfg;
  cfg.epsilon = 0.4;
  const std::vector<double> obs = {0.0, 0.0};
  const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
  REQUIRE(c.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < c.objective_trace.size(); ++i) {
    CHECK(c.objective_trace[i] >= c.objective_trace[i - 1] - 1e-12);
  }
}

TEST_CASE("constant objective stops after one probe step") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const ConstantQ q(3.5);
  AttackConfig cfg;
  cfg.epsilon = 0.3;
  cfg.steps = 200;
  const std::vector<double> obs = {1.0, 2.0};
  const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
  CHECK(c.iterations == 1);
  REQUIRE(c.objective_trace.size() == 2);
  CHECK(c.objective_trace[0] == 3.5);
  CHECK(c.objective_trace[1] == 3.5);
  CHECK(same_bits(c.corrupted, obs));
}

TEST_CASE("non-finite gradients flag failure and return the original") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const NanGradQ q;
  AttackConfig cfg;
  cfg.epsilon = 0.3;
  const std::vector<double> obs = {0.5, -0.5};
  const Corruption c = attack::mc_mr_attack(obs, pi, q, cfg);
  CHECK(c.failed);
  CHECK(same_bits(c.corrupted, obs));
}

TEST_CASE("reward descent lands on the corner farthest from the peak") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const QuadraticQ q({0.1, -0.2});
  AttackConfig cfg;
  cfg.epsilon = 0.5;
  const std::vector<double> obs = {0.0, 0.0};
  const Corruption c = attack::min_reward_attack(obs, pi, q, cfg);
  REQUIRE(in_ball(c, cfg.epsilon));
  CHECK(c.corrupted[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(c.corrupted[1] == doctest::Approx(0.5).epsilon(1e-12));
  // Descent means the trace is non-increasing here.
  for (std::size_t i = 1; i < c.objective_trace.size(); ++i) {
    CHECK(c.objective_trace[i] <= c.objective_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("divergence attack with zero radius is the identity") {
  const nn::GaussianPolicy pi = affine_policy({{2.0}}, {0.0});
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  cfg.steps = 60;
  Rng rng(11);
  const std::vector<double> obs = {0.7};
  const Corruption c = attack::mad_attack(obs, pi, cfg, rng);
  CHECK(same_bits(c.corrupted, obs));
}

TEST_CASE("state-independent policy yields a flat zero divergence trace") {
  const nn::GaussianPolicy pi = affine_policy(
      {{0.0, 0.0}, {0.0, 0.0}}, {0.3, -0.7});
  AttackConfig cfg;
  cfg.epsilon = 0.25;
  cfg.steps = 60;
  Rng rng(13);
  const std::vector<double> obs = {1.0, -1.0};
  const Corruption c = attack::mad_attack(obs, pi, cfg, rng);
  REQUIRE(in_ball(c, cfg.epsilon));
  for (double v : c.objective_trace) CHECK(v == 0.0);
}

TEST_CASE("noiseless divergence ascent reaches a ball face in one dimension") {
  const nn::GaussianPolicy pi = affine_policy({{2.0}}, {0.1});
  AttackConfig cfg;
  cfg.epsilon = 0.3;
  cfg.steps = 60;
  cfg.sgld_beta = 1e300;
  const std::vector<double> obs = {0.4};
  Rng rng(17);
  const Corruption c = attack::mad_attack(obs, pi, cfg, rng);
  REQUIRE(in_ball(c, cfg.epsilon));
  CHECK(std::abs(c.corrupted[0] - obs[0]) == doctest::Approx(cfg.epsilon));

  // Grid search over the interval confirms the boundary is the maximizer.
  std::vector<double> mu0, mu;
  pi.mean(obs, mu0);
  const std::vector<double> sigma = pi.std();
  double best = -1.0;
  for (int i = 0; i <= 10000; ++i) {
    const double s = obs[0] - cfg.epsilon + 2.0 * cfg.epsilon * i / 10000.0;
    pi.mean(std::vector<double>{s}, mu);
    best = std::max(best, nn::gaussian_kl(mu0, sigma, mu, sigma));
  }
  pi.mean(c.corrupted, mu);
  CHECK(nn::gaussian_kl(mu0, sigma, mu, sigma) >= best - 1e-6);
}

TEST_CASE("divergence attack is seed-reproducible and noise responds to beta") {
  const nn::GaussianPolicy pi = affine_policy({{1.5, -0.5}}, {0.2});
  AttackConfig cfg;
  cfg.epsilon = 0.2;
  cfg.steps = 60;
  const std::vector<double> obs = {0.1, 0.9};
  Rng a(23), b(23), c(24);
  const Corruption ca = attack::mad_attack(obs, pi, cfg, a);
  const Corruption cb = attack::mad_attack(obs, pi, cfg, b);
  const Corruption cc = attack::mad_attack(obs, pi, cfg, c);
  CHECK(same_bits(ca.corrupted, cb.corrupted));
  CHECK_FALSE(same_bits(ca.corrupted, cc.corrupted));
}

TEST_CASE("high-risk gate attacks exactly the top fraction") {
  const nn::GaussianPolicy pi = identity_policy(1);
  const FirstCoordValue v;
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  cfg.steps = 10;
  std::vector<std::vector<double>> batch;
  for (int i = 0; i < 10; ++i) batch.push_back({static_cast<double>(i)});

  SUBCASE("xi 0.1 on ten distinct values hits only the maximum") {
    cfg.amad_xi = 0.1;
    Rng rng(29);
    const auto out = attack::amad_attack(batch, pi, v, cfg, rng);
    REQUIRE(out.size() == 10);
    for (int i = 0; i < 9; ++i) {
      CHECK(out[i].iterations == 0);
      CHECK(same_bits(out[i].corrupted, batch[i]));
    }
    CHECK(out[9].iterations >= 1);
  }

  SUBCASE("xi 0 attacks nothing") {
    cfg.amad_xi = 0.0;
    Rng rng(31);
    const auto out = attack::amad_attack(batch, pi, v, cfg, rng);
    for (const auto& c : out) {
      CHECK(c.iterations == 0);
      CHECK(same_bits(c.corrupted, c.original));
    }
  }

  SUBCASE("xi 1 attacks everything") {
    cfg.amad_xi = 1.0;
    Rng rng(37);
    const auto out = attack::amad_attack(batch, pi, v, cfg, rng);
    for (const auto& c : out) CHECK(c.iterations >= 1);
  }

  SUBCASE("attacked count matches the percentile rule on a larger batch") {
    std::vector<std::vector<double>> big;
    Rng gen(41);
    for (int i = 0; i < 40; ++i) big.push_back({gen.uniform(-5.0, 5.0)});
    cfg.amad_xi = 0.3;
    Rng rng(43);
    const auto out = attack::amad_attack(big, pi, v, cfg, rng);
    int attacked = 0;
    for (const auto& c : out) attacked += c.iterations >= 1 ? 1 : 0;
    CHECK(attacked == 12);

    // Independent sort-based oracle for the attacked set.
    std::vector<double> values;
    for (const auto& s : big) values.push_back(s[0]);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = sorted[28];
    for (std::size_t i = 0; i < big.size(); ++i) {
      CHECK((out[i].iterations >= 1) == (values[i] >= threshold));
    }
  }
}

TEST_CASE("gating one state does not shift another state's stream") {
  const nn::GaussianPolicy pi = identity_policy(1);
  const FirstCoordValue v;
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  cfg.steps = 10;
  cfg.amad_xi = 0.5;
  const std::vector<std::vector<double>> batch_a = {{10.0}, {1.0}};
  const std::vector<std::vector<double>> batch_b = {{10.0}, {2.0}};
  Rng ra(47), rb(47);
  const auto out_a = attack::amad_attack(batch_a, pi, v, cfg, ra);
  const auto out_b = attack::amad_attack(batch_b, pi, v, cfg, rb);
  REQUIRE(out_a[0].iterations >= 1);
  REQUIRE(out_b[0].iterations >= 1);
  CHECK(same_bits(out_a[0].corrupted, out_b[0].corrupted));
}

TEST_CASE("empty batch is rejected") {
  const nn::GaussianPolicy pi = identity_policy(1);
  const FirstCoordValue v;
  AttackConfig cfg;
  Rng rng(53);
  CHECK_THROWS_AS(attack::amad_attack({}, pi, v, cfg, rng), InputError);
}

TEST_CASE("mixed attack endpoints reproduce the single-critic attacks") {
  const nn::GaussianPolicy pi = identity_policy(2);
  const QuadraticQ q_r({1.5, 0.0});
  const QuadraticQ q_c({-1.5, 0.5});
  AttackConfig cfg;
  cfg.epsilon = 0.4;
  const std::vector<double> obs = {0.0, 0.0};

  cfg.mix_weight = 1.0;
  const Corruption mixed_c = attack::mixed_attack(obs, pi, q_r, q_c, cfg);
  const Corruption pure_c = attack::mc_mr_attack(obs, pi, q_c, cfg);
  CHECK(same_bits(mixed_c.corrupted, pure_c.corrupted));
  CHECK(mixed_c.objective_trace == pure_c.objective_trace);

  cfg.mix_weight = 0.0;
  const Corruption mixed_r = attack::mixed_attack(obs, pi, q_r, q_c, cfg);
  const Corruption pure_r = attack::mc_mr_attack(obs, pi, q_r, cfg);
  CHECK(same_bits(mixed_r.corrupted, pure_r.corrupted));
}

TEST_CASE("balanced mix solves the averaged quadratic") {
  const nn::GaussianPolicy pi = identity_policy(2);
  // Averaged target is (1.1, -0.9), outside the 0.5 ball on both axes.
  const QuadraticQ q_r({1.4, -1.0});
  const QuadraticQ q_c({0.8, -0.8});
  AttackConfig cfg;
  cfg.epsilon = 0.5;
  cfg.mix_weight = 0.5;
  const std::vector<double> obs = {0.0, 0.0};
  const Corruption c = attack::mixed_attack(obs, pi, q_r, q_c, cfg);
  REQUIRE(in_ball(c, cfg.epsilon));
  CHECK(c.corrupted[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.corrupted[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("mlp adapters agree with direct forward and finite differences") {
  Rng rng(59);
  nn::Mlp qnet = nn::Mlp::create({5, 8, 1}, rng);
  const attack::MlpQAdapter q(qnet, 3);
  const std::vector<double> obs = {0.2, -0.3, 0.5};
  const std::vector<double> action = {0.1, -0.6};

  std::vector<double> input = obs;
  input.insert(input.end(), action.begin(), action.end());
  std::vector<double> direct;
  nn::forward(qnet, input, direct);
  CHECK(q.value(obs, action) == direct[0]);

  std::vector<double> grad;
  q.action_grad(obs, action, grad);
  REQUIRE(grad.size() == 2);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> up = action, dn = action;
    up[i] += h;
    dn[i] -= h;
    const double fd = (q.value(obs, up) - q.value(obs, dn)) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
  }

  nn::Mlp vnet = nn::Mlp::create({3, 6, 1}, rng);
  const attack::MlpValueAdapter adapter(vnet);
  std::vector<double> vout;
  nn::forward(vnet, obs, vout);
  CHECK(adapter.value(obs) == vout[0]);

  CHECK_THROWS_AS(attack::MlpQAdapter(vnet, 3), InputError);
}

TEST_CASE("attacker names round trip and unknown names are rejected") {
  using attack::AttackKind;
  const std::vector<AttackKind> kinds = {
      AttackKind::kNone,  AttackKind::kRandom, AttackKind::kMad,
      AttackKind::kAmad,  AttackKind::kMc,     AttackKind::kMr,
      AttackKind::kMixed, AttackKind::kMinReward};
  for (AttackKind k : kinds) {
    CHECK(attack::attack_kind_from_string(attack::to_string(k)) == k);
  }
  CHECK_THROWS_AS(attack::attack_kind_from_string("gradient"), InputError);
}
