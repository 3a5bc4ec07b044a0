#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "saferl/envs/point_env.hpp"
#include "saferl/eval/eval.hpp"
#include "saferl/nn/checkpoint.hpp"
#include "saferl/train/config.hpp"
#include "saferl/train/loops.hpp"
#include "saferl/util/errors.hpp"

namespace {

using namespace saferl;

nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path);
  return os;
}

envs::EnvSpec env_from_name(const std::string& name) {
  if (name == "run") return envs::EnvSpec::run_default();
  if (name == "circle") return envs::EnvSpec::circle_default();
  throw InputError("unknown environment " + name);
}

// The checkpoint records the training configuration; evaluation commands
// recover the environment and a display label from it unless overridden.
struct LoadedCheckpoint {
  train::PolicyBundle bundle;
  envs::EnvSpec env;
  std::string label = "policy";
  bool has_env = false;
};

LoadedCheckpoint load_checkpoint(const std::string& path,
                                 const std::string& env_override) {
  const nn::Checkpoint ck = nn::Checkpoint::load(path);
  LoadedCheckpoint out{train::load_bundle(ck), envs::EnvSpec{}, "policy",
                       false};
  if (!env_override.empty()) {
    out.env = env_from_name(env_override);
    out.has_env = true;
  }
  if (ck.metadata.contains("config")) {
    const train::RunConfig cfg =
        train::RunConfig::from_json(ck.metadata.at("config"));
    if (!out.has_env) {
      out.env = cfg.env;
      out.has_env = true;
    }
    switch (cfg.method) {
      case train::Method::kPpol:
        out.label = "ppol-vanilla";
        break;
      case train::Method::kAdvPpol:
        out.label = "adv-ppol-" + attack::to_string(cfg.attacker);
        break;
      case train::Method::kSaPpol:
        out.label = "sa-ppol-" + attack::to_string(cfg.attacker);
        break;
    }
  }
  if (!out.has_env) {
    throw InputError(
        "checkpoint carries no environment; pass --env run|circle");
  }
  return out;
}

std::vector<attack::AttackKind> parse_attackers(
    const std::vector<std::string>& names) {
  std::vector<attack::AttackKind> kinds;
  kinds.reserve(names.size());
  for (const std::string& n : names) {
    kinds.push_back(attack::attack_kind_from_string(n));
  }
  return kinds;
}

eval::AttackResources resources(const train::PolicyBundle& b) {
  eval::AttackResources r;
  r.policy = &b.policy;
  r.q_r = &b.q_r;
  r.q_c = &b.q_c;
  r.value_c = &b.value_c;
  return r;
}

int run_train(const std::string& config_path, const std::string& out_dir,
              const std::map<std::string, std::string>& overrides) {
  train::RunConfig cfg;
  if (!config_path.empty()) {
    cfg = train::RunConfig::from_json(load_json(config_path));
  }
  if (auto it = overrides.find("env"); it != overrides.end()) {
    cfg.env = env_from_name(it->second);
  }
  if (auto it = overrides.find("method"); it != overrides.end()) {
    cfg.method = train::method_from_string(it->second);
    if (cfg.method == train::Method::kPpol) {
      cfg.attacker = attack::AttackKind::kNone;
    } else if (cfg.method == train::Method::kSaPpol &&
               cfg.attacker == attack::AttackKind::kNone) {
      cfg.attacker = attack::AttackKind::kMad;
    }
  }
  if (auto it = overrides.find("attacker"); it != overrides.end()) {
    cfg.attacker = attack::attack_kind_from_string(it->second);
  }
  if (auto it = overrides.find("seed"); it != overrides.end()) {
    cfg.train.seed = std::stoull(it->second);
  }
  if (auto it = overrides.find("epochs"); it != overrides.end()) {
    cfg.train.epochs = std::stoi(it->second);
  }
  if (auto it = overrides.find("batch-steps"); it != overrides.end()) {
    cfg.train.batch_steps = std::stoi(it->second);
  }
  if (auto it = overrides.find("beta"); it != overrides.end()) {
    cfg.sa_beta = std::stod(it->second);
  }
  if (auto it = overrides.find("eps"); it != overrides.end()) {
    cfg.attack.epsilon = std::stod(it->second);
  }
  cfg.validate();

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const train::TrainResult res = train::train_run(cfg, out_dir);
  if (!res.metrics.empty()) {
    const train::MetricsRow& last = res.metrics.back();
    std::cout << "epochs " << res.epochs_run << "  reward "
              << last.reward_mean << "  cost " << last.cost_mean
              << "  lambda " << last.lambda << '\n';
  }
  if (!out_dir.empty()) {
    std::cout << "wrote " << out_dir << "/checkpoint_final.json\n";
  }
  if (res.aborted) {
    std::cerr << "training aborted on a non-finite update\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Constrained point-mass RL with observation attacks: training, "
      "evaluation sweeps and self-verification"};
  app.require_subcommand(1);

  // train ------------------------------------------------------------------
  auto* t = app.add_subcommand("train", "Train a policy and checkpoint it");
  std::string t_config, t_out;
  std::string t_env, t_method, t_attacker;
  std::uint64_t t_seed = 0;
  int t_epochs = 0, t_batch = 0;
  double t_beta = 0.0, t_eps = 0.0;
  t->add_option("--config", t_config, "Run configuration JSON");
  t->add_option("--out", t_out, "Output directory for metrics + checkpoints");
  t->add_option("--env", t_env, "Environment preset (run|circle)");
  t->add_option("--method", t_method, "ppol | adv-ppol | sa-ppol");
  t->add_option("--attacker", t_attacker,
                "Training-time adversary (adv-ppol: none|random|mc|mr, "
                "sa-ppol: mad|mc|mr)");
  t->add_option("--seed", t_seed, "Base seed");
  t->add_option("--epochs", t_epochs, "Training epochs");
  t->add_option("--batch-steps", t_batch, "Environment steps per epoch");
  t->add_option("--beta", t_beta, "Divergence penalty weight (sa-ppol)");
  t->add_option("--eps", t_eps, "Perturbation radius reached after warmup");

  // attack -----------------------------------------------------------------
  auto* a = app.add_subcommand("attack",
                               "Evaluate one attacker at one radius");
  std::string a_ck, a_env, a_attacker, a_out, a_method;
  double a_eps = 0.05, a_xi = 0.1;
  int a_episodes = 50, a_steps = 0;
  std::uint64_t a_seed = 0;
  a->add_option("--checkpoint", a_ck, "Checkpoint JSON")->required();
  a->add_option("--attacker", a_attacker,
                "random | mad | amad | mc | mr | mixed | min_reward")
      ->required();
  a->add_option("--eps", a_eps, "Perturbation radius");
  a->add_option("--episodes", a_episodes, "Episodes per cell");
  a->add_option("--seed", a_seed, "Evaluation seed");
  a->add_option("--steps", a_steps,
                "Attack iterations (default 60 for mad/amad, 200 otherwise)");
  a->add_option("--xi", a_xi, "High-risk percentile for amad");
  a->add_option("--env", a_env, "Environment override (run|circle)");
  a->add_option("--method", a_method, "Row label override");
  a->add_option("--out", a_out, "CSV path (stdout when omitted)");

  // sweep ------------------------------------------------------------------
  auto* s = app.add_subcommand(
      "sweep", "Cross attackers x radii x seeds against one checkpoint");
  std::string s_ck, s_env, s_out, s_method;
  std::vector<std::string> s_attackers{"random", "mad", "amad", "mc", "mr"};
  std::vector<double> s_grid{0.0, 0.0125, 0.025, 0.0375, 0.05};
  std::vector<std::uint64_t> s_seeds{0, 1, 2, 3, 4};
  int s_episodes = 50, s_steps = 200;
  double s_xi = 0.1;
  s->add_option("--checkpoint", s_ck, "Checkpoint JSON")->required();
  s->add_option("--out", s_out, "Output directory")->required();
  s->add_option("--attackers", s_attackers, "Attackers to sweep")
      ->delimiter(',');
  s->add_option("--eps-grid", s_grid, "Ascending perturbation radii")
      ->delimiter(',');
  s->add_option("--seeds", s_seeds, "Evaluation seeds")->delimiter(',');
  s->add_option("--episodes", s_episodes, "Episodes per cell");
  s->add_option("--steps", s_steps, "Attack iterations for every cell");
  s->add_option("--xi", s_xi, "High-risk percentile for amad");
  s->add_option("--env", s_env, "Environment override (run|circle)");
  s->add_option("--method", s_method, "Row label override");

  // compare ----------------------------------------------------------------
  auto* c = app.add_subcommand(
      "compare", "Grid of methods x attackers from trained checkpoints");
  std::string c_config, c_out;
  int c_episodes = 0;
  c->add_option("--config", c_config, "Comparison configuration JSON")
      ->required();
  c->add_option("--out", c_out, "Output directory")->required();
  c->add_option("--episodes", c_episodes, "Episodes per cell override");

  // verify -----------------------------------------------------------------
  auto* v = app.add_subcommand(
      "verify", "Re-derive the finite-instance guarantees from scratch");
  std::string v_out;
  int v_instances = 20;
  std::uint64_t v_seed = 0;
  v->add_option("--instances", v_instances, "Random instances to draw");
  v->add_option("--seed", v_seed, "Generator seed");
  v->add_option("--out", v_out, "JSONL path for the full check list");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*t) {
      std::map<std::string, std::string> ov;
      if (t->count("--env")) ov["env"] = t_env;
      if (t->count("--method")) ov["method"] = t_method;
      if (t->count("--attacker")) ov["attacker"] = t_attacker;
      if (t->count("--seed")) ov["seed"] = std::to_string(t_seed);
      if (t->count("--epochs")) ov["epochs"] = std::to_string(t_epochs);
      if (t->count("--batch-steps")) {
        ov["batch-steps"] = std::to_string(t_batch);
      }
      if (t->count("--beta")) ov["beta"] = std::to_string(t_beta);
      if (t->count("--eps")) ov["eps"] = std::to_string(t_eps);
      return run_train(t_config, t_out, ov);
    }

    if (*a) {
      const LoadedCheckpoint ck = load_checkpoint(a_ck, a_env);
      const attack::AttackKind kind =
          attack::attack_kind_from_string(a_attacker);
      eval::SweepConfig cfg;
      cfg.env = ck.env;
      cfg.method = a_method.empty() ? ck.label : a_method;
      cfg.attackers = {kind};
      cfg.eps_grid = {a_eps};
      cfg.episodes = a_episodes;
      cfg.seeds = {a_seed};
      cfg.attack.amad_xi = a_xi;
      cfg.attack.steps =
          a_steps > 0 ? a_steps
                      : (kind == attack::AttackKind::kMad ||
                                 kind == attack::AttackKind::kAmad
                             ? 60
                             : 200);
      const std::vector<eval::SweepRecord> rows =
          eval::attack_sweep(cfg, resources(ck.bundle));
      if (a_out.empty()) {
        eval::write_sweep_csv(rows, std::cout);
      } else {
        auto os = open_out(a_out);
        eval::write_sweep_csv(rows, os);
        std::cout << "wrote " << a_out << '\n';
      }
      return 0;
    }

    if (*s) {
      const LoadedCheckpoint ck = load_checkpoint(s_ck, s_env);
      eval::SweepConfig cfg;
      cfg.env = ck.env;
      cfg.method = s_method.empty() ? ck.label : s_method;
      cfg.attackers = parse_attackers(s_attackers);
      cfg.eps_grid = s_grid;
      cfg.episodes = s_episodes;
      cfg.seeds = s_seeds;
      cfg.attack.steps = s_steps;
      cfg.attack.amad_xi = s_xi;
      const std::vector<eval::SweepRecord> rows =
          eval::attack_sweep(cfg, resources(ck.bundle));
      std::filesystem::create_directories(s_out);
      {
        auto os = open_out(s_out + "/sweep.csv");
        eval::write_sweep_csv(rows, os);
      }
      {
        auto os = open_out(s_out + "/sweep.jsonl");
        eval::write_sweep_jsonl(rows, os);
      }
      std::cout << "wrote " << s_out << "/sweep.csv and " << s_out
                << "/sweep.jsonl (" << rows.size() << " rows)\n";
      return 0;
    }

    if (*c) {
      eval::CompareConfig cfg =
          eval::CompareConfig::from_json(load_json(c_config));
      if (c->count("--episodes")) {
        cfg.episodes = c_episodes;
        cfg.validate();
      }
      const eval::CompareResult result = eval::compare_methods(cfg);
      std::filesystem::create_directories(c_out);
      {
        auto os = open_out(c_out + "/compare.csv");
        eval::write_compare_csv(result, os);
      }
      {
        auto os = open_out(c_out + "/compare.jsonl");
        eval::write_compare_jsonl(result, os);
      }
      for (const eval::CompareRow& row : result.rows) {
        std::cout << row.method;
        if (!row.present) {
          std::cout << "  (checkpoint missing)\n";
          continue;
        }
        const eval::CompareCell& nat = row.cells.front();
        std::cout << "  natural reward " << nat.reward_mean << " cost "
                  << nat.cost_mean;
        if (row.failing) std::cout << "  FAILING";
        std::cout << '\n';
      }
      std::cout << "wrote " << c_out << "/compare.csv and " << c_out
                << "/compare.jsonl\n";
      return 0;
    }

    if (*v) {
      const std::vector<eval::VerifyCheck> checks =
          eval::verify_battery(v_instances, v_seed);
      if (!v_out.empty()) {
        auto os = open_out(v_out);
        eval::write_verify_jsonl(checks, os);
      }
      std::map<std::string, std::pair<int, int>> tally;  // pass, fail
      for (const eval::VerifyCheck& ch : checks) {
        if (ch.holds) {
          ++tally[ch.check].first;
        } else {
          ++tally[ch.check].second;
          std::cerr << "FAIL " << ch.check << " instance " << ch.instance_id
                    << " lhs " << ch.lhs << " rhs " << ch.rhs << '\n';
        }
      }
      int failures = 0;
      for (const auto& [name, counts] : tally) {
        std::cout << name << ": " << counts.first << "/"
                  << (counts.first + counts.second) << '\n';
        failures += counts.second;
      }
      if (!v_out.empty()) std::cout << "wrote " << v_out << '\n';
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
