// Command-line laboratory around the execution simulator, the closed-form
// policies and the three trainers. Subcommands: simulate, train, evaluate,
// estimate, compare, policy-table.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vwaplab/closed_form.hpp"
#include "vwaplab/estimators.hpp"
#include "vwaplab/experiment.hpp"
#include "vwaplab/trainers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vwaplab;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string env = "env1";
  std::string algo;
  std::string out;
  std::uint64_t seed = 0;
  int epochs = 0;
  int episodes = 0;
  std::string checkpoint;
  std::string seeds_csv;
};

void add_common_flags(CLI::App* app, CommonOptions& options) {
  app->add_option("--config", options.config_path, "Full experiment config (JSON)");
  app->add_option("--env", options.env, "env1, env2 or a config file path");
  app->add_option("--seed", options.seed, "Run seed (overrides config)");
  app->add_option("--epochs", options.epochs, "Training epochs (overrides config)");
  app->add_option("--out", options.out, "Output directory or file");
}

ExperimentConfig resolve_config(const CommonOptions& options) {
  ExperimentConfig config;
  if (!options.config_path.empty()) {
    config = load_config(options.config_path);
  } else if (options.env == "env1" || options.env == "env2") {
    config = builtin_config(options.env);
  } else {
    config = load_config(options.env);
  }
  if (!options.algo.empty() && options.algo != "twap" && options.algo != "closed-form") {
    config.training.algorithm = algorithm_from_name(options.algo);
  }
  if (options.seed != 0) {
    config.training.seed = options.seed;
    config.run.seeds = {options.seed};
  }
  if (options.epochs != 0) config.training.epochs = options.epochs;
  if (!options.out.empty()) config.run.out_dir = options.out;
  return config;
}

// Policies selectable without training. Returns nullptr for trainable tags.
std::unique_ptr<Policy> make_reference_policy(const std::string& algo,
                                              const ExperimentConfig& config) {
  if (algo == "twap" || algo.empty()) {
    return std::make_unique<TwapPolicy>(twap_speed(config.market.q0, config.grid.t_end));
  }
  if (algo == "closed-form") {
    return std::make_unique<ExploratoryOptimalPolicy>(
        ClosedForm(config.market, config.penalty, config.grid.t_end));
  }
  return nullptr;
}

struct LoadedActorPolicy {
  LoadedNet loaded;
  std::unique_ptr<ActorNet> gaussian;
  std::unique_ptr<SpeedNet> speed;
  std::unique_ptr<Policy> policy;
};

LoadedActorPolicy load_checkpoint_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  LoadedActorPolicy out{load_net(in), nullptr, nullptr, nullptr};
  if (out.loaded.kind == "actor-gaussian") {
    out.gaussian = std::make_unique<ActorNet>(out.loaded.net, out.loaded.scaler);
    out.policy = std::make_unique<GaussianActorPolicy>(*out.gaussian);
  } else if (out.loaded.kind == "actor-speed") {
    out.speed = std::make_unique<SpeedNet>(out.loaded.net, out.loaded.scaler);
    out.policy = std::make_unique<SpeedNetPolicy>(*out.speed);
  } else {
    throw std::runtime_error("checkpoint kind '" + out.loaded.kind +
                             "' is not an actor");
  }
  return out;
}

json summary_json(const Summary& summary) {
  return json{{"mean", summary.mean},
              {"stdev", summary.stdev},
              {"min", summary.min},
              {"max", summary.max}};
}

void emit(const json& payload, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << payload.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << payload.dump(2) << "\n";
  }
}

int cmd_simulate(const CommonOptions& options) {
  ExperimentConfig config = resolve_config(options);
  const Environment environment = config.make_environment();
  auto policy = make_reference_policy(options.algo, config);
  if (!policy) {
    throw std::runtime_error("simulate supports --algo twap or closed-form");
  }
  const int episodes = options.episodes > 0 ? options.episodes : 1;
  const std::uint64_t seed = options.seed != 0 ? options.seed : 1;
  const fs::path dir = options.out.empty() ? fs::path("out/simulate") : fs::path(options.out);
  fs::create_directories(dir);
  for (int episode = 0; episode < episodes; ++episode) {
    RunStreams streams = RunStreams::for_run(seed, static_cast<std::uint64_t>(episode));
    const Trajectory trajectory = environment.rollout(*policy, streams);
    std::ofstream out(dir / ("episode_" + std::to_string(episode) + ".csv"));
    if (!out) throw std::runtime_error("cannot write episode file");
    write_trajectory_csv(out, trajectory, config.grid.step());
    std::cout << "episode " << episode << ": return " << trajectory.total_return()
              << ", terminal cash " << trajectory.terminal_reward << "\n";
  }
  std::cout << "wrote " << episodes << " episode file(s) under " << dir.string() << "\n";
  return 0;
}

int cmd_train(const CommonOptions& options) {
  ExperimentConfig config = resolve_config(options);
  const ExperimentResult result = run_experiment(config);
  for (const SeedOutcome& outcome : result.seeds) {
    if (outcome.ok) {
      std::cout << "seed " << outcome.seed << ": mean return "
                << outcome.agent_eval.total_return.mean << ", mean dPnL "
                << outcome.delta_pnl_summary.mean << ", final policy MSE "
                << outcome.final_policy_mse << "\n";
    } else {
      std::cout << "seed " << outcome.seed << ": FAILED (" << outcome.error << ")\n";
    }
  }
  std::cout << "results under " << result.out_dir << "\n";
  return result.all_ok() ? 0 : 1;
}

int cmd_evaluate(const CommonOptions& options) {
  ExperimentConfig config = resolve_config(options);
  const Environment environment = config.make_environment();
  const int episodes = options.episodes > 0 ? options.episodes
                                            : config.run.final_eval_episodes;
  std::unique_ptr<Policy> policy;
  std::optional<LoadedActorPolicy> loaded;
  std::string label = options.algo.empty() ? "twap" : options.algo;
  if (!options.checkpoint.empty()) {
    loaded = load_checkpoint_policy(options.checkpoint);
    policy = std::move(loaded->policy);
    label = loaded->loaded.kind;
  } else {
    policy = make_reference_policy(options.algo, config);
    if (!policy) {
      throw std::runtime_error(
          "evaluate needs --checkpoint for trained policies; --algo supports twap "
          "and closed-form");
    }
  }
  const EvalResult result =
      evaluate_policy(environment, *policy, episodes, config.run.eval_seed);
  json payload{{"policy", label},
               {"environment", config.name},
               {"episodes", episodes},
               {"average_return", summary_json(result.total_return)},
               {"effective_cash", summary_json(result.effective_cash)}};
  emit(payload, options.out);
  return 0;
}

int cmd_estimate(const CommonOptions& options) {
  ExperimentConfig config = resolve_config(options);
  const Environment environment = config.make_environment();
  auto policy = make_reference_policy(options.algo, config);
  if (!policy) throw std::runtime_error("estimate supports --algo twap or closed-form");
  const int episodes = options.episodes > 0 ? options.episodes : 8;
  const std::uint64_t seed = options.seed != 0 ? options.seed : 1;
  std::vector<Trajectory> batch;
  batch.reserve(episodes);
  std::size_t steps = 0;
  double sum_v2h = 0.0;
  for (int episode = 0; episode < episodes; ++episode) {
    RunStreams streams = RunStreams::for_run(seed, static_cast<std::uint64_t>(episode));
    batch.push_back(environment.rollout(*policy, streams));
    for (const StepRecord& record : batch.back().steps) {
      ++steps;
      sum_v2h += record.action * record.action * config.grid.step();
    }
  }
  const ImpactEstimates estimates = estimate_impacts(batch, config.grid.step());
  json payload{{"b_hat", estimates.b_hat},
               {"k_hat", estimates.k_hat},
               {"episodes", episodes},
               {"steps", steps},
               {"sum_v_squared_h", sum_v2h},
               {"environment", config.name},
               {"behavior_policy", options.algo.empty() ? "twap" : options.algo},
               {"true_b", config.market.b},
               {"true_k", config.market.k}};
  emit(payload, options.out);
  return 0;
}

int cmd_compare(const CommonOptions& options, const std::string& algos_csv) {
  ExperimentConfig base = resolve_config(options);
  if (!options.seeds_csv.empty()) {
    base.run.seeds.clear();
    std::stringstream stream(options.seeds_csv);
    for (std::string token; std::getline(stream, token, ',');) {
      base.run.seeds.push_back(std::stoull(token));
    }
  }
  std::vector<std::string> algos;
  {
    std::stringstream stream(algos_csv);
    for (std::string token; std::getline(stream, token, ',');) algos.push_back(token);
  }
  const Environment environment = base.make_environment();

  ComparisonReport report;
  report.environment = base.name;
  report.episodes = base.run.final_eval_episodes;

  TwapPolicy twap(twap_speed(base.market.q0, base.grid.t_end));
  const EvalResult twap_eval =
      evaluate_policy(environment, twap, base.run.final_eval_episodes, base.run.eval_seed);
  {
    AlgoStats stats;
    stats.average_return = twap_eval.total_return;
    stats.effective_cash = twap_eval.effective_cash;
    report.algorithms["twap"] = stats;
  }

  auto paired_stats = [&](const EvalResult& eval) {
    AlgoStats stats;
    stats.average_return = eval.total_return;
    stats.effective_cash = eval.effective_cash;
    std::vector<double> pnls;
    pnls.reserve(eval.returns.size());
    for (std::size_t i = 0; i < eval.returns.size(); ++i) {
      pnls.push_back(delta_pnl(eval.returns[i], twap_eval.returns[i]));
    }
    stats.delta_pnl = Summary::of(pnls);
    return stats;
  };

  bool all_ok = true;
  for (const std::string& algo : algos) {
    if (algo == "twap") continue;
    if (algo == "closed-form") {
      ExploratoryOptimalPolicy policy(ClosedForm(base.market, base.penalty, base.grid.t_end));
      report.algorithms["closed-form"] = paired_stats(
          evaluate_policy(environment, policy, base.run.final_eval_episodes,
                          base.run.eval_seed));
      continue;
    }
    ExperimentConfig config = base;
    config.training.algorithm = algorithm_from_name(algo);
    const ExperimentResult result = run_experiment(config);
    all_ok = all_ok && result.all_ok();
    report.algorithms[algo] = result.best;
    std::cout << algo << ": best seed " << result.best.best_seed << ", mean dPnL "
              << result.best.delta_pnl.mean << "\n";
  }

  const fs::path dir = base.run.out_dir;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "comparison.json");
    if (!out) throw std::runtime_error("cannot write comparison.json");
    out << comparison_to_json(report).dump(2) << "\n";
  }
  std::cout << "wrote " << (dir / "comparison.json").string() << "\n";
  return all_ok ? 0 : 1;
}

int cmd_policy_table(const CommonOptions& options) {
  ExperimentConfig config = resolve_config(options);
  const Environment environment = config.make_environment();
  const std::string out_path =
      options.out.empty() ? "policy_table.csv" : options.out;
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  if (!options.checkpoint.empty()) {
    LoadedActorPolicy loaded = load_checkpoint_policy(options.checkpoint);
    if (!loaded.gaussian) {
      throw std::runtime_error("policy-table needs a Gaussian actor checkpoint");
    }
    const ActorNet& actor = *loaded.gaussian;
    write_policy_table(out, environment, [&actor](double t, const MarketState& state) {
      return actor.policy_at(t, state);
    });
  } else {
    const ClosedForm closed_form(config.market, config.penalty, config.grid.t_end);
    write_policy_table(out, environment,
                       [&closed_form](double t, const MarketState& state) {
                         return closed_form.exploratory_policy(t, state);
                       });
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VWAP-targeting optimal execution laboratory"};
  app.require_subcommand(1);

  CommonOptions options;
  std::string algos_csv = "adp,adp-explore,ml-ac,mo-ac";

  CLI::App* simulate = app.add_subcommand("simulate", "Roll out a reference policy to CSV");
  add_common_flags(simulate, options);
  simulate->add_option("--algo", options.algo, "twap or closed-form");
  simulate->add_option("--episodes", options.episodes, "Number of episodes");

  CLI::App* train_cmd = app.add_subcommand("train", "Train one algorithm across seeds");
  add_common_flags(train_cmd, options);
  train_cmd->add_option("--algo", options.algo, "adp, adp-explore, ml-ac or mo-ac");

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Out-of-sample evaluation");
  add_common_flags(evaluate_cmd, options);
  evaluate_cmd->add_option("--algo", options.algo, "twap or closed-form");
  evaluate_cmd->add_option("--checkpoint", options.checkpoint, "Trained actor checkpoint");
  evaluate_cmd->add_option("--episodes", options.episodes, "Number of episodes");

  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Impact-parameter estimation");
  add_common_flags(estimate_cmd, options);
  estimate_cmd->add_option("--algo", options.algo, "Behavior policy: twap or closed-form");
  estimate_cmd->add_option("--episodes", options.episodes, "Episodes in the batch");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Train algorithms and compare with TWAP");
  add_common_flags(compare_cmd, options);
  compare_cmd->add_option("--algos", algos_csv, "Comma-separated algorithm list");
  compare_cmd->add_option("--seeds", options.seeds_csv, "Comma-separated seed list");

  CLI::App* table_cmd = app.add_subcommand("policy-table", "Dump (t, mu, q, mean, std) grid");
  add_common_flags(table_cmd, options);
  table_cmd->add_option("--checkpoint", options.checkpoint, "Gaussian actor checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(options);
    if (train_cmd->parsed()) return cmd_train(options);
    if (evaluate_cmd->parsed()) return cmd_evaluate(options);
    if (estimate_cmd->parsed()) return cmd_estimate(options);
    if (compare_cmd->parsed()) return cmd_compare(options, algos_csv);
    if (table_cmd->parsed()) return cmd_policy_table(options);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 2;
  }
  return 0;
}
