#include "vwaplab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vwaplab/estimators.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vwaplab {
namespace {

void check_keys(const json& object, std::initializer_list<const char*> allowed,
                const std::string& context) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* key) {
          return it.key() == key;
        }) == allowed.end()) {
      throw std::runtime_error("config: unknown key '" + context + "." + it.key() + "'");
    }
  }
}

template <typename T>
void read_if(const json& object, const char* key, T& value) {
  if (object.contains(key)) value = object.at(key).get<T>();
}

json summary_to_json(const Summary& summary) {
  return json{{"mean", summary.mean},
              {"stdev", summary.stdev},
              {"min", summary.min},
              {"max", summary.max}};
}

Summary summary_from_json(const json& object) {
  check_keys(object, {"mean", "stdev", "min", "max"}, "summary");
  Summary summary;
  read_if(object, "mean", summary.mean);
  read_if(object, "stdev", summary.stdev);
  read_if(object, "min", summary.min);
  read_if(object, "max", summary.max);
  return summary;
}

json algo_stats_to_json(const AlgoStats& stats) {
  return json{{"average_return", summary_to_json(stats.average_return)},
              {"delta_pnl", summary_to_json(stats.delta_pnl)},
              {"effective_cash", summary_to_json(stats.effective_cash)},
              {"best_seed", stats.best_seed}};
}

AlgoStats algo_stats_from_json(const json& object) {
  check_keys(object, {"average_return", "delta_pnl", "effective_cash", "best_seed"},
             "algorithm");
  AlgoStats stats;
  if (object.contains("average_return")) {
    stats.average_return = summary_from_json(object.at("average_return"));
  }
  if (object.contains("delta_pnl")) {
    stats.delta_pnl = summary_from_json(object.at("delta_pnl"));
  }
  if (object.contains("effective_cash")) {
    stats.effective_cash = summary_from_json(object.at("effective_cash"));
  }
  read_if(object, "best_seed", stats.best_seed);
  return stats;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void save_checkpoints(const TrainOutput& trained, const fs::path& dir,
                      const std::string& suffix) {
  {
    auto out = open_output(dir / ("critic_" + suffix + ".ckpt"));
    save_net(out, trained.critic->net(), trained.critic->scaler(), "critic",
             trained.critic->output_scale());
  }
  if (trained.gaussian_actor) {
    auto out = open_output(dir / ("actor_" + suffix + ".ckpt"));
    save_net(out, trained.gaussian_actor->net(), trained.gaussian_actor->scaler(),
             "actor-gaussian", 1.0);
  }
  if (trained.speed_actor) {
    auto out = open_output(dir / ("actor_" + suffix + ".ckpt"));
    save_net(out, trained.speed_actor->net(), trained.speed_actor->scaler(),
             "actor-speed", 1.0);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("RunConfig.seeds must be non-empty");
  if (eval_rollouts_per_epoch < 1 || final_eval_episodes < 1) {
    throw std::invalid_argument("RunConfig evaluation counts must be >= 1");
  }
  if (checkpoint_interval < 0) {
    throw std::invalid_argument("RunConfig.checkpoint_interval must be >= 0");
  }
}

void ExperimentConfig::validate() const {
  market.validate();
  penalty.validate();
  grid.validate();
  training.validate();
  run.validate();
}

ExperimentConfig builtin_config(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.training.environment_tag = name;
  if (name == "env1") {
    return config;  // defaults carry the first parameter set
  }
  if (name == "env2") {
    config.market.b = 0.5;
    config.market.k = 0.5;
    config.market.alpha = 10.0;
    config.penalty.phi = 10.0;
    return config;
  }
  throw std::invalid_argument("builtin_config: unknown preset '" + name + "'");
}

ExperimentConfig config_from_json(const json& root) {
  check_keys(root, {"name", "environment", "algorithm", "run"}, "");
  ExperimentConfig config;
  read_if(root, "name", config.name);

  if (root.contains("environment")) {
    const json& environment = root.at("environment");
    check_keys(environment, {"market", "penalty", "grid"}, "environment");
    if (environment.contains("market")) {
      const json& market = environment.at("market");
      check_keys(market,
                 {"kappa", "lambda", "eta_mean", "b", "k", "alpha", "sigma", "s0", "x0",
                  "q0", "mu0"},
                 "environment.market");
      read_if(market, "kappa", config.market.kappa);
      read_if(market, "lambda", config.market.lambda);
      read_if(market, "eta_mean", config.market.eta_mean);
      read_if(market, "b", config.market.b);
      read_if(market, "k", config.market.k);
      read_if(market, "alpha", config.market.alpha);
      read_if(market, "sigma", config.market.sigma);
      read_if(market, "s0", config.market.s0);
      read_if(market, "x0", config.market.x0);
      read_if(market, "q0", config.market.q0);
      read_if(market, "mu0", config.market.mu0);
    }
    if (environment.contains("penalty")) {
      const json& penalty = environment.at("penalty");
      check_keys(penalty, {"phi", "rho", "gamma"}, "environment.penalty");
      read_if(penalty, "phi", config.penalty.phi);
      read_if(penalty, "rho", config.penalty.rho);
      read_if(penalty, "gamma", config.penalty.gamma);
    }
    if (environment.contains("grid")) {
      const json& grid = environment.at("grid");
      check_keys(grid, {"t_end", "n_steps"}, "environment.grid");
      read_if(grid, "t_end", config.grid.t_end);
      read_if(grid, "n_steps", config.grid.n_steps);
    }
  }

  if (root.contains("algorithm")) {
    const json& algorithm = root.at("algorithm");
    check_keys(algorithm,
               {"name", "epochs", "critic_rate", "actor_rate", "lr_decay", "lr_interval",
                "batch_size", "warmup_epochs", "critic_inner_steps", "hidden_widths"},
               "algorithm");
    if (algorithm.contains("name")) {
      config.training.algorithm = algorithm_from_name(algorithm.at("name").get<std::string>());
    }
    read_if(algorithm, "epochs", config.training.epochs);
    read_if(algorithm, "critic_rate", config.training.critic_rate);
    read_if(algorithm, "actor_rate", config.training.actor_rate);
    read_if(algorithm, "lr_decay", config.training.schedule.decay);
    read_if(algorithm, "lr_interval", config.training.schedule.interval);
    read_if(algorithm, "batch_size", config.training.batch_size);
    read_if(algorithm, "warmup_epochs", config.training.warmup_epochs);
    read_if(algorithm, "critic_inner_steps", config.training.critic_inner_steps);
    read_if(algorithm, "hidden_widths", config.training.hidden_widths);
  }

  if (root.contains("run")) {
    const json& run = root.at("run");
    check_keys(run,
               {"seeds", "out_dir", "eval_rollouts_per_epoch", "final_eval_episodes",
                "checkpoint_interval", "eval_seed"},
               "run");
    read_if(run, "seeds", config.run.seeds);
    read_if(run, "out_dir", config.run.out_dir);
    read_if(run, "eval_rollouts_per_epoch", config.run.eval_rollouts_per_epoch);
    read_if(run, "final_eval_episodes", config.run.final_eval_episodes);
    read_if(run, "checkpoint_interval", config.run.checkpoint_interval);
    read_if(run, "eval_seed", config.run.eval_seed);
  }

  config.training.environment_tag = config.name;
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& error) {
    throw std::runtime_error("config: parse error in " + path + ": " + error.what());
  }
  return config_from_json(root);
}

json config_to_json(const ExperimentConfig& config) {
  return json{
      {"name", config.name},
      {"environment",
       {{"market",
         {{"kappa", config.market.kappa},
          {"lambda", config.market.lambda},
          {"eta_mean", config.market.eta_mean},
          {"b", config.market.b},
          {"k", config.market.k},
          {"alpha", config.market.alpha},
          {"sigma", config.market.sigma},
          {"s0", config.market.s0},
          {"x0", config.market.x0},
          {"q0", config.market.q0},
          {"mu0", config.market.mu0}}},
        {"penalty",
         {{"phi", config.penalty.phi},
          {"rho", config.penalty.rho},
          {"gamma", config.penalty.gamma}}},
        {"grid", {{"t_end", config.grid.t_end}, {"n_steps", config.grid.n_steps}}}}},
      {"algorithm",
       {{"name", algorithm_name(config.training.algorithm)},
        {"epochs", config.training.epochs},
        {"critic_rate", config.training.critic_rate},
        {"actor_rate", config.training.actor_rate},
        {"lr_decay", config.training.schedule.decay},
        {"lr_interval", config.training.schedule.interval},
        {"batch_size", config.training.batch_size},
        {"warmup_epochs", config.training.warmup_epochs},
        {"critic_inner_steps", config.training.critic_inner_steps},
        {"hidden_widths", config.training.hidden_widths}}},
      {"run",
       {{"seeds", config.run.seeds},
        {"out_dir", config.run.out_dir},
        {"eval_rollouts_per_epoch", config.run.eval_rollouts_per_epoch},
        {"final_eval_episodes", config.run.final_eval_episodes},
        {"checkpoint_interval", config.run.checkpoint_interval},
        {"eval_seed", config.run.eval_seed}}}};
}

Summary Summary::of(const std::vector<double>& values) {
  Summary summary;
  if (values.empty()) return summary;
  summary.min = values.front();
  summary.max = values.front();
  for (double value : values) {
    summary.mean += value;
    summary.min = std::min(summary.min, value);
    summary.max = std::max(summary.max, value);
  }
  summary.mean /= static_cast<double>(values.size());
  if (values.size() > 1 && summary.min != summary.max) {
    double ss = 0.0;
    for (double value : values) {
      const double d = value - summary.mean;
      ss += d * d;
    }
    summary.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return summary;
}

EvalResult evaluate_policy(const Environment& environment, Policy& policy,
                           int n_episodes, std::uint64_t eval_seed) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate_policy: n_episodes >= 1");
  EvalResult result;
  result.returns.reserve(n_episodes);
  result.cashes.reserve(n_episodes);
  for (int episode = 0; episode < n_episodes; ++episode) {
    RunStreams streams =
        RunStreams::for_run(eval_seed, static_cast<std::uint64_t>(episode));
    const Trajectory trajectory = environment.rollout(policy, streams);
    result.returns.push_back(trajectory.total_return());
    result.cashes.push_back(trajectory.terminal_reward);
  }
  result.total_return = Summary::of(result.returns);
  result.effective_cash = Summary::of(result.cashes);
  return result;
}

double delta_pnl(double agent_terminal_cash, double twap_terminal_cash) {
  if (twap_terminal_cash == 0.0) {
    throw std::domain_error("delta_pnl: TWAP terminal cash is zero");
  }
  return (agent_terminal_cash - twap_terminal_cash) / twap_terminal_cash;
}

json comparison_to_json(const ComparisonReport& report) {
  json algorithms = json::object();
  for (const auto& [name, stats] : report.algorithms) {
    algorithms[name] = algo_stats_to_json(stats);
  }
  return json{{"environment", report.environment},
              {"episodes", report.episodes},
              {"algorithms", algorithms}};
}

ComparisonReport comparison_from_json(const json& root) {
  check_keys(root, {"environment", "episodes", "algorithms"}, "");
  ComparisonReport report;
  read_if(root, "environment", report.environment);
  read_if(root, "episodes", report.episodes);
  if (root.contains("algorithms")) {
    for (auto it = root.at("algorithms").begin(); it != root.at("algorithms").end(); ++it) {
      report.algorithms[it.key()] = algo_stats_from_json(it.value());
    }
  }
  return report;
}

bool ExperimentResult::all_ok() const {
  return std::all_of(seeds.begin(), seeds.end(),
                     [](const SeedOutcome& outcome) { return outcome.ok; });
}

void write_training_curve(std::ostream& out, const std::vector<EpochReport>& reports) {
  out << "epoch,mean_return,min_return,max_return,critic_loss,policy_mse\n";
  char line[256];
  for (const EpochReport& report : reports) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", report.epoch,
                  report.mean_return, report.min_return, report.max_return,
                  report.critic_loss, report.policy_mse);
    out << line;
  }
}

void write_policy_mse(std::ostream& out, const std::vector<EpochReport>& reports) {
  out << "epoch,policy_mse\n";
  char line[64];
  for (const EpochReport& report : reports) {
    std::snprintf(line, sizeof(line), "%d,%.17g\n", report.epoch, report.policy_mse);
    out << line;
  }
}

void write_policy_heatmap(std::ostream& out, const Environment& environment,
                          Policy& policy, const SpecFn& spec_fn, std::uint64_t seed) {
  RunStreams streams = RunStreams::for_run(seed);
  const Trajectory trajectory = environment.rollout(policy, streams);
  std::vector<GaussianPolicySpec> specs;
  specs.reserve(trajectory.steps.size());
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  double std_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const double t = environment.grid().time_at(static_cast<int>(i));
    const GaussianPolicySpec spec = spec_fn(t, trajectory.steps[i].state);
    if (spec.std <= 0.0) {
      throw std::invalid_argument("write_policy_heatmap: needs a stochastic policy");
    }
    v_min = std::min(v_min, spec.mean - 6.0 * spec.std);
    v_max = std::max(v_max, spec.mean + 6.0 * spec.std);
    std_min = std::min(std_min, spec.std);
    specs.push_back(spec);
  }
  // Keep the action grid fine relative to the narrowest slice so each slice's
  // trapezoid mass stays within 1e-3 of one.
  const int points = std::clamp(
      static_cast<int>(std::ceil((v_max - v_min) / (0.05 * std_min))) + 1, 201, 40001);
  const double dv = (v_max - v_min) / (points - 1);
  out << "t_index,t,v,density\n";
  char line[160];
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double t = environment.grid().time_at(static_cast<int>(i));
    for (int j = 0; j < points; ++j) {
      const double v = v_min + j * dv;
      const double density = std::exp(gaussian_log_density(specs[i], v));
      std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", i, t, v, density);
      out << line;
    }
  }
}

void write_policy_table(std::ostream& out, const Environment& environment,
                        const SpecFn& spec_fn) {
  const MarketParams& market = environment.market();
  const TimeGrid& grid = environment.grid();
  const double mu_fractions[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  const double q_fractions[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  out << "t,mu,q,mean,std\n";
  char line[160];
  for (int node = 0; node <= grid.n_steps; ++node) {
    const double t = grid.time_at(node);
    for (double mu_fraction : mu_fractions) {
      for (double q_fraction : q_fractions) {
        MarketState state;
        state.s = market.s0;
        state.x = market.x0;
        state.q = q_fraction * market.q0;
        state.mu = mu_fraction * market.mu0;
        state.t_index = node;
        const GaussianPolicySpec spec = spec_fn(t, state);
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", t, state.mu,
                      state.q, spec.mean, spec.std);
        out << line;
      }
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Environment environment = config.make_environment();
  const std::string algo = algorithm_name(config.training.algorithm);
  const fs::path base = fs::path(config.run.out_dir) / algo;
  fs::create_directories(base);

  TwapPolicy twap(twap_speed(config.market.q0, config.grid.t_end));
  const EvalResult twap_eval =
      evaluate_policy(environment, twap, config.run.final_eval_episodes,
                      config.run.eval_seed);

  ExperimentResult result;
  result.algorithm = algo;
  result.out_dir = base.string();
  result.twap_eval = twap_eval;
  result.seeds.resize(config.run.seeds.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= config.run.seeds.size()) return;
      const std::uint64_t seed = config.run.seeds[index];
      SeedOutcome& outcome = result.seeds[index];
      outcome.seed = seed;
      const fs::path dir = base / ("seed_" + std::to_string(seed));
      try {
        fs::create_directories(dir);
        TrainConfig training = config.training;
        training.seed = seed;
        training.eval_rollouts = config.run.eval_rollouts_per_epoch;
        const int interval = config.run.checkpoint_interval;
        EpochHook hook;
        if (interval > 0) {
          hook = [&dir, interval](const TrainOutput& trained, int epoch) {
            if ((epoch + 1) % interval == 0) {
              save_checkpoints(trained, dir, "ep" + std::to_string(epoch + 1));
            }
          };
        }
        const TrainOutput trained = train(environment, training, hook);
        {
          auto out = open_output(dir / "training_curve.csv");
          write_training_curve(out, trained.reports);
        }
        {
          auto out = open_output(dir / "policy_mse.csv");
          write_policy_mse(out, trained.reports);
        }
        save_checkpoints(trained, dir, "final");

        auto policy = trained.make_policy();
        outcome.agent_eval = evaluate_policy(environment, *policy,
                                             config.run.final_eval_episodes,
                                             config.run.eval_seed);
        // Paired per-episode outperformance on the realized objective value
        // (running rewards plus terminal reward, entropy excluded).
        outcome.delta_pnls.reserve(outcome.agent_eval.returns.size());
        for (std::size_t i = 0; i < outcome.agent_eval.returns.size(); ++i) {
          outcome.delta_pnls.push_back(
              delta_pnl(outcome.agent_eval.returns[i], twap_eval.returns[i]));
        }
        outcome.delta_pnl_summary = Summary::of(outcome.delta_pnls);
        outcome.initial_policy_mse = trained.initial_policy_mse;
        outcome.final_policy_mse =
            trained.reports.empty() ? 0.0 : trained.reports.back().policy_mse;
        outcome.aborted_epochs = trained.aborted_epochs;
        if (config.training.algorithm != Algorithm::Adp) {
          auto out = open_output(dir / "heatmap.csv");
          auto heatmap_policy = trained.make_policy();
          write_policy_heatmap(out, environment, *heatmap_policy,
                               [&trained](double t, const MarketState& state) {
                                 return *trained.policy_spec(t, state);
                               },
                               config.run.eval_seed);
        }
        outcome.ok = true;
      } catch (const std::exception& error) {
        outcome.ok = false;
        outcome.error = error.what();
      }
    }
  };

  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads =
      std::min<unsigned>(hardware, static_cast<unsigned>(config.run.seeds.size()));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (unsigned i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (std::thread& thread : threads) thread.join();

  const SeedOutcome* best = nullptr;
  for (const SeedOutcome& outcome : result.seeds) {
    if (!outcome.ok) continue;
    if (!best || outcome.delta_pnl_summary.mean > best->delta_pnl_summary.mean) {
      best = &outcome;
    }
  }
  if (best) {
    result.best.average_return = best->agent_eval.total_return;
    result.best.delta_pnl = best->delta_pnl_summary;
    result.best.effective_cash = best->agent_eval.effective_cash;
    result.best.best_seed = best->seed;
  }

  json seeds_json = json::array();
  for (const SeedOutcome& outcome : result.seeds) {
    json entry{{"seed", outcome.seed},
               {"ok", outcome.ok},
               {"initial_policy_mse", outcome.initial_policy_mse},
               {"final_policy_mse", outcome.final_policy_mse},
               {"aborted_epochs", outcome.aborted_epochs},
               {"average_return", summary_to_json(outcome.agent_eval.total_return)},
               {"delta_pnl", summary_to_json(outcome.delta_pnl_summary)},
               {"effective_cash", summary_to_json(outcome.agent_eval.effective_cash)}};
    if (!outcome.ok) entry["error"] = outcome.error;
    seeds_json.push_back(entry);
  }
  json results{{"algorithm", algo},
               {"environment", config.name},
               {"episodes", config.run.final_eval_episodes},
               {"units",
                {{"average_return", "cash at T, entropy excluded"},
                 {"delta_pnl", "fraction of TWAP effective cash"}}},
               {"twap",
                {{"average_return", summary_to_json(twap_eval.total_return)},
                 {"effective_cash", summary_to_json(twap_eval.effective_cash)}}},
               {"seeds", seeds_json}};
  if (best) results["best"] = algo_stats_to_json(result.best);
  {
    auto out = open_output(base / "results.json");
    out << results.dump(2) << "\n";
  }
  if (!result.all_ok()) {
    json errors = json::array();
    for (const SeedOutcome& outcome : result.seeds) {
      if (!outcome.ok) errors.push_back({{"seed", outcome.seed}, {"error", outcome.error}});
    }
    auto out = open_output(base / "errors.json");
    out << errors.dump(2) << "\n";
  }
  return result;
}

}  // namespace vwaplab
