#pragma once

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vwaplab/closed_form.hpp"
#include "vwaplab/market.hpp"
#include "vwaplab/trainers.hpp"

namespace vwaplab {

struct RunConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "out";
  int eval_rollouts_per_epoch = 5;
  int final_eval_episodes = 100;
  int checkpoint_interval = 200;
  std::uint64_t eval_seed = 777;  // common out-of-sample test set for all policies

  void validate() const;
};

struct ExperimentConfig {
  std::string name = "custom";
  MarketParams market;
  PenaltyParams penalty;
  TimeGrid grid;
  TrainConfig training;
  RunConfig run;

  void validate() const;
  Environment make_environment() const { return Environment(market, penalty, grid); }
};

// Built-in presets "env1" and "env2".
ExperimentConfig builtin_config(const std::string& name);

// Strict JSON loader: unknown keys are errors, all invariants checked.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& root);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;
  double min = 0.0;
  double max = 0.0;

  static Summary of(const std::vector<double>& values);
};

struct EvalResult {
  Summary total_return;    // running rewards (entropy excluded) + terminal reward
  Summary effective_cash;  // x_T + q_T (s_T - alpha q_T)
  std::vector<double> returns;
  std::vector<double> cashes;
};

EvalResult evaluate_policy(const Environment& environment, Policy& policy,
                           int n_episodes, std::uint64_t eval_seed);

// (agent - twap) / twap; throws on a zero benchmark.
double delta_pnl(double agent_terminal_cash, double twap_terminal_cash);

struct AlgoStats {
  Summary average_return;
  Summary delta_pnl;
  Summary effective_cash;
  std::uint64_t best_seed = 0;
};

struct ComparisonReport {
  std::string environment;
  int episodes = 0;
  std::map<std::string, AlgoStats> algorithms;
};

nlohmann::json comparison_to_json(const ComparisonReport& report);
ComparisonReport comparison_from_json(const nlohmann::json& root);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double initial_policy_mse = 0.0;
  double final_policy_mse = 0.0;
  int aborted_epochs = 0;
  EvalResult agent_eval;
  std::vector<double> delta_pnls;  // paired per-episode against TWAP
  Summary delta_pnl_summary;
};

struct ExperimentResult {
  std::string algorithm;
  std::string out_dir;
  EvalResult twap_eval;
  std::vector<SeedOutcome> seeds;
  AlgoStats best;  // stats of the best seed by mean delta PnL

  bool all_ok() const;
};

// Trains every seed (in parallel), writes per-seed training_curve.csv,
// policy_mse.csv, checkpoints and heatmap.csv, runs the final out-of-sample
// evaluation against TWAP and writes results.json. Seed failures are recorded
// and do not stop the other seeds.
ExperimentResult run_experiment(const ExperimentConfig& config);

using SpecFn = std::function<GaussianPolicySpec(double, const MarketState&)>;

// One rollout of the policy; per visited node, the Gaussian action density on
// a shared action grid. Columns: t_index,t,v,density.
void write_policy_heatmap(std::ostream& out, const Environment& environment,
                          Policy& policy, const SpecFn& spec_fn, std::uint64_t seed);

// (t, mu, q, mean, std) grid over the time nodes and fractions of mu0 / q0.
void write_policy_table(std::ostream& out, const Environment& environment,
                        const SpecFn& spec_fn);

void write_training_curve(std::ostream& out, const std::vector<EpochReport>& reports);
void write_policy_mse(std::ostream& out, const std::vector<EpochReport>& reports);

}  // namespace vwaplab
