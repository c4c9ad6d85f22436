// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. An optional list of criterion numbers selects a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "support/stats.hpp"
#include "support/tabular_critic.hpp"
#include "vwaplab/closed_form.hpp"
#include "vwaplab/dense_net.hpp"
#include "vwaplab/estimators.hpp"
#include "vwaplab/experiment.hpp"
#include "vwaplab/gaussian.hpp"
#include "vwaplab/trainers.hpp"

using namespace vwaplab;
using testsupport::RunningStats;
using testsupport::TabularCritic;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::function<bool(std::string&)> run;
};

bool check(bool condition, std::string& detail, const std::string& message) {
  if (!condition) {
    if (!detail.empty()) detail += "; ";
    detail += message;
  }
  return condition;
}

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.6g", value);
  return buffer;
}

ExperimentConfig env_config(int which) {
  return builtin_config(which == 1 ? "env1" : "env2");
}

// ---------------------------------------------------------------- criteria

bool criterion_ode_residuals(std::string& detail) {
  bool ok = true;
  for (int which : {1, 2}) {
    const ExperimentConfig config = env_config(which);
    const ClosedForm cf(config.market, config.penalty, config.grid.t_end);
    double worst = 0.0;
    for (int i = 1; i < 100; ++i) {
      const double t = i / 100.0;
      for (auto coeff : {ClosedForm::Coeff::W2, ClosedForm::Coeff::L1,
                         ClosedForm::Coeff::L0}) {
        worst = std::max(worst, cf.ode_residual(t, coeff, 1e-5));
      }
    }
    ok &= check(worst < 1e-6, detail,
                "env" + std::to_string(which) + " max residual " + fmt(worst));
  }
  return ok;
}

bool criterion_gaussian_optimum(std::string& detail) {
  bool ok = true;
  for (int which : {1, 2}) {
    const ExperimentConfig config = env_config(which);
    const ClosedForm cf(config.market, config.penalty, config.grid.t_end);
    Rng rng(314159 + which);
    double worst_gap = 0.0;
    double first_std = -1.0;
    bool std_constant = true;
    for (int draw = 0; draw < 10'000; ++draw) {
      MarketState state;
      state.s = 5.0 + 30.0 * rng.uniform01();
      state.x = -20.0 + 60.0 * rng.uniform01();
      state.q = -0.5 + 2.5 * rng.uniform01();
      state.mu = 80.0 * rng.uniform01();
      const double t = rng.uniform01() * config.grid.t_end;
      const GaussianPolicySpec spec = cf.exploratory_policy(t, state);
      worst_gap = std::max(worst_gap, std::abs(spec.mean - cf.optimal_speed(t, state)));
      if (first_std < 0.0) {
        first_std = spec.std;
      } else if (spec.std != first_std) {
        std_constant = false;
      }
    }
    ok &= check(worst_gap < 1e-12, detail,
                "env" + std::to_string(which) + " mean gap " + fmt(worst_gap));
    ok &= check(std_constant, detail, "std depends on the state");
    const double variance = cf.exploratory_variance();
    ok &= check(variance * 2.0 * (config.penalty.phi + config.market.k) ==
                    config.penalty.gamma,
                detail, "variance law not exact in env" + std::to_string(which));
    ok &= check(first_std == std::sqrt(variance), detail, "std != sqrt(variance)");
    if (which == 1) {
      ok &= check(first_std == 0.05, detail, "env1 std " + fmt(first_std) + " != 0.05");
    }
  }
  return ok;
}

bool criterion_gradients(std::string& detail) {
  const StateScaler scaler = StateScaler::from(MarketParams{}, TimeGrid{});
  Rng rng(271828);
  double worst = 0.0;
  auto relative_gap = [](double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    return std::abs(analytic - numeric) / scale;
  };
  for (int probe = 0; probe < 100; ++probe) {
    DenseNet net = DenseNet::random_init({5, 8, 1}, rng);
    std::vector<double> input(5);
    for (double& x : input) x = 2.0 * rng.uniform01() - 1.0;
    const double upstream = 2.0 * rng.uniform01() - 1.0;
    const std::vector<double> param_grad =
        net.param_grad(input, std::span(&upstream, 1));
    std::span<double> params = net.params();
    auto objective = [&]() { return upstream * net.forward(input)[0]; };
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double saved = params[j];
      const double delta = 1e-5 * std::max(1.0, std::abs(saved));
      params[j] = saved + delta;
      const double plus = objective();
      params[j] = saved - delta;
      const double minus = objective();
      params[j] = saved;
      worst = std::max(worst, relative_gap(param_grad[j], (plus - minus) / (2.0 * delta)));
    }
    const std::vector<double> in_grad = net.input_grad(input);
    for (std::size_t j = 0; j < input.size(); ++j) {
      const double saved = input[j];
      const double delta = 1e-5 * std::max(1.0, std::abs(saved));
      input[j] = saved + delta;
      const double plus = net.forward(input)[0];
      input[j] = saved - delta;
      const double minus = net.forward(input)[0];
      input[j] = saved;
      worst = std::max(worst, relative_gap(in_grad[j], (plus - minus) / (2.0 * delta)));
    }
  }
  // actor score against finite differences of the log density
  for (int probe = 0; probe < 100; ++probe) {
    ActorNet actor(DenseNet::random_init({5, 6, 2}, rng), scaler);
    MarketState state;
    state.s = 20.0 * rng.uniform01() + 5.0;
    state.x = 10.0 * rng.uniform01();
    state.q = 2.0 * rng.uniform01();
    state.mu = 60.0 * rng.uniform01();
    const double t = rng.uniform01();
    const GaussianPolicySpec spec = actor.policy_at(t, state);
    const double v = spec.mean + spec.std * (2.0 * rng.uniform01() - 1.0);
    const std::vector<double> score = actor.score(t, state, v);
    std::span<double> params = actor.net().params();
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double saved = params[j];
      const double delta = 1e-6 * std::max(1.0, std::abs(saved));
      params[j] = saved + delta;
      const double plus = gaussian_log_density(actor.policy_at(t, state), v);
      params[j] = saved - delta;
      const double minus = gaussian_log_density(actor.policy_at(t, state), v);
      params[j] = saved;
      worst = std::max(worst, relative_gap(score[j], (plus - minus) / (2.0 * delta)));
    }
  }
  return check(worst < 1e-6, detail, "max relative gradient error " + fmt(worst));
}

bool criterion_jump_law(std::string& detail) {
  const ExperimentConfig config = env_config(1);
  const Environment env(config.market, config.penalty, config.grid);
  const int n_paths = 100'000;
  const std::vector<int> nodes = {25, 50, 100};  // t = 0.25, 0.5, 1.0
  std::vector<RunningStats> stats(nodes.size());
  for (int path = 0; path < n_paths; ++path) {
    Rng count = make_stream(424242, Stream::JumpCount, path);
    Rng size = make_stream(424242, Stream::JumpSize, path);
    double mu = config.market.mu0;
    std::size_t next = 0;
    for (int i = 1; i <= 100; ++i) {
      mu = env.step_mu(mu, count, size);
      if (next < nodes.size() && i == nodes[next]) {
        stats[next].add(mu);
        ++next;
      }
    }
  }
  bool ok = true;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    // analytic mean: mu0 e^{-kappa t} + lambda eta / kappa (1 - e^{-kappa t}) = 25
    const double gap = std::abs(stats[j].mean() - 25.0);
    ok &= check(gap <= 3.0 * stats[j].stderr_(), detail,
                "t=" + fmt(nodes[j] / 100.0) + " gap " + fmt(gap) + " > 3se " +
                    fmt(3.0 * stats[j].stderr_()));
  }
  return ok;
}

bool criterion_estimators(std::string& detail) {
  bool ok = true;
  // exact recovery on noiseless data, and the sign of the raw slope
  {
    MarketParams market;
    market.sigma = 0.0;
    market.b = 0.5;
    market.k = 0.25;
    Environment env(market, PenaltyParams{}, TimeGrid{});
    TwapPolicy twap(1.0);
    std::vector<Trajectory> batch;
    RunStreams streams = RunStreams::for_run(1);
    batch.push_back(env.rollout(twap, streams));
    const double h = env.grid().step();
    const double b_hat = estimate_b(batch, h);
    ok &= check(std::abs(b_hat - 0.5) < 1e-12, detail, "b_hat " + fmt(b_hat));
    const double k_hat = estimate_k(batch, h);
    ok &= check(std::abs(k_hat - 0.25) < 1e-12, detail, "k_hat " + fmt(k_hat));
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t i = 0; i < batch[0].steps.size(); ++i) {
      const MarketState& next = i + 1 < batch[0].steps.size()
                                    ? batch[0].steps[i + 1].state
                                    : batch[0].terminal_state;
      const double v = batch[0].steps[i].action;
      numerator += (next.s - batch[0].steps[i].state.s) * v;
      denominator += v * v * h;
    }
    const double unsigned_slope = numerator / denominator;
    ok &= check(std::abs(unsigned_slope + 0.5) < 1e-12, detail,
                "raw slope " + fmt(unsigned_slope) + " != -b");
  }
  // 3-SE coverage across 200 noisy trials
  {
    const ExperimentConfig config = env_config(1);
    Environment env(config.market, config.penalty, config.grid);
    TwapPolicy twap(1.25);
    int covered = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      std::vector<Trajectory> batch;
      for (int episode = 0; episode < 2; ++episode) {
        RunStreams streams = RunStreams::for_run(9000 + trial, episode);
        batch.push_back(env.rollout(twap, streams));
      }
      const double h = env.grid().step();
      double information = 0.0;
      for (const Trajectory& trajectory : batch) {
        for (const StepRecord& record : trajectory.steps) {
          information += record.action * record.action * h;
        }
      }
      const double se = config.market.sigma / std::sqrt(information);
      if (std::abs(estimate_b(batch, h) - config.market.b) <= 3.0 * se) ++covered;
    }
    ok &= check(covered >= 198, detail,
                "coverage " + std::to_string(covered) + "/200 below 99%");
  }
  return ok;
}

bool criterion_martingale(std::string& detail) {
  // env2 constants restricted to rho = 0, gamma = 0, where the surrogate
  // x + qS + w2 q^2 is the exact value function of the deterministic optimum.
  ExperimentConfig config = env_config(2);
  config.penalty.rho = 0.0;
  config.penalty.gamma = 0.0;
  const Environment env(config.market, config.penalty, config.grid);
  const ClosedForm cf(config.market, config.penalty, config.grid.t_end);
  DeterministicOptimalPolicy policy(cf);
  const int episodes = 100'000;
  const int n = config.grid.n_steps;
  std::vector<RunningStats> increments(n);
  std::vector<double> w2_at(n + 1);
  for (int i = 0; i <= n; ++i) w2_at[i] = cf.w2(config.grid.time_at(i));
  for (int episode = 0; episode < episodes; ++episode) {
    RunStreams streams = RunStreams::for_run(271, episode);
    const Trajectory trajectory = env.rollout(policy, streams);
    double previous = 0.0;
    double reward_sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      const MarketState& state =
          i < n ? trajectory.steps[i].state : trajectory.terminal_state;
      const double value =
          state.x + state.q * state.s + w2_at[i] * state.q * state.q;
      const double m = value + reward_sum;
      if (i > 0) increments[i - 1].add(m - previous);
      previous = m;
      if (i < n) reward_sum += trajectory.steps[i].reward;
    }
  }
  bool ok = true;
  double worst_ratio = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ratio = std::abs(increments[i].mean()) /
                         std::max(3.0 * increments[i].stderr_(), 1e-300);
    worst_ratio = std::max(worst_ratio, ratio);
    ok &= check(std::abs(increments[i].mean()) <= 3.0 * increments[i].stderr_(), detail,
                "node " + std::to_string(i) + " mean " + fmt(increments[i].mean()) +
                    " se " + fmt(increments[i].stderr_()));
  }
  if (ok) detail = "worst |mean|/3se = " + fmt(worst_ratio);
  return ok;
}

bool criterion_frozen_batch(std::string& detail) {
  bool ok = true;
  const ExperimentConfig config = env_config(1);
  const Environment env(config.market, config.penalty, config.grid);
  const ClosedForm cf(config.market, config.penalty, config.grid.t_end);
  ExploratoryOptimalPolicy policy(cf);
  std::vector<Trajectory> batch;
  for (int episode = 0; episode < 64; ++episode) {
    RunStreams streams = RunStreams::for_run(606, episode);
    batch.push_back(env.rollout(policy, streams));
  }
  const double gamma = config.penalty.gamma;
  const double h = config.grid.step();
  const int n = config.grid.n_steps;

  // ML: gradient ascent on the tabular critic reaches the batch means.
  {
    std::vector<double> oracle(n, 0.0);
    for (const Trajectory& trajectory : batch) {
      double cumulative = trajectory.terminal_reward;
      for (int i = n - 1; i >= 0; --i) {
        cumulative += trajectory.steps[i].reward -
                      gamma * *trajectory.steps[i].log_density * h;
        oracle[i] += cumulative;
      }
    }
    for (double& value : oracle) value /= batch.size();

    TabularCritic critic(config.grid.t_end, n);
    std::vector<double> direction(critic.param_count());
    for (int iteration = 0; iteration < 500; ++iteration) {
      std::fill(direction.begin(), direction.end(), 0.0);
      for (const Trajectory& trajectory : batch) {
        const CriticDelta delta = ml_critic_delta(critic, trajectory, config.grid, gamma);
        for (std::size_t j = 0; j < direction.size(); ++j) {
          direction[j] += delta.delta[j] / batch.size();
        }
      }
      sgd_step(critic.params(), direction, 50.0, /*ascent=*/true);
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(critic.params()[i] - oracle[i]));
    }
    ok &= check(worst < 1e-3, detail, "ML worst node gap " + fmt(worst));
  }

  // MO: repeated descent steps drive the batch-mean squared residual under 1e-6.
  {
    std::vector<std::vector<double>> xis;
    for (std::size_t episode = 0; episode < batch.size(); ++episode) {
      Rng rng = make_stream(606, Stream::TestFunction, episode);
      xis.push_back(draw_test_function(rng, n));
    }
    TabularCritic critic(config.grid.t_end, n);
    std::vector<double> direction(critic.param_count());
    double mean_loss = 1.0;
    for (int iteration = 0; iteration < 60'000 && mean_loss >= 1e-7; ++iteration) {
      std::fill(direction.begin(), direction.end(), 0.0);
      mean_loss = 0.0;
      for (std::size_t episode = 0; episode < batch.size(); ++episode) {
        const CriticDelta delta =
            mo_critic_delta(critic, batch[episode], xis[episode], config.grid, gamma);
        mean_loss += delta.loss / batch.size();
        for (std::size_t j = 0; j < direction.size(); ++j) {
          direction[j] += delta.delta[j] / batch.size();
        }
      }
      sgd_step(critic.params(), direction, 0.02, /*ascent=*/false);
    }
    ok &= check(mean_loss < 1e-6, detail, "MO batch-mean A^2 " + fmt(mean_loss));
  }
  return ok;
}

struct TrainSummary {
  double mean_delta_pnl = 0.0;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  bool ok = false;
};

TrainSummary desk_scale_run(const ExperimentConfig& base, Algorithm algorithm,
                            int epochs) {
  ExperimentConfig config = base;
  config.training.algorithm = algorithm;
  config.training.epochs = epochs;
  config.run.seeds = {1, 2, 3, 4, 5};
  config.run.checkpoint_interval = 0;
  config.run.out_dir = "acceptance_out/" + config.name;
  const ExperimentResult result = run_experiment(config);
  TrainSummary summary;
  if (!result.all_ok()) return summary;
  double pnl = 0.0;
  double initial = 0.0;
  double final_mse = 0.0;
  for (const SeedOutcome& outcome : result.seeds) {
    pnl += outcome.delta_pnl_summary.mean;
    initial += outcome.initial_policy_mse;
    final_mse += outcome.final_policy_mse;
  }
  summary.mean_delta_pnl = pnl / result.seeds.size();
  summary.initial_mse = initial / result.seeds.size();
  summary.final_mse = final_mse / result.seeds.size();
  summary.ok = true;
  return summary;
}

bool criterion_desk_scale(std::string& detail) {
  bool ok = true;
  const int epochs = 1000;
  const std::vector<Algorithm> algorithms = {Algorithm::Adp, Algorithm::MlAc,
                                             Algorithm::MoAc};
  for (Algorithm algorithm : algorithms) {
    const TrainSummary summary = desk_scale_run(env_config(2), algorithm, epochs);
    const std::string name = algorithm_name(algorithm);
    ok &= check(summary.ok, detail, name + " env2 training failed");
    if (!summary.ok) continue;
    ok &= check(summary.mean_delta_pnl > 0.0, detail,
                name + " env2 mean dPnL " + fmt(summary.mean_delta_pnl));
    ok &= check(summary.final_mse < summary.initial_mse / 5.0, detail,
                name + " env2 MSE " + fmt(summary.final_mse) + " vs initial " +
                    fmt(summary.initial_mse));
    std::cout << "    [env2 " << name << "] dPnL " << fmt(summary.mean_delta_pnl)
              << ", MSE " << fmt(summary.initial_mse) << " -> " << fmt(summary.final_mse)
              << "\n";
  }
  for (Algorithm algorithm : algorithms) {
    const TrainSummary summary = desk_scale_run(env_config(1), algorithm, epochs);
    const std::string name = algorithm_name(algorithm);
    ok &= check(summary.ok, detail, name + " env1 training failed");
    if (!summary.ok) continue;
    ok &= check(summary.mean_delta_pnl < 0.0, detail,
                name + " env1 mean dPnL " + fmt(summary.mean_delta_pnl));
    std::cout << "    [env1 " << name << "] dPnL " << fmt(summary.mean_delta_pnl)
              << "\n";
  }
  return ok;
}

bool criterion_optimality_anchor(std::string& detail) {
  bool ok = true;
  for (int which : {1, 2}) {
    const ExperimentConfig config = env_config(which);
    const Environment env(config.market, config.penalty, config.grid);
    ExploratoryOptimalPolicy closed_form_policy(
        ClosedForm(config.market, config.penalty, config.grid.t_end));
    const EvalResult anchor =
        evaluate_policy(env, closed_form_policy, 100, config.run.eval_seed);
    for (Algorithm algorithm : {Algorithm::Adp, Algorithm::MlAc, Algorithm::MoAc}) {
      ExperimentConfig trained_config = config;
      trained_config.training.algorithm = algorithm;
      trained_config.training.epochs = 300;
      trained_config.run.seeds = {1};
      trained_config.run.checkpoint_interval = 0;
      trained_config.run.out_dir =
          "acceptance_out/anchor_" + config.name + "_" + algorithm_name(algorithm);
      const ExperimentResult result = run_experiment(trained_config);
      const std::string name = algorithm_name(algorithm);
      ok &= check(result.all_ok(), detail, name + " training failed");
      if (!result.all_ok()) continue;
      const Summary agent = result.seeds[0].agent_eval.total_return;
      const double agent_se = agent.stdev / 10.0;  // 100 episodes
      ok &= check(anchor.total_return.mean >= agent.mean - 3.0 * agent_se, detail,
                  "env" + std::to_string(which) + " " + name + " mean " +
                      fmt(agent.mean) + " beats anchor " +
                      fmt(anchor.total_return.mean));
    }
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "closed-form coefficient ODE residuals < 1e-6 on interior nodes",
       criterion_ode_residuals},
      {2, "Gaussian optimum: mean matches v*, variance law exact",
       criterion_gaussian_optimum},
      {3, "parameter/input/score gradients match finite differences",
       criterion_gradients},
      {4, "Monte Carlo jump-process mean within 3 SE of the analytic law",
       criterion_jump_law},
      {5, "impact estimators: exactness, sign convention, 3-SE coverage",
       criterion_estimators},
      {6, "martingale increments of the restricted surrogate are mean zero",
       criterion_martingale},
      {7, "frozen-batch critics reach their least-squares oracles",
       criterion_frozen_batch},
      {8, "desk-scale training: dPnL signs and 5x policy-MSE reduction",
       criterion_desk_scale},
      {9, "untrained closed-form policy is not beaten by trained agents",
       criterion_optimality_anchor},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (!selected.empty() && !selected.count(criterion.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& error) {
      detail = std::string("exception: ") + error.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << criterion.number << ". "
              << criterion.title << " (" << fmt(elapsed) << " s)";
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n" << std::flush;
    if (!ok) ++failures;
  }
  return failures;
}
