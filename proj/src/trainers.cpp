#include "vwaplab/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace vwaplab {
namespace {

constexpr double kFocDenominatorFloor = 1e-8;

double log_density_or_zero(const StepRecord& record, double gamma) {
  if (record.log_density) return *record.log_density;
  if (gamma == 0.0) return 0.0;
  throw std::runtime_error(
      "trainer: trajectory lacks log densities but gamma > 0 requires them");
}

struct AlgorithmDefaults {
  double critic_rate;
  double actor_rate;
  int warmup_epochs;
  int critic_inner_steps;
};

// Rates tuned per environment preset; the second parameter set (strong
// impacts, phi = 10) tolerates faster critics than the first (alpha = 100).
AlgorithmDefaults tuned_defaults(Algorithm algorithm, const std::string& tag) {
  const bool strong_impact = tag != "env1";
  switch (algorithm) {
    case Algorithm::Adp:
    case Algorithm::AdpExplore:
      return strong_impact ? AlgorithmDefaults{1e-8, 5e-4, 0, 1}
                           : AlgorithmDefaults{5e-9, 2e-4, 0, 1};
    case Algorithm::MlAc:
      return strong_impact ? AlgorithmDefaults{1e-4, 2e-3, 60, 1}
                           : AlgorithmDefaults{2e-5, 2e-4, 60, 1}; 
    case Algorithm::MoAc:
      return strong_impact ? AlgorithmDefaults{1.2e-5, 2e-3, 60, 8}
                           : AlgorithmDefaults{2e-6, 2e-4, 60, 8};
  }
  throw std::logic_error("tuned_defaults: bad algorithm");
}

double node_time(const TimeGrid& grid, std::size_t node) {
  return grid.time_at(static_cast<int>(node));
}

double norm2(std::span<const double> values) {
  double sum = 0.0;
  for (double value : values) sum += value * value;
  return std::sqrt(sum);
}

// Single-sample updates occasionally produce pathological magnitudes (a small
// policy std meets a large value residual); a step whose norm exceeds a
// fraction of the parameter norm is scaled back to that bound. Directions are
// never altered. Returns the number of clipped steps (0 or 1).
int clipped_sgd_step(std::span<double> params, std::span<const double> delta,
                     double rate, bool ascent) {
  const double step_norm = rate * norm2(delta);
  const double cap = 0.25 * (1.0 + norm2(params));
  double applied = rate;
  int clipped = 0;
  if (step_norm > cap) {
    applied = rate * cap / step_norm;
    clipped = 1;
  }
  sgd_step(params, delta, applied, ascent);
  return clipped;
}

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Adp:
      return "adp";
    case Algorithm::AdpExplore:
      return "adp-explore";
    case Algorithm::MlAc:
      return "ml-ac";
    case Algorithm::MoAc:
      return "mo-ac";
  }
  throw std::logic_error("algorithm_name: bad algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "adp") return Algorithm::Adp;
  if (name == "adp-explore") return Algorithm::AdpExplore;
  if (name == "ml-ac") return Algorithm::MlAc;
  if (name == "mo-ac") return Algorithm::MoAc;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig.epochs must be >= 1");
  if (critic_rate < 0.0 || actor_rate < 0.0) {
    throw std::invalid_argument("TrainConfig rates must be positive");
  }
  if (batch_size < 1) throw std::invalid_argument("TrainConfig.batch_size must be >= 1");
  if (eval_rollouts < 1) {
    throw std::invalid_argument("TrainConfig.eval_rollouts must be >= 1");
  }
  if (warmup_epochs < -1) {
    throw std::invalid_argument("TrainConfig.warmup_epochs must be >= 0 (or -1 for auto)");
  }
  if (critic_inner_steps < -1 || critic_inner_steps == 0) {
    throw std::invalid_argument(
        "TrainConfig.critic_inner_steps must be >= 1 (or -1 for auto)");
  }
  if (schedule.interval < 1 || schedule.decay <= 0.0) {
    throw std::invalid_argument("TrainConfig.schedule is invalid");
  }
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig out = *this;
  const AlgorithmDefaults defaults = tuned_defaults(algorithm, environment_tag);
  if (out.critic_rate == 0.0) out.critic_rate = defaults.critic_rate;
  if (out.actor_rate == 0.0) out.actor_rate = defaults.actor_rate;
  if (out.warmup_epochs < 0) out.warmup_epochs = defaults.warmup_epochs;
  if (out.critic_inner_steps < 0) out.critic_inner_steps = defaults.critic_inner_steps;
  out.validate();
  return out;
}

double adp_critic_grad(const Critic& critic, const Trajectory& trajectory,
                       const TimeGrid& grid, std::span<double> grad) {
  const std::size_t n = trajectory.steps.size();
  double loss = 0.0;
  double cumulative = trajectory.terminal_reward;
  std::vector<double> targets(n);
  for (std::size_t i = n; i-- > 0;) {
    cumulative += trajectory.steps[i].reward;
    targets[i] = cumulative;
  }
  // Hold target order ascending in time; the loss itself is order-invariant.
  for (std::size_t i = 0; i < n; ++i) {
    const double t = node_time(grid, i);
    const double value = critic.value(t, trajectory.steps[i].state);
    const double residual = value - targets[i];
    loss += residual * residual;
    critic.accumulate_param_grad(t, trajectory.steps[i].state, 2.0 * residual, grad);
  }
  const double terminal_value = critic.value(grid.t_end, trajectory.terminal_state);
  const double terminal_residual = terminal_value - trajectory.terminal_reward;
  loss += terminal_residual * terminal_residual;
  critic.accumulate_param_grad(grid.t_end, trajectory.terminal_state,
                               2.0 * terminal_residual, grad);
  return loss;
}

double adp_critic_update(Critic& critic, const Trajectory& trajectory,
                         const TimeGrid& grid, double rate) {
  std::vector<double> grad(critic.param_count(), 0.0);
  const double loss = adp_critic_grad(critic, trajectory, grid, grad);
  sgd_step(critic.params(), grad, rate, /*ascent=*/false);
  return loss;
}

double adp_target_speed(const DifferentiableCritic& critic, double t,
                        const MarketState& state, const ImpactEstimates& estimates,
                        const PenaltyParams& penalty) {
  const StateGradient g = critic.state_gradient(t, state);
  const double denominator = estimates.k_hat * g.dx + penalty.phi;
  if (denominator <= kFocDenominatorFloor) {
    throw std::runtime_error("adp_target_speed: k_hat dV/dx + phi = " +
                             std::to_string(denominator) + " at node " +
                             std::to_string(state.t_index) + " (dV/dx = " +
                             std::to_string(g.dx) + ")");
  }
  const double numerator = state.s * g.dx - g.dq - estimates.b_hat * g.ds +
                           2.0 * penalty.phi * penalty.rho * state.mu;
  return numerator / (2.0 * denominator);
}

double adp_actor_grad(const SpeedNet& actor, const DifferentiableCritic& critic,
                      const Trajectory& trajectory, const TimeGrid& grid,
                      const ImpactEstimates& estimates, const PenaltyParams& penalty,
                      std::span<double> grad) {
  double loss = 0.0;
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const double t = node_time(grid, i);
    const MarketState& state = trajectory.steps[i].state;
    const double target = adp_target_speed(critic, t, state, estimates, penalty);
    const double output = actor.speed(t, state);
    const double residual = output - target;
    loss += residual * residual;
    const auto input = actor.scaler().encode(t, state);
    const double upstream = 2.0 * residual;
    actor.net().accumulate_param_grad(
        std::span<const double>(input.data(), actor.scaler().input_size()),
        std::span<const double>(&upstream, 1), grad);
  }
  return loss;
}

double adp_actor_update(SpeedNet& actor, const DifferentiableCritic& critic,
                        const Trajectory& trajectory, const TimeGrid& grid,
                        const ImpactEstimates& estimates, const PenaltyParams& penalty,
                        double rate) {
  std::vector<double> grad(actor.net().param_count(), 0.0);
  const double loss =
      adp_actor_grad(actor, critic, trajectory, grid, estimates, penalty, grad);
  sgd_step(actor.net().params(), grad, rate, /*ascent=*/false);
  return loss;
}

GaussianPolicySpec adp_exploratory_policy(const DifferentiableCritic& critic, double t,
                                          const MarketState& state,
                                          const ImpactEstimates& estimates,
                                          const PenaltyParams& penalty) {
  const double mean = adp_target_speed(critic, t, state, estimates, penalty);
  const StateGradient g = critic.state_gradient(t, state);
  const double denominator = penalty.phi + estimates.k_hat * g.dx;
  return {mean, std::sqrt(penalty.gamma / (2.0 * denominator))};
}

PolicyDecision AdpFocPolicy::decide(double t, const MarketState& state, Rng& rng) {
  const GaussianPolicySpec spec =
      adp_exploratory_policy(*critic_, t, state, *estimates_, penalty_);
  if (spec.std == 0.0) return {spec.mean, {}};
  auto [v, log_density] = gaussian_sample(spec, rng);
  return {v, log_density};
}

CriticDelta ml_critic_delta(const Critic& critic, const Trajectory& trajectory,
                            const TimeGrid& grid, double gamma) {
  const std::size_t n = trajectory.steps.size();
  const double h = grid.step();
  CriticDelta out;
  out.delta.assign(critic.param_count(), 0.0);
  double cumulative = trajectory.terminal_reward;
  std::vector<double> targets(n);
  for (std::size_t i = n; i-- > 0;) {
    cumulative += trajectory.steps[i].reward -
                  gamma * log_density_or_zero(trajectory.steps[i], gamma) * h;
    targets[i] = cumulative;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = node_time(grid, i);
    const double residual = targets[i] - critic.value(t, trajectory.steps[i].state);
    out.loss += residual * residual * h;
    critic.accumulate_param_grad(t, trajectory.steps[i].state, residual * h, out.delta);
  }
  return out;
}

CriticDelta mo_critic_delta(const Critic& critic, const Trajectory& trajectory,
                            std::span<const double> xi, const TimeGrid& grid,
                            double gamma) {
  const std::size_t n = trajectory.steps.size();
  if (xi.size() != n) {
    throw std::invalid_argument("mo_critic_delta: test function length mismatch");
  }
  const double h = grid.step();
  CriticDelta out;
  out.delta.assign(critic.param_count(), 0.0);
  double martingale_residual = 0.0;  // A
  for (std::size_t i = 0; i < n; ++i) {
    const double t = node_time(grid, i);
    const double value = critic.value(t, trajectory.steps[i].state);
    // Terminal increment substitutes the realized terminal reward for the
    // critic's value at T.
    const double next_value =
        (i + 1 < n) ? critic.value(node_time(grid, i + 1), trajectory.steps[i + 1].state)
                    : trajectory.terminal_reward;
    const double increment =
        next_value - value + trajectory.steps[i].reward -
        gamma * log_density_or_zero(trajectory.steps[i], gamma) * h;
    martingale_residual += xi[i] * increment;
    if (i + 1 < n) {
      critic.accumulate_param_grad(node_time(grid, i + 1), trajectory.steps[i + 1].state,
                                   xi[i], out.delta);
    }
    critic.accumulate_param_grad(t, trajectory.steps[i].state, -xi[i], out.delta);
  }
  for (double& d : out.delta) d *= martingale_residual;
  out.loss = martingale_residual * martingale_residual;
  return out;
}

std::vector<double> draw_test_function(Rng& rng, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("draw_test_function: n_steps must be >= 1");
  std::vector<double> xi(n_steps);
  for (int i = 0; i + 1 < n_steps; ++i) xi[i] = rng.uniform01();
  xi[n_steps - 1] = 1.0;
  return xi;
}

std::vector<double> policy_delta(const ActorNet& actor, const Critic& critic,
                                 const Trajectory& trajectory, const TimeGrid& grid,
                                 double gamma) {
  const std::size_t n = trajectory.steps.size();
  const double h = grid.step();
  std::vector<double> delta(actor.net().param_count(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = node_time(grid, i);
    const MarketState& state = trajectory.steps[i].state;
    const double value = critic.value(t, state);
    const double next_value =
        (i + 1 < n) ? critic.value(node_time(grid, i + 1), trajectory.steps[i + 1].state)
                    : critic.value(grid.t_end, trajectory.terminal_state);
    const double log_density = log_density_or_zero(trajectory.steps[i], gamma);
    const double bracket = next_value - value + trajectory.steps[i].reward -
                           (gamma * log_density + gamma) * h;
    actor.accumulate_score(t, state, trajectory.steps[i].action, bracket, delta);
  }
  return delta;
}

namespace {

struct EvalMetrics {
  double mean_return = 0.0;
  double min_return = 0.0;
  double max_return = 0.0;
  double policy_mse = 0.0;
};

EvalMetrics evaluate_policy_epoch(const Environment& environment, Policy& policy,
                                  const std::function<double(double, const MarketState&)>& mean_fn,
                                  const ClosedForm& closed_form, std::uint64_t seed,
                                  std::uint64_t salt, int rollouts) {
  EvalMetrics metrics;
  metrics.min_return = std::numeric_limits<double>::infinity();
  metrics.max_return = -std::numeric_limits<double>::infinity();
  const std::uint64_t eval_seed = derive_stream_seed(seed, Stream::Evaluation, salt);
  double mse_sum = 0.0;
  std::size_t mse_count = 0;
  for (int j = 0; j < rollouts; ++j) {
    RunStreams streams = RunStreams::for_run(eval_seed, static_cast<std::uint64_t>(j));
    const Trajectory trajectory = environment.rollout(policy, streams);
    const double total = trajectory.total_return();
    metrics.mean_return += total;
    metrics.min_return = std::min(metrics.min_return, total);
    metrics.max_return = std::max(metrics.max_return, total);
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
      const double t = environment.grid().time_at(static_cast<int>(i));
      const MarketState& state = trajectory.steps[i].state;
      const double gap = mean_fn(t, state) - closed_form.optimal_speed(t, state);
      mse_sum += gap * gap;
      ++mse_count;
    }
  }
  metrics.mean_return /= rollouts;
  metrics.policy_mse = mse_count ? mse_sum / static_cast<double>(mse_count) : 0.0;
  return metrics;
}

}  // namespace

std::unique_ptr<Policy> TrainOutput::make_policy() const {
  switch (algorithm) {
    case Algorithm::Adp:
      return std::make_unique<SpeedNetPolicy>(*speed_actor);
    case Algorithm::AdpExplore:
      return std::make_unique<AdpFocPolicy>(*critic, estimates, penalty);
    case Algorithm::MlAc:
    case Algorithm::MoAc:
      return std::make_unique<GaussianActorPolicy>(*gaussian_actor);
  }
  throw std::logic_error("TrainOutput::make_policy: bad algorithm");
}

double TrainOutput::policy_mean(double t, const MarketState& state) const {
  switch (algorithm) {
    case Algorithm::Adp:
      return speed_actor->speed(t, state);
    case Algorithm::AdpExplore:
      return adp_target_speed(*critic, t, state, estimates, penalty);
    case Algorithm::MlAc:
    case Algorithm::MoAc:
      return gaussian_actor->policy_at(t, state).mean;
  }
  throw std::logic_error("TrainOutput::policy_mean: bad algorithm");
}

std::optional<GaussianPolicySpec> TrainOutput::policy_spec(double t,
                                                           const MarketState& state) const {
  switch (algorithm) {
    case Algorithm::Adp:
      return std::nullopt;
    case Algorithm::AdpExplore:
      return adp_exploratory_policy(*critic, t, state, estimates, penalty);
    case Algorithm::MlAc:
    case Algorithm::MoAc:
      return gaussian_actor->policy_at(t, state);
  }
  throw std::logic_error("TrainOutput::policy_spec: bad algorithm");
}

TrainOutput train(const Environment& environment, const TrainConfig& raw_config,
                  const EpochHook& epoch_hook) {
  const TrainConfig config = raw_config.resolved();
  const TimeGrid& grid = environment.grid();
  const PenaltyParams& penalty = environment.penalty();
  const bool gaussian_actor_needed =
      config.algorithm == Algorithm::MlAc || config.algorithm == Algorithm::MoAc;
  // The dynamic-programming nets take the bare state vector Y = (S, X, Q, mu);
  // the martingale critics and actors are indexed by (t, Y).
  const bool time_input = gaussian_actor_needed;
  const StateScaler scaler =
      StateScaler::from(environment.market(), grid, time_input);
  // Critic outputs live on the cash scale of the terminal reward: notional
  // plus the worst-case inventory penalty. Keeping the net's raw output O(1)
  // keeps its weights, and hence its state gradients, near their init scale.
  const MarketParams& market = environment.market();
  double output_scale = std::abs(market.s0 * market.q0) +
                        std::abs(market.alpha * market.q0 * market.q0);
  if (output_scale < 1e-12) output_scale = 1.0;
  const ClosedForm closed_form(environment.market(), penalty, grid.t_end);

  std::vector<int> critic_widths{scaler.input_size()};
  critic_widths.insert(critic_widths.end(), config.hidden_widths.begin(),
                       config.hidden_widths.end());
  critic_widths.push_back(1);
  std::vector<int> actor_widths = critic_widths;
  if (gaussian_actor_needed) actor_widths.back() = 2;

  Rng init_rng = make_stream(config.seed, Stream::NetInit);
  TrainOutput out;
  out.algorithm = config.algorithm;
  out.penalty = penalty;
  out.critic = std::make_unique<DenseCritic>(
      DenseNet::random_init(critic_widths, init_rng), scaler, output_scale);
  if (gaussian_actor_needed) {
    out.gaussian_actor = std::make_unique<ActorNet>(
        DenseNet::random_init(actor_widths, init_rng), scaler);
  } else {
    out.speed_actor = std::make_unique<SpeedNet>(
        DenseNet::random_init(actor_widths, init_rng), scaler);
  }

  std::unique_ptr<Policy> behavior;
  std::function<double(double, const MarketState&)> mean_fn;
  switch (config.algorithm) {
    case Algorithm::Adp:
      behavior = std::make_unique<SpeedNetPolicy>(*out.speed_actor);
      mean_fn = [&](double t, const MarketState& s) { return out.speed_actor->speed(t, s); };
      break;
    case Algorithm::AdpExplore:
      behavior = std::make_unique<AdpFocPolicy>(*out.critic, out.estimates, penalty);
      mean_fn = [&](double t, const MarketState& s) {
        return adp_target_speed(*out.critic, t, s, out.estimates, penalty);
      };
      break;
    case Algorithm::MlAc:
    case Algorithm::MoAc:
      behavior = std::make_unique<GaussianActorPolicy>(*out.gaussian_actor);
      mean_fn = [&](double t, const MarketState& s) {
        return out.gaussian_actor->policy_at(t, s).mean;
      };
      break;
  }

  {
    const EvalMetrics initial = evaluate_policy_epoch(
        environment, *behavior, mean_fn, closed_form, config.seed, 0, config.eval_rollouts);
    out.initial_policy_mse = initial.policy_mse;
  }

  int consecutive_aborts = 0;
  std::vector<Trajectory> batch;
  std::vector<double> critic_grad;
  std::vector<double> actor_grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochReport report;
    report.epoch = epoch;
    const double critic_rate = config.schedule.rate(config.critic_rate, epoch);
    const double actor_rate = config.schedule.rate(config.actor_rate, epoch);
    try {
      batch.clear();
      for (int b = 0; b < config.batch_size; ++b) {
        RunStreams streams = RunStreams::for_run(
            config.seed,
            static_cast<std::uint64_t>(epoch) * config.batch_size + b + 1);
        batch.push_back(environment.rollout(*behavior, streams));
      }
      const double inv_batch = 1.0 / config.batch_size;
      switch (config.algorithm) {
        case Algorithm::Adp:
        case Algorithm::AdpExplore: {
          out.estimates = estimate_impacts(batch, grid.step());
          critic_grad.assign(out.critic->param_count(), 0.0);
          double loss = 0.0;
          for (const Trajectory& trajectory : batch) {
            loss += adp_critic_grad(*out.critic, trajectory, grid, critic_grad);
          }
          for (double& g : critic_grad) g *= inv_batch;
          out.clipped_updates += clipped_sgd_step(out.critic->params(), critic_grad,
                                                  critic_rate, /*ascent=*/false);
          report.critic_loss = loss * inv_batch;

          actor_grad.assign(out.speed_actor->net().param_count(), 0.0);
          for (const Trajectory& trajectory : batch) {
            adp_actor_grad(*out.speed_actor, *out.critic, trajectory, grid,
                           out.estimates, penalty, actor_grad);
          }
          for (double& g : actor_grad) g *= inv_batch;
          if (epoch >= config.warmup_epochs) {
            out.clipped_updates += clipped_sgd_step(out.speed_actor->net().params(),
                                                    actor_grad, actor_rate,
                                                    /*ascent=*/false);
          }
          break;
        }
        case Algorithm::MlAc: {
          critic_grad.assign(out.critic->param_count(), 0.0);
          actor_grad.assign(out.gaussian_actor->net().param_count(), 0.0);
          double loss = 0.0;
          for (const Trajectory& trajectory : batch) {
            CriticDelta delta = ml_critic_delta(*out.critic, trajectory, grid, penalty.gamma);
            loss += delta.loss;
            for (std::size_t i = 0; i < critic_grad.size(); ++i) {
              critic_grad[i] += delta.delta[i] * inv_batch;
            }
            const std::vector<double> phi =
                policy_delta(*out.gaussian_actor, *out.critic, trajectory, grid,
                             penalty.gamma);
            for (std::size_t i = 0; i < actor_grad.size(); ++i) {
              actor_grad[i] += phi[i] * inv_batch;
            }
          }
          report.critic_loss = loss * inv_batch;
          out.clipped_updates += clipped_sgd_step(out.critic->params(), critic_grad,
                                                  critic_rate, /*ascent=*/true);
          if (epoch >= config.warmup_epochs) {
            out.clipped_updates += clipped_sgd_step(out.gaussian_actor->net().params(),
                                                    actor_grad, actor_rate,
                                                    /*ascent=*/true);
          }
          break;
        }
        case Algorithm::MoAc: {
          const int inner = config.critic_inner_steps;
          double loss = 0.0;
          Rng xi_rng = make_stream(config.seed, Stream::TestFunction, epoch);
          for (int step_index = 0; step_index < inner; ++step_index) {
            critic_grad.assign(out.critic->param_count(), 0.0);
            double step_loss = 0.0;
            for (const Trajectory& trajectory : batch) {
              const std::vector<double> xi = draw_test_function(xi_rng, grid.n_steps);
              CriticDelta delta =
                  mo_critic_delta(*out.critic, trajectory, xi, grid, penalty.gamma);
              step_loss += delta.loss;
              for (std::size_t i = 0; i < critic_grad.size(); ++i) {
                critic_grad[i] += delta.delta[i] * inv_batch;
              }
            }
            loss += step_loss * inv_batch;
            out.clipped_updates += clipped_sgd_step(out.critic->params(), critic_grad,
                                                    critic_rate, /*ascent=*/false);
          }
          report.critic_loss = loss / inner;
          actor_grad.assign(out.gaussian_actor->net().param_count(), 0.0);
          for (const Trajectory& trajectory : batch) {
            const std::vector<double> phi =
                policy_delta(*out.gaussian_actor, *out.critic, trajectory, grid,
                             penalty.gamma);
            for (std::size_t i = 0; i < actor_grad.size(); ++i) {
              actor_grad[i] += phi[i] * inv_batch;
            }
          }
          if (epoch >= config.warmup_epochs) {
            out.clipped_updates += clipped_sgd_step(out.gaussian_actor->net().params(),
                                                    actor_grad, actor_rate,
                                                    /*ascent=*/true);
          }
          break;
        }
      }
      consecutive_aborts = 0;
    } catch (const std::exception& error) {
      report.aborted = true;
      out.last_abort = error.what();
      ++out.aborted_epochs;
      if (++consecutive_aborts >= 3) {
        throw std::runtime_error("train: stopped after 3 consecutive aborted epochs (" +
                                 out.last_abort + ")");
      }
    }

    const EvalMetrics metrics = evaluate_policy_epoch(
        environment, *behavior, mean_fn, closed_form, config.seed,
        static_cast<std::uint64_t>(epoch) + 1, config.eval_rollouts);
    report.mean_return = metrics.mean_return;
    report.min_return = metrics.min_return;
    report.max_return = metrics.max_return;
    report.policy_mse = metrics.policy_mse;
    report.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.reports.push_back(report);
    if (epoch_hook) epoch_hook(out, epoch);
  }
  return out;
}

}  // namespace vwaplab
