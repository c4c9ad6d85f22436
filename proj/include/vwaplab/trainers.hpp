#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vwaplab/actor.hpp"
#include "vwaplab/closed_form.hpp"
#include "vwaplab/estimators.hpp"
#include "vwaplab/market.hpp"
#include "vwaplab/value_net.hpp"

namespace vwaplab {

enum class Algorithm { Adp, AdpExplore, MlAc, MoAc };

std::string algorithm_name(Algorithm algorithm);
Algorithm algorithm_from_name(const std::string& name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::MoAc;
  int epochs = 1000;
  double critic_rate = 0.0;  // 0 = use the tuned default for the algorithm
  double actor_rate = 0.0;
  LrSchedule schedule{};
  std::uint64_t seed = 1;
  std::string environment_tag = "env1";
  int batch_size = 1;
  int eval_rollouts = 5;
  // Epochs of critic-only training before actor updates start (-1 = tuned
  // default). Against an unconverged critic the single-sample policy updates
  // are violent enough to collapse the Gaussian head for most seeds.
  int warmup_epochs = -1;
  // Critic updates per epoch (-1 = tuned default). The orthogonality
  // condition constrains one test-function projection per update, so that
  // trainer benefits from several draws per episode.
  int critic_inner_steps = -1;
  std::vector<int> hidden_widths = {128, 64, 32};

  void validate() const;
  TrainConfig resolved() const;  // fills zero rates with the per-algorithm defaults
};

struct EpochReport {
  int epoch = 0;
  double mean_return = 0.0;
  double min_return = 0.0;
  double max_return = 0.0;
  double critic_loss = 0.0;
  double policy_mse = 0.0;
  double wall_clock_sec = 0.0;
  bool aborted = false;
};

// ----- update building blocks (also exercised directly by tests) -----

// Accumulates the gradient of E^c = sum_i (g_i - V_i)^2 + (f - V_T)^2 where
// g_i = sum_{j>=i} reward_j + f; returns E^c.
double adp_critic_grad(const Critic& critic, const Trajectory& trajectory,
                       const TimeGrid& grid, std::span<double> grad);

// One descent step on E^c; returns the loss before the step.
double adp_critic_update(Critic& critic, const Trajectory& trajectory,
                         const TimeGrid& grid, double rate);

// First-order-condition target
//   v_hat = (S dV/dx - dV/dq - b_hat dV/dS + 2 phi rho mu) / (2 (k_hat dV/dx + phi)).
// Throws when the denominator term k_hat dV/dx + phi falls below 1e-8.
double adp_target_speed(const DifferentiableCritic& critic, double t,
                        const MarketState& state, const ImpactEstimates& estimates,
                        const PenaltyParams& penalty);

double adp_actor_grad(const SpeedNet& actor, const DifferentiableCritic& critic,
                      const Trajectory& trajectory, const TimeGrid& grid,
                      const ImpactEstimates& estimates, const PenaltyParams& penalty,
                      std::span<double> grad);

// One descent step on E^a = sum_i (actor(Y_i) - v_hat_i)^2 with the targets
// held constant; returns the loss before the step.
double adp_actor_update(SpeedNet& actor, const DifferentiableCritic& critic,
                        const Trajectory& trajectory, const TimeGrid& grid,
                        const ImpactEstimates& estimates, const PenaltyParams& penalty,
                        double rate);

// Critic-derived Gaussian: mean = v_hat, variance = gamma / (2 (phi + k_hat dV/dx)).
GaussianPolicySpec adp_exploratory_policy(const DifferentiableCritic& critic, double t,
                                          const MarketState& state,
                                          const ImpactEstimates& estimates,
                                          const PenaltyParams& penalty);

struct CriticDelta {
  std::vector<double> delta;
  double loss = 0.0;
};

// Martingale-loss direction
//   dTheta = sum_i (f + sum_{j>=i} [reward_j - gamma log pi_j h] - V_i) dV_i/dTheta h,
// applied as ascent. loss reports the sampled squared-error integral.
CriticDelta ml_critic_delta(const Critic& critic, const Trajectory& trajectory,
                            const TimeGrid& grid, double gamma);

// Orthogonality-condition direction: A = sum_i xi_i [dV_i + reward_i - gamma
// log pi_i h] with the terminal increment using the realized f(Y_T);
// dTheta = A sum_i xi_i d(dV_i)/dTheta, applied as descent. loss = A^2.
CriticDelta mo_critic_delta(const Critic& critic, const Trajectory& trajectory,
                            std::span<const double> xi, const TimeGrid& grid,
                            double gamma);

// xi_i ~ Uniform(0,1) for i < G-1, xi_{G-1} = 1.
std::vector<double> draw_test_function(Rng& rng, int n_steps);

// Policy-gradient direction
//   dPhi = sum_i score_i [V_{i+1} - V_i + reward_i - (gamma log pi_i + gamma) h],
// with V at the terminal node taken from the critic; applied as ascent.
std::vector<double> policy_delta(const ActorNet& actor, const Critic& critic,
                                 const Trajectory& trajectory, const TimeGrid& grid,
                                 double gamma);

// Behavior policy for exploratory dynamic programming: samples the
// critic-derived Gaussian built from current impact estimates.
class AdpFocPolicy final : public Policy {
 public:
  AdpFocPolicy(const DifferentiableCritic& critic, const ImpactEstimates& estimates,
               const PenaltyParams& penalty)
      : critic_(&critic), estimates_(&estimates), penalty_(penalty) {}

  PolicyDecision decide(double t, const MarketState& state, Rng& rng) override;

 private:
  const DifferentiableCritic* critic_;
  const ImpactEstimates* estimates_;
  PenaltyParams penalty_;
};

struct TrainOutput {
  Algorithm algorithm = Algorithm::MoAc;
  std::vector<EpochReport> reports;
  double initial_policy_mse = 0.0;
  int aborted_epochs = 0;
  int clipped_updates = 0;
  std::string last_abort;
  std::unique_ptr<DenseCritic> critic;
  std::unique_ptr<ActorNet> gaussian_actor;  // ml-ac / mo-ac
  std::unique_ptr<SpeedNet> speed_actor;     // adp variants
  ImpactEstimates estimates;
  PenaltyParams penalty;

  // Learned-policy views. The TrainOutput must outlive the returned policy.
  std::unique_ptr<Policy> make_policy() const;
  double policy_mean(double t, const MarketState& state) const;
  std::optional<GaussianPolicySpec> policy_spec(double t, const MarketState& state) const;
};

// epoch_hook (optional) runs after every epoch with the partially trained
// output, e.g. to write periodic checkpoints.
using EpochHook = std::function<void(const TrainOutput&, int epoch)>;

TrainOutput train(const Environment& environment, const TrainConfig& config,
                  const EpochHook& epoch_hook = {});

}  // namespace vwaplab
