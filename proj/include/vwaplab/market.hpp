#pragma once

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "vwaplab/rng.hpp"

namespace vwaplab {

// Model constants of the simulated market. The market trading speed mu is a
// mean-reverting pure-jump process: decay rate kappa, Poisson jump intensity
// lambda, exponential jump sizes with mean eta_mean (the mean parameterization
// is the one under which the stationary mean lambda*eta_mean/kappa matches the
// default initial speed mu0).
struct MarketParams {
  double kappa = 20.0;     // mean-reversion rate of mu (1/time)
  double lambda = 50.0;    // jump intensity (jumps/time)
  double eta_mean = 10.0;  // mean jump size (speed units)
  double b = 0.1;          // permanent impact (price per unit speed)
  double k = 0.1;          // temporary impact (price per unit speed)
  double alpha = 100.0;    // terminal inventory penalty (price per share)
  double sigma = 0.5;      // midprice volatility (price/sqrt(time))
  double s0 = 20.0;        // initial midprice
  double x0 = 0.0;         // initial cash
  double q0 = 1.25;        // initial inventory to liquidate
  double mu0 = 25.0;       // initial market trading speed

  void validate() const;  // throws std::invalid_argument naming the field
};

struct PenaltyParams {
  double phi = 0.1;      // speed-tracking penalty weight
  double rho = 0.02;     // targeted fraction of the market speed
  double gamma = 0.001;  // exploration temperature

  void validate() const;
};

struct TimeGrid {
  double t_end = 1.0;  // horizon T
  int n_steps = 100;   // grid count G

  double step() const { return t_end / n_steps; }
  double time_at(int node) const { return node * step(); }

  void validate() const;
};

// State vector Y = (S, X, Q, mu) at a grid node.
struct MarketState {
  double s = 0.0;
  double x = 0.0;
  double q = 0.0;
  double mu = 0.0;
  int t_index = 0;
};

struct StepRecord {
  MarketState state;  // pre-step state
  double action = 0.0;
  double reward = 0.0;  // running reward already scaled by the step h
  std::optional<double> log_density;  // absent for deterministic policies
};

struct Trajectory {
  std::vector<StepRecord> steps;
  MarketState terminal_state;
  double terminal_reward = 0.0;

  double total_return() const;  // sum of step rewards plus terminal reward
};

struct PolicyDecision {
  double speed = 0.0;
  std::optional<double> log_density;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual PolicyDecision decide(double t, const MarketState& state, Rng& policy_rng) = 0;
};

// Fixed-speed liquidation at q0 / T.
class TwapPolicy final : public Policy {
 public:
  explicit TwapPolicy(double speed) : speed_(speed) {}
  PolicyDecision decide(double, const MarketState&, Rng&) override { return {speed_, {}}; }

 private:
  double speed_;
};

// Simulated market environment: controlled price/cash/inventory dynamics plus
// the exogenous jump process mu, stepped on a fixed time grid.
class Environment {
 public:
  Environment(MarketParams market, PenaltyParams penalty, TimeGrid grid);

  const MarketParams& market() const { return market_; }
  const PenaltyParams& penalty() const { return penalty_; }
  const TimeGrid& grid() const { return grid_; }

  MarketState initial_state() const;

  double sample_eta(Rng& jump_size) const;

  // One grid step of mu: explicit-Euler decay plus the compound-Poisson sum of
  // jump sizes landing in the step.
  double step_mu(double mu, Rng& jump_count, Rng& jump_size) const;

  // Applies action v for one step. Returns the new state and the running
  // reward -phi (v - rho mu)^2 h, with mu taken before the step.
  std::pair<MarketState, double> step(const MarketState& state, double v,
                                      RunStreams& streams) const;

  double running_reward(double v, double mu) const;

  // f(Y_T) = x + q (s - alpha q); also the effective terminal cash used for
  // PnL comparisons (the residual block priced at s - alpha q).
  double terminal_reward(const MarketState& state) const;

  Trajectory rollout(Policy& policy, RunStreams& streams) const;

 private:
  MarketParams market_;
  PenaltyParams penalty_;
  TimeGrid grid_;
};

// Columns: t_index,t,S,X,Q,mu,v,reward,log_density (empty when deterministic).
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, double step);

}  // namespace vwaplab
