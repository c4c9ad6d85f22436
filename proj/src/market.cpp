#include "vwaplab/market.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace vwaplab {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void MarketParams::validate() const {
  require(kappa > 0.0, "MarketParams.kappa must be > 0");
  require(lambda >= 0.0, "MarketParams.lambda must be >= 0");
  require(eta_mean > 0.0, "MarketParams.eta_mean must be > 0");
  require(b >= 0.0, "MarketParams.b must be >= 0");
  require(k >= 0.0, "MarketParams.k must be >= 0");
  // alpha > b/2 keeps zeta and w2 finite
  require(alpha > 0.5 * b, "MarketParams.alpha must be > b/2");
  require(sigma >= 0.0, "MarketParams.sigma must be >= 0");
  require(mu0 >= 0.0, "MarketParams.mu0 must be >= 0");
  for (double value : {kappa, lambda, eta_mean, b, k, alpha, sigma, s0, x0, q0, mu0}) {
    require(std::isfinite(value), "MarketParams has a non-finite field");
  }
}

void PenaltyParams::validate() const {
  require(phi > 0.0, "PenaltyParams.phi must be > 0");
  require(rho >= 0.0, "PenaltyParams.rho must be >= 0");
  require(gamma >= 0.0, "PenaltyParams.gamma must be >= 0");
  for (double value : {phi, rho, gamma}) {
    require(std::isfinite(value), "PenaltyParams has a non-finite field");
  }
}

void TimeGrid::validate() const {
  require(n_steps >= 1, "TimeGrid.n_steps must be >= 1");
  require(t_end > 0.0 && std::isfinite(t_end), "TimeGrid.t_end must be positive and finite");
}

double Trajectory::total_return() const {
  double total = terminal_reward;
  for (const StepRecord& record : steps) total += record.reward;
  return total;
}

Environment::Environment(MarketParams market, PenaltyParams penalty, TimeGrid grid)
    : market_(market), penalty_(penalty), grid_(grid) {
  market_.validate();
  penalty_.validate();
  grid_.validate();
  // Explicit-Euler decay (1 - kappa h) must stay a contraction.
  if (market_.kappa * grid_.step() >= 1.0) {
    throw std::invalid_argument("Environment: kappa * step must be < 1");
  }
}

MarketState Environment::initial_state() const {
  return MarketState{market_.s0, market_.x0, market_.q0, market_.mu0, 0};
}

double Environment::sample_eta(Rng& jump_size) const {
  return jump_size.exponential_mean(market_.eta_mean);
}

double Environment::step_mu(double mu, Rng& jump_count, Rng& jump_size) const {
  const double h = grid_.step();
  double jump_sum = 0.0;
  if (market_.lambda > 0.0) {
    const long n = jump_count.poisson(market_.lambda * h);
    for (long j = 0; j < n; ++j) jump_sum += sample_eta(jump_size);
  }
  return (1.0 - market_.kappa * h) * mu + jump_sum;
}

double Environment::running_reward(double v, double mu) const {
  const double gap = v - penalty_.rho * mu;
  return -penalty_.phi * gap * gap * grid_.step();
}

std::pair<MarketState, double> Environment::step(const MarketState& state, double v,
                                                 RunStreams& streams) const {
  const double h = grid_.step();
  const double z = streams.price.normal();
  MarketState next;
  next.s = state.s - market_.b * v * h + market_.sigma * std::sqrt(h) * z;
  const double exec_price = next.s - market_.k * v;
  next.x = state.x + exec_price * v * h;
  next.q = state.q - v * h;
  next.mu = step_mu(state.mu, streams.jump_count, streams.jump_size);
  next.t_index = state.t_index + 1;
  return {next, running_reward(v, state.mu)};
}

double Environment::terminal_reward(const MarketState& state) const {
  return state.x + state.q * (state.s - market_.alpha * state.q);
}

Trajectory Environment::rollout(Policy& policy, RunStreams& streams) const {
  Trajectory trajectory;
  trajectory.steps.reserve(grid_.n_steps);
  MarketState state = initial_state();
  for (int i = 0; i < grid_.n_steps; ++i) {
    const double t = grid_.time_at(i);
    const PolicyDecision decision = policy.decide(t, state, streams.policy);
    if (!std::isfinite(decision.speed)) {
      throw std::runtime_error("rollout: non-finite action at node " + std::to_string(i));
    }
    auto [next, reward] = step(state, decision.speed, streams);
    trajectory.steps.push_back({state, decision.speed, reward, decision.log_density});
    state = next;
  }
  trajectory.terminal_state = state;
  trajectory.terminal_reward = terminal_reward(state);
  return trajectory;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, double step) {
  out << "t_index,t,S,X,Q,mu,v,reward,log_density\n";
  char line[512];
  for (const StepRecord& record : trajectory.steps) {
    const MarketState& y = record.state;
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  y.t_index, y.t_index * step, y.s, y.x, y.q, y.mu, record.action,
                  record.reward);
    out << line;
    if (record.log_density) {
      std::snprintf(line, sizeof(line), ",%.17g", *record.log_density);
      out << line;
    } else {
      out << ",";
    }
    out << "\n";
  }
}

}  // namespace vwaplab
