#pragma once

#include "vwaplab/gaussian.hpp"
#include "vwaplab/market.hpp"

namespace vwaplab {

// Closed-form coefficient functions of the value-function ansatz
// V = x + qS + w0 + w1(t,mu) q + w2(t) q^2 and the policies built from them.
class ClosedForm {
 public:
  ClosedForm(const MarketParams& market, const PenaltyParams& penalty, double t_end);

  double t_end() const { return t_end_; }
  double zeta() const { return zeta_; }

  double w2(double t) const;
  double l1(double t) const;
  double l0(double t) const;
  double w1(double t, double mu) const { return l0(t) + l1(t) * mu; }

  // Deterministic optimal trading speed
  //   v*(t, y) = [phi rho mu - w1/2 - (b/2 + w2) q] / (k + phi).
  double optimal_speed(double t, const MarketState& state) const;

  // Entropy-regularized optimum: Gaussian with
  //   mean = (-w1 - 2 w2 q - b q + 2 phi rho mu) / (2 (phi + k)),
  //   var  = gamma / (2 (phi + k)).
  // The mean coincides with optimal_speed; the two are computed through the
  // differently grouped expressions on purpose so tests can compare them.
  GaussianPolicySpec exploratory_policy(double t, const MarketState& state) const;

  double exploratory_variance() const;

  enum class Coeff { W2, L1, L0 };

  // |central-difference time derivative + algebraic terms| of the coefficient
  // ODE at t, with finite-difference half-width delta.
  double ode_residual(double t, Coeff which, double delta) const;

  const MarketParams& market() const { return market_; }
  const PenaltyParams& penalty() const { return penalty_; }

 private:
  MarketParams market_;
  PenaltyParams penalty_;
  double t_end_;
  double zeta_;
};

double twap_speed(double initial_inventory, double t_end);

class DeterministicOptimalPolicy final : public Policy {
 public:
  explicit DeterministicOptimalPolicy(ClosedForm closed_form)
      : closed_form_(std::move(closed_form)) {}

  PolicyDecision decide(double t, const MarketState& state, Rng&) override {
    return {closed_form_.optimal_speed(t, state), {}};
  }

 private:
  ClosedForm closed_form_;
};

// Samples from the regularized Gaussian optimum; falls back to the
// deterministic speed when gamma = 0.
class ExploratoryOptimalPolicy final : public Policy {
 public:
  explicit ExploratoryOptimalPolicy(ClosedForm closed_form)
      : closed_form_(std::move(closed_form)) {}

  PolicyDecision decide(double t, const MarketState& state, Rng& rng) override;

  GaussianPolicySpec spec_at(double t, const MarketState& state) const {
    return closed_form_.exploratory_policy(t, state);
  }

 private:
  ClosedForm closed_form_;
};

}  // namespace vwaplab
