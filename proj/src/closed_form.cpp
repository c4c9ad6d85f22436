#include "vwaplab/closed_form.hpp"

#include <cmath>
#include <stdexcept>

namespace vwaplab {

ClosedForm::ClosedForm(const MarketParams& market, const PenaltyParams& penalty,
                       double t_end)
    : market_(market), penalty_(penalty), t_end_(t_end) {
  if (market_.alpha <= 0.5 * market_.b) {
    throw std::domain_error("ClosedForm: requires alpha > b/2");
  }
  zeta_ = (market_.k + penalty_.phi) / (market_.alpha - 0.5 * market_.b);
}

double ClosedForm::w2(double t) const {
  const double denom = (t_end_ - t) / (market_.k + penalty_.phi) +
                       1.0 / (market_.alpha - 0.5 * market_.b);
  return -1.0 / denom - 0.5 * market_.b;
}

double ClosedForm::l1(double t) const {
  const double tau = t_end_ - t;
  return 2.0 * penalty_.phi * penalty_.rho / (tau + zeta_) *
         (1.0 - std::exp(-market_.kappa * tau)) / market_.kappa;
}

double ClosedForm::l0(double t) const {
  const double tau = t_end_ - t;
  const double kappa = market_.kappa;
  return 2.0 * penalty_.phi * penalty_.rho * market_.lambda * market_.eta_mean /
         (tau + zeta_) * (std::exp(-kappa * tau) - 1.0 + kappa * tau) / (kappa * kappa);
}

double ClosedForm::optimal_speed(double t, const MarketState& state) const {
  const double tracking = penalty_.phi * penalty_.rho * state.mu - 0.5 * w1(t, state.mu);
  const double liquidation = (0.5 * market_.b + w2(t)) * state.q;
  return (tracking - liquidation) / (market_.k + penalty_.phi);
}

double ClosedForm::exploratory_variance() const {
  return penalty_.gamma / (2.0 * (penalty_.phi + market_.k));
}

GaussianPolicySpec ClosedForm::exploratory_policy(double t, const MarketState& state) const {
  const double mean =
      (-w1(t, state.mu) - 2.0 * w2(t) * state.q - market_.b * state.q +
       2.0 * penalty_.phi * penalty_.rho * state.mu) /
      (2.0 * (penalty_.phi + market_.k));
  return {mean, std::sqrt(exploratory_variance())};
}

double ClosedForm::ode_residual(double t, Coeff which, double delta) const {
  const double kphi = market_.k + penalty_.phi;
  const double shifted = w2(t) + 0.5 * market_.b;
  // Five-point stencil: the coefficients steepen sharply near t = T (their
  // higher derivatives grow like powers of 1/zeta), where a second-order
  // difference at this half-width would swamp the residual with truncation.
  auto derivative = [&](auto&& f) {
    return (-f(t + 2.0 * delta) + 8.0 * f(t + delta) - 8.0 * f(t - delta) +
            f(t - 2.0 * delta)) /
           (12.0 * delta);
  };
  switch (which) {
    case Coeff::W2: {
      const double dt = derivative([&](double u) { return w2(u); });
      return std::abs(dt + shifted * shifted / kphi);
    }
    case Coeff::L1: {
      const double dt = derivative([&](double u) { return l1(u); });
      const double value = l1(t);
      return std::abs(dt - market_.kappa * value +
                      (value - 2.0 * penalty_.phi * penalty_.rho) * shifted / kphi);
    }
    case Coeff::L0: {
      const double dt = derivative([&](double u) { return l0(u); });
      return std::abs(dt + shifted / kphi * l0(t) +
                      market_.lambda * market_.eta_mean * l1(t));
    }
  }
  throw std::logic_error("ode_residual: bad coefficient tag");
}

double twap_speed(double initial_inventory, double t_end) {
  return initial_inventory / t_end;
}

PolicyDecision ExploratoryOptimalPolicy::decide(double t, const MarketState& state,
                                                Rng& rng) {
  const GaussianPolicySpec spec = closed_form_.exploratory_policy(t, state);
  if (spec.std == 0.0) return {spec.mean, {}};
  auto [v, log_density] = gaussian_sample(spec, rng);
  return {v, log_density};
}

}  // namespace vwaplab
