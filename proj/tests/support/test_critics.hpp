#pragma once

#include <span>
#include <vector>

#include "vwaplab/closed_form.hpp"
#include "vwaplab/value_net.hpp"

namespace testsupport {

// Single-parameter critic: V(t, y) = theta everywhere.
class ConstantCritic final : public vwaplab::Critic {
 public:
  explicit ConstantCritic(double value) : params_{value} {}

  double value(double, const vwaplab::MarketState&) const override { return params_[0]; }
  std::size_t param_count() const override { return 1; }
  std::span<double> params() override { return params_; }
  void accumulate_param_grad(double, const vwaplab::MarketState&, double upstream,
                             std::span<double> grad) const override {
    grad[0] += upstream;
  }

 private:
  std::vector<double> params_;
};

// Analytic value surface V = x + qS + w1(t, mu) q + w2(t) q^2 with exact state
// gradients, used as a stand-in for a perfectly trained critic.
class SurrogateCritic final : public vwaplab::DifferentiableCritic {
 public:
  explicit SurrogateCritic(vwaplab::ClosedForm closed_form)
      : closed_form_(std::move(closed_form)) {}

  double value(double t, const vwaplab::MarketState& state) const override {
    return state.x + state.q * state.s + closed_form_.w1(t, state.mu) * state.q +
           closed_form_.w2(t) * state.q * state.q;
  }

  vwaplab::StateGradient state_gradient(double t,
                                        const vwaplab::MarketState& state) const override {
    vwaplab::StateGradient g;
    g.ds = state.q;
    g.dx = 1.0;
    g.dq = state.s + closed_form_.w1(t, state.mu) + 2.0 * closed_form_.w2(t) * state.q;
    g.dmu = closed_form_.l1(t) * state.q;
    return g;
  }

  std::size_t param_count() const override { return 0; }
  std::span<double> params() override { return {}; }
  void accumulate_param_grad(double, const vwaplab::MarketState&, double,
                             std::span<double>) const override {}

 private:
  vwaplab::ClosedForm closed_form_;
};

}  // namespace testsupport
