#pragma once

#include <span>

#include "vwaplab/dense_net.hpp"
#include "vwaplab/market.hpp"

namespace vwaplab {

// Value-function approximator interface consumed by the trainers. Keeping it
// abstract lets tests substitute tabular or analytic critics for the dense net.
class Critic {
 public:
  virtual ~Critic() = default;

  virtual double value(double t, const MarketState& state) const = 0;
  virtual std::size_t param_count() const = 0;
  virtual std::span<double> params() = 0;
  // grad += upstream * dV/dparams at (t, state)
  virtual void accumulate_param_grad(double t, const MarketState& state,
                                     double upstream, std::span<double> grad) const = 0;
};

// Partial derivatives of the value with respect to the raw state coordinates.
struct StateGradient {
  double dt = 0.0;
  double ds = 0.0;
  double dx = 0.0;
  double dq = 0.0;
  double dmu = 0.0;
};

class DifferentiableCritic : public Critic {
 public:
  virtual StateGradient state_gradient(double t, const MarketState& state) const = 0;
};

// Dense-net critic with scaled inputs and a fixed output scale so the net
// works in O(1) units while targets live on the cash scale s0 * q0.
class DenseCritic final : public DifferentiableCritic {
 public:
  DenseCritic(DenseNet net, StateScaler scaler, double output_scale);

  double value(double t, const MarketState& state) const override;
  std::size_t param_count() const override { return net_.param_count(); }
  std::span<double> params() override { return net_.params(); }
  void accumulate_param_grad(double t, const MarketState& state, double upstream,
                             std::span<double> grad) const override;
  StateGradient state_gradient(double t, const MarketState& state) const override;

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  const StateScaler& scaler() const { return scaler_; }
  double output_scale() const { return output_scale_; }

 private:
  DenseNet net_;
  StateScaler scaler_;
  double output_scale_;
};

}  // namespace vwaplab
