#pragma once

#include <span>
#include <vector>

#include "vwaplab/dense_net.hpp"
#include "vwaplab/gaussian.hpp"
#include "vwaplab/market.hpp"

namespace vwaplab {

// Network-backed Gaussian policy. The net has two outputs: the mean and a raw
// spread mapped through exp(clamp(., -10, 3)) so the std stays positive and
// the log density stays bounded under arbitrary parameter values.
class ActorNet {
 public:
  static constexpr double kLogStdMin = -10.0;
  static constexpr double kLogStdMax = 3.0;

  ActorNet(DenseNet net, StateScaler scaler);

  GaussianPolicySpec policy_at(double t, const MarketState& state) const;

  // d log pi(v | t, state) / d params via the chain rule through (mean, std).
  std::vector<double> score(double t, const MarketState& state, double v) const;

  // grad += weight * score(t, state, v)
  void accumulate_score(double t, const MarketState& state, double v, double weight,
                        std::span<double> grad) const;

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  const StateScaler& scaler() const { return scaler_; }

 private:
  DenseNet net_;
  StateScaler scaler_;
};

class GaussianActorPolicy final : public Policy {
 public:
  explicit GaussianActorPolicy(const ActorNet& actor) : actor_(&actor) {}

  PolicyDecision decide(double t, const MarketState& state, Rng& rng) override {
    auto [v, log_density] = gaussian_sample(actor_->policy_at(t, state), rng);
    return {v, log_density};
  }

 private:
  const ActorNet* actor_;
};

// Deterministic speed net (single output), used by the dynamic-programming
// trainer.
class SpeedNet {
 public:
  SpeedNet(DenseNet net, StateScaler scaler);

  double speed(double t, const MarketState& state) const;

  DenseNet& net() { return net_; }
  const DenseNet& net() const { return net_; }
  const StateScaler& scaler() const { return scaler_; }

 private:
  DenseNet net_;
  StateScaler scaler_;
};

class SpeedNetPolicy final : public Policy {
 public:
  explicit SpeedNetPolicy(const SpeedNet& actor) : actor_(&actor) {}

  PolicyDecision decide(double t, const MarketState& state, Rng&) override {
    return {actor_->speed(t, state), {}};
  }

 private:
  const SpeedNet* actor_;
};

}  // namespace vwaplab
