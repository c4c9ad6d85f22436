#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vwaplab/value_net.hpp"

namespace testsupport {

// One free parameter per grid node: V(t, .) = theta_{round(t/h)}. Lets the
// critic-update oracles be solved in closed form.
class TabularCritic final : public vwaplab::Critic {
 public:
  TabularCritic(double t_end, int n_steps)
      : t_end_(t_end), n_steps_(n_steps), params_(n_steps + 1, 0.0) {}

  int node(double t) const {
    const int i = static_cast<int>(std::lround(t / (t_end_ / n_steps_)));
    if (i < 0 || i > n_steps_) throw std::out_of_range("TabularCritic: bad node");
    return i;
  }

  double value(double t, const vwaplab::MarketState&) const override {
    return params_[node(t)];
  }

  std::size_t param_count() const override { return params_.size(); }

  std::span<double> params() override { return params_; }

  void accumulate_param_grad(double t, const vwaplab::MarketState&, double upstream,
                             std::span<double> grad) const override {
    grad[node(t)] += upstream;
  }

 private:
  double t_end_;
  int n_steps_;
  std::vector<double> params_;
};

}  // namespace testsupport
