#include "vwaplab/actor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vwaplab {

ActorNet::ActorNet(DenseNet net, StateScaler scaler)
    : net_(std::move(net)), scaler_(scaler) {
  if (net_.output_size() != 2) {
    throw std::invalid_argument("ActorNet: net must have exactly two outputs");
  }
  if (net_.input_size() != scaler_.input_size()) {
    throw std::invalid_argument("ActorNet: net input width does not match the scaler");
  }
}

GaussianPolicySpec ActorNet::policy_at(double t, const MarketState& state) const {
  const auto input = scaler_.encode(t, state);
  const std::vector<double> out =
      net_.forward(std::span<const double>(input.data(), scaler_.input_size()));
  const double raw_spread = std::clamp(out[1], kLogStdMin, kLogStdMax);
  return {out[0], std::exp(raw_spread)};
}

void ActorNet::accumulate_score(double t, const MarketState& state, double v,
                                double weight, std::span<double> grad) const {
  const auto buffer = scaler_.encode(t, state);
  const std::span<const double> input(buffer.data(), scaler_.input_size());
  const std::vector<double> out = net_.forward(input);
  const bool clamped = out[1] <= kLogStdMin || out[1] >= kLogStdMax;
  const double stdev = std::exp(std::clamp(out[1], kLogStdMin, kLogStdMax));
  const double var = stdev * stdev;
  const double diff = v - out[0];
  // d log pi / d mean and d log pi / d raw spread (std = exp(raw)).
  const double d_mean = diff / var;
  const double d_raw = clamped ? 0.0 : (diff * diff - var) / var;
  const double upstream[2] = {weight * d_mean, weight * d_raw};
  net_.accumulate_param_grad(input, upstream, grad);
}

std::vector<double> ActorNet::score(double t, const MarketState& state, double v) const {
  std::vector<double> grad(net_.param_count(), 0.0);
  accumulate_score(t, state, v, 1.0, grad);
  return grad;
}

SpeedNet::SpeedNet(DenseNet net, StateScaler scaler)
    : net_(std::move(net)), scaler_(scaler) {
  if (net_.output_size() != 1) {
    throw std::invalid_argument("SpeedNet: net must have a single output");
  }
  if (net_.input_size() != scaler_.input_size()) {
    throw std::invalid_argument("SpeedNet: net input width does not match the scaler");
  }
}

double SpeedNet::speed(double t, const MarketState& state) const {
  const auto input = scaler_.encode(t, state);
  return net_.forward(std::span<const double>(input.data(), scaler_.input_size()))[0];
}

}  // namespace vwaplab
