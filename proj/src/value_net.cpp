#include "vwaplab/value_net.hpp"

#include <stdexcept>

namespace vwaplab {

DenseCritic::DenseCritic(DenseNet net, StateScaler scaler, double output_scale)
    : net_(std::move(net)), scaler_(scaler), output_scale_(output_scale) {
  if (net_.output_size() != 1) {
    throw std::invalid_argument("DenseCritic: net must have a single output");
  }
  if (net_.input_size() != scaler_.input_size()) {
    throw std::invalid_argument("DenseCritic: net input width does not match the scaler");
  }
  if (output_scale_ == 0.0) {
    throw std::invalid_argument("DenseCritic: output scale must be nonzero");
  }
}

double DenseCritic::value(double t, const MarketState& state) const {
  const auto input = scaler_.encode(t, state);
  return output_scale_ *
         net_.forward(std::span<const double>(input.data(), scaler_.input_size()))[0];
}

void DenseCritic::accumulate_param_grad(double t, const MarketState& state,
                                        double upstream, std::span<double> grad) const {
  const auto input = scaler_.encode(t, state);
  const double scaled = upstream * output_scale_;
  net_.accumulate_param_grad(std::span<const double>(input.data(), scaler_.input_size()),
                             std::span<const double>(&scaled, 1), grad);
}

StateGradient DenseCritic::state_gradient(double t, const MarketState& state) const {
  const auto input = scaler_.encode(t, state);
  const std::vector<double> grad =
      net_.input_grad(std::span<const double>(input.data(), scaler_.input_size()));
  // Undo the input scaling to express derivatives in raw state units.
  StateGradient out;
  const int offset = scaler_.include_time ? 1 : 0;
  if (scaler_.include_time) out.dt = output_scale_ * grad[0] / scaler_.divisors[0];
  out.ds = output_scale_ * grad[offset + 0] / scaler_.divisors[1];
  out.dx = output_scale_ * grad[offset + 1] / scaler_.divisors[2];
  out.dq = output_scale_ * grad[offset + 2] / scaler_.divisors[3];
  out.dmu = output_scale_ * grad[offset + 3] / scaler_.divisors[4];
  return out;
}

}  // namespace vwaplab
