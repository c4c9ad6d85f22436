#include "vwaplab/dense_net.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vwaplab {
namespace {

double activate(Activation activation, double x) {
  return activation == Activation::Tanh ? std::tanh(x) : x;
}

double activate_derivative(Activation activation, double y_of_x) {
  // tanh' expressed through the activation value itself
  return activation == Activation::Tanh ? 1.0 - y_of_x * y_of_x : 1.0;
}

std::string activation_name(Activation activation) {
  return activation == Activation::Tanh ? "tanh" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::runtime_error("load_net: unknown activation '" + name + "'");
}

}  // namespace

DenseNet::DenseNet(std::vector<int> widths, Activation hidden_activation)
    : widths_(std::move(widths)), activation_(hidden_activation) {
  if (widths_.size() < 2) {
    throw std::invalid_argument("DenseNet: need at least input and output widths");
  }
  std::size_t count = 0;
  layer_offsets_.push_back(0);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) {
      throw std::invalid_argument("DenseNet: widths must be positive");
    }
    count += static_cast<std::size_t>(widths_[l] + 1) * widths_[l + 1];
    layer_offsets_.push_back(count);
  }
  params_.assign(count, 0.0);
}

DenseNet DenseNet::random_init(std::vector<int> widths, Rng& rng,
                               Activation hidden_activation) {
  DenseNet net(std::move(widths), hidden_activation);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
    const int fan_in = net.widths_[l];
    const int fan_out = net.widths_[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (int i = 0; i < fan_out * fan_in; ++i) {
      net.params_[offset + i] = bound * (2.0 * rng.uniform01() - 1.0);
    }
    offset += static_cast<std::size_t>(fan_out) * (fan_in + 1);  // biases stay zero
  }
  return net;
}

void DenseNet::check_input(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw std::invalid_argument("DenseNet: input size mismatch");
  }
}

void DenseNet::forward_cached(std::span<const double> input,
                              std::vector<double>& activations) const {
  activations.assign(input.begin(), input.end());
  std::size_t offset = 0;
  std::size_t act_offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const bool last = (l + 2 == widths_.size());
    const double* weights = params_.data() + offset;
    const double* bias = weights + static_cast<std::size_t>(fan_out) * fan_in;
    for (int row = 0; row < fan_out; ++row) {
      double sum = bias[row];
      const double* w_row = weights + static_cast<std::size_t>(row) * fan_in;
      for (int col = 0; col < fan_in; ++col) {
        sum += w_row[col] * activations[act_offset + col];
      }
      activations.push_back(last ? sum : activate(activation_, sum));
    }
    offset += static_cast<std::size_t>(fan_out) * (fan_in + 1);
    act_offset += fan_in;
  }
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
  check_input(input);
  thread_local std::vector<double> activations;
  forward_cached(input, activations);
  return {activations.end() - output_size(), activations.end()};
}

void DenseNet::accumulate_param_grad(std::span<const double> input,
                                     std::span<const double> upstream,
                                     std::span<double> grad) const {
  check_input(input);
  if (static_cast<int>(upstream.size()) != output_size()) {
    throw std::invalid_argument("DenseNet: upstream size mismatch");
  }
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("DenseNet: gradient buffer size mismatch");
  }
  thread_local std::vector<double> activations;
  thread_local std::vector<double> delta;
  thread_local std::vector<double> delta_prev;
  forward_cached(input, activations);

  delta.assign(upstream.begin(), upstream.end());
  std::size_t act_end = activations.size() - output_size();
  for (std::size_t l = widths_.size() - 1; l-- > 0;) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const std::size_t offset = layer_offsets_[l];
    const double* weights = params_.data() + offset;
    const double* in_act = activations.data() + act_end - fan_in;
    double* w_grad = grad.data() + offset;
    double* b_grad = w_grad + static_cast<std::size_t>(fan_out) * fan_in;
    const bool last = (l + 2 == widths_.size());

    // Fold the activation derivative into delta unless this is the linear head.
    if (!last) {
      const double* out_act = activations.data() + act_end;
      for (int row = 0; row < fan_out; ++row) {
        delta[row] *= activate_derivative(activation_, out_act[row]);
      }
    }
    for (int row = 0; row < fan_out; ++row) {
      const double d = delta[row];
      double* w_row_grad = w_grad + static_cast<std::size_t>(row) * fan_in;
      for (int col = 0; col < fan_in; ++col) {
        w_row_grad[col] += d * in_act[col];
      }
      b_grad[row] += d;
    }
    if (l > 0) {
      delta_prev.assign(fan_in, 0.0);
      for (int row = 0; row < fan_out; ++row) {
        const double d = delta[row];
        const double* w_row = weights + static_cast<std::size_t>(row) * fan_in;
        for (int col = 0; col < fan_in; ++col) {
          delta_prev[col] += d * w_row[col];
        }
      }
      delta.swap(delta_prev);
      act_end -= fan_in;
    }
  }
}

std::vector<double> DenseNet::param_grad(std::span<const double> input,
                                         std::span<const double> upstream) const {
  std::vector<double> grad(params_.size(), 0.0);
  accumulate_param_grad(input, upstream, grad);
  return grad;
}

std::vector<double> DenseNet::input_grad(std::span<const double> input,
                                         std::span<const double> upstream) const {
  check_input(input);
  if (static_cast<int>(upstream.size()) != output_size()) {
    throw std::invalid_argument("DenseNet: upstream size mismatch");
  }
  thread_local std::vector<double> activations;
  forward_cached(input, activations);

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> delta_prev;
  std::size_t act_end = activations.size() - output_size();
  for (std::size_t l = widths_.size() - 1; l-- > 0;) {
    const int fan_in = widths_[l];
    const int fan_out = widths_[l + 1];
    const double* weights = params_.data() + layer_offsets_[l];
    const bool last = (l + 2 == widths_.size());
    if (!last) {
      const double* out_act = activations.data() + act_end;
      for (int row = 0; row < fan_out; ++row) {
        delta[row] *= activate_derivative(activation_, out_act[row]);
      }
    }
    delta_prev.assign(fan_in, 0.0);
    for (int row = 0; row < fan_out; ++row) {
      const double d = delta[row];
      const double* w_row = weights + static_cast<std::size_t>(row) * fan_in;
      for (int col = 0; col < fan_in; ++col) {
        delta_prev[col] += d * w_row[col];
      }
    }
    delta.swap(delta_prev);
    act_end -= fan_in;
  }
  return delta;
}

std::vector<double> DenseNet::input_grad(std::span<const double> input) const {
  if (output_size() != 1) {
    throw std::invalid_argument("DenseNet: scalar input_grad requires a single output");
  }
  const double one = 1.0;
  return input_grad(input, std::span<const double>(&one, 1));
}

double LrSchedule::factor(int epoch) const {
  if (epoch < 0) epoch = 0;
  return std::pow(decay, epoch / interval);
}

void sgd_step(std::span<double> params, std::span<const double> grad, double rate,
              bool ascent) {
  if (params.size() != grad.size()) {
    throw std::invalid_argument("sgd_step: size mismatch");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("sgd_step: non-finite gradient entry");
    }
  }
  const double signed_rate = ascent ? rate : -rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] += signed_rate * grad[i];
  }
}

StateScaler StateScaler::from(const MarketParams& market, const TimeGrid& grid,
                              bool include_time) {
  auto safe = [](double value) { return std::abs(value) > 1e-12 ? value : 1.0; };
  StateScaler scaler;
  scaler.divisors = {safe(grid.t_end), safe(market.s0), safe(market.s0 * market.q0),
                     safe(market.q0), safe(market.mu0)};
  scaler.include_time = include_time;
  return scaler;
}

std::array<double, 5> StateScaler::encode(double t, const MarketState& state) const {
  if (include_time) {
    return {t / divisors[0], state.s / divisors[1], state.x / divisors[2],
            state.q / divisors[3], state.mu / divisors[4]};
  }
  return {state.s / divisors[1], state.x / divisors[2], state.q / divisors[3],
          state.mu / divisors[4], 0.0};
}

void save_net(std::ostream& out, const DenseNet& net, const StateScaler& scaler,
              const std::string& kind, double output_scale) {
  out << "vwaplab-net 1\n";
  out << "kind " << kind << "\n";
  out << "widths";
  for (int w : net.widths()) out << " " << w;
  out << "\n";
  out << "activation " << activation_name(net.hidden_activation()) << "\n";
  char buffer[64];
  out << "scaler";
  for (double d : scaler.divisors) {
    std::snprintf(buffer, sizeof(buffer), " %.17g", d);
    out << buffer;
  }
  out << "\n";
  out << "time_input " << (scaler.include_time ? 1 : 0) << "\n";
  std::snprintf(buffer, sizeof(buffer), "%.17g", output_scale);
  out << "output_scale " << buffer << "\n";
  out << "params " << net.param_count() << "\n";
  for (double p : net.params()) {
    std::snprintf(buffer, sizeof(buffer), "%.17g\n", p);
    out << buffer;
  }
}

LoadedNet load_net(std::istream& in) {
  auto expect = [&](const std::string& tag) {
    std::string token;
    if (!(in >> token) || token != tag) {
      throw std::runtime_error("load_net: expected '" + tag + "'");
    }
  };
  expect("vwaplab-net");
  int version = 0;
  in >> version;
  if (version != 1) throw std::runtime_error("load_net: unsupported version");

  expect("kind");
  std::string kind;
  in >> kind;

  expect("widths");
  std::string line;
  std::getline(in, line);
  std::istringstream widths_in(line);
  std::vector<int> widths;
  for (int w; widths_in >> w;) widths.push_back(w);

  expect("activation");
  std::string activation;
  in >> activation;

  expect("scaler");
  StateScaler scaler;
  for (double& d : scaler.divisors) in >> d;

  expect("time_input");
  int time_input = 1;
  in >> time_input;
  scaler.include_time = time_input != 0;

  expect("output_scale");
  double output_scale = 1.0;
  in >> output_scale;

  expect("params");
  std::size_t count = 0;
  in >> count;

  DenseNet net(widths, activation_from_name(activation));
  if (net.param_count() != count) {
    throw std::runtime_error("load_net: parameter count does not match widths");
  }
  for (double& p : net.params()) {
    if (!(in >> p)) throw std::runtime_error("load_net: truncated parameter block");
  }
  return {std::move(net), scaler, kind, output_scale};
}

}  // namespace vwaplab
