#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vwaplab/market.hpp"
#include "vwaplab/rng.hpp"

namespace vwaplab {

enum class Activation { Tanh, Identity };

// Small dense feedforward approximator with exact reverse-mode gradients with
// respect to both the flat parameter vector and the inputs. Parameters are
// laid out layer by layer: the (fan_out x fan_in) weight matrix row-major,
// then the bias vector.
class DenseNet {
 public:
  DenseNet(std::vector<int> widths, Activation hidden_activation = Activation::Tanh);

  // Uniform fan-scaled init on weights, zero biases.
  static DenseNet random_init(std::vector<int> widths, Rng& rng,
                              Activation hidden_activation = Activation::Tanh);

  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  Activation hidden_activation() const { return activation_; }

  std::size_t param_count() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;

  // grad += d(upstream . output)/d(params). upstream has output_size entries.
  void accumulate_param_grad(std::span<const double> input,
                             std::span<const double> upstream,
                             std::span<double> grad) const;

  std::vector<double> param_grad(std::span<const double> input,
                                 std::span<const double> upstream) const;

  // d(upstream . output)/d(input).
  std::vector<double> input_grad(std::span<const double> input,
                                 std::span<const double> upstream) const;

  // Scalar-output shortcut; rejects multi-output nets.
  std::vector<double> input_grad(std::span<const double> input) const;

 private:
  void check_input(std::span<const double> input) const;
  void forward_cached(std::span<const double> input,
                      std::vector<double>& activations) const;

  std::vector<int> widths_;
  Activation activation_;
  std::vector<double> params_;
  std::vector<std::size_t> layer_offsets_;
};

// rate(m) = initial * decay^floor(m / interval), epochs counted from 0.
struct LrSchedule {
  double decay = 0.9;
  int interval = 10;

  double factor(int epoch) const;
  double rate(double initial, int epoch) const { return initial * factor(epoch); }
};

// params +/- rate * grad. Throws on a non-finite gradient entry so callers
// can abort the epoch with a diagnostic.
void sgd_step(std::span<double> params, std::span<const double> grad, double rate,
              bool ascent);

// Fixed affine input map so raw state coordinates of very different magnitudes
// reach the nets on comparable scales: (t/T, S/s0, X/(s0 q0), Q/q0, mu/mu0).
// include_time = false drops the leading time coordinate, for critics and
// actors fed the bare state vector Y.
struct StateScaler {
  std::array<double, 5> divisors{1.0, 1.0, 1.0, 1.0, 1.0};
  bool include_time = true;

  static StateScaler from(const MarketParams& market, const TimeGrid& grid,
                          bool include_time = true);

  int input_size() const { return include_time ? 5 : 4; }

  // Fills the first input_size() slots; the tail stays zero.
  std::array<double, 5> encode(double t, const MarketState& state) const;
};

// Textual checkpoint: header (kind, widths, activation, scaling constants,
// output scale) followed by the flat parameter vector.
void save_net(std::ostream& out, const DenseNet& net, const StateScaler& scaler,
              const std::string& kind, double output_scale);

struct LoadedNet {
  DenseNet net;
  StateScaler scaler;
  std::string kind;
  double output_scale = 1.0;
};

LoadedNet load_net(std::istream& in);

}  // namespace vwaplab
