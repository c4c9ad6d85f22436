#include "vwaplab/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace vwaplab {
namespace {

const MarketState& next_state(const Trajectory& trajectory, std::size_t i) {
  return i + 1 < trajectory.steps.size() ? trajectory.steps[i + 1].state
                                         : trajectory.terminal_state;
}

}  // namespace

double estimate_b(std::span<const Trajectory> batch, double step) {
  double numerator = 0.0;
  double denominator = 0.0;
  for (const Trajectory& trajectory : batch) {
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
      const double v = trajectory.steps[i].action;
      const double ds = next_state(trajectory, i).s - trajectory.steps[i].state.s;
      numerator += ds * v;
      denominator += v * v * step;
    }
  }
  if (denominator == 0.0) {
    throw std::runtime_error("estimate_b: undefined, every action in the batch is zero");
  }
  return -numerator / denominator;
}

double estimate_k(std::span<const Trajectory> batch, double step, double min_speed) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Trajectory& trajectory : batch) {
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
      const double v = trajectory.steps[i].action;
      if (std::abs(v) <= min_speed) continue;
      const MarketState& next = next_state(trajectory, i);
      const double exec_price = (next.x - trajectory.steps[i].state.x) / (v * step);
      sum += (next.s - exec_price) / v;
      ++count;
    }
  }
  if (count == 0) {
    throw std::runtime_error("estimate_k: undefined, no step has |v| above tolerance");
  }
  return sum / static_cast<double>(count);
}

ImpactEstimates estimate_impacts(std::span<const Trajectory> batch, double step) {
  return {estimate_b(batch, step), estimate_k(batch, step)};
}

}  // namespace vwaplab
