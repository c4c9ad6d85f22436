#include "vwaplab/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vwaplab {

double gaussian_log_density(const GaussianPolicySpec& spec, double v) {
  if (spec.std <= 0.0) {
    throw std::domain_error("gaussian_log_density: std must be > 0");
  }
  const double z = (v - spec.mean) / spec.std;
  return -0.5 * std::log(2.0 * std::numbers::pi * spec.std * spec.std) - 0.5 * z * z;
}

std::pair<double, double> gaussian_sample(const GaussianPolicySpec& spec, Rng& rng) {
  if (spec.std <= 0.0) {
    throw std::domain_error("gaussian_sample: std must be > 0");
  }
  const double v = spec.mean + spec.std * rng.normal();
  return {v, gaussian_log_density(spec, v)};
}

double entropy_penalized_reward(double reward, double log_density, double gamma,
                                double step) {
  return reward - gamma * log_density * step;
}

}  // namespace vwaplab
