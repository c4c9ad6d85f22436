#pragma once

#include <utility>

#include "vwaplab/rng.hpp"

namespace vwaplab {

// Mean/std description of a Gaussian policy at one (t, state); std = 0
// collapses to the deterministic policy.
struct GaussianPolicySpec {
  double mean = 0.0;
  double std = 0.0;
};

double gaussian_log_density(const GaussianPolicySpec& spec, double v);

// Draws v = mean + std * Z and returns (v, log density at v). Requires std > 0.
std::pair<double, double> gaussian_sample(const GaussianPolicySpec& spec, Rng& rng);

// Per-step regularized reward: reward - gamma * log_density * step.
// The incoming reward is already scaled by the step.
double entropy_penalized_reward(double reward, double log_density, double gamma,
                                double step);

}  // namespace vwaplab
