#pragma once

#include <span>

#include "vwaplab/market.hpp"

namespace vwaplab {

struct ImpactEstimates {
  double b_hat = 0.0;
  double k_hat = 0.0;
};

// Maximum-likelihood estimate of the permanent impact from observed midprice
// increments:  b_hat = -sum(dS_i v_i) / sum(v_i^2 h).  The raw least-squares
// slope of dS on v h is -b, so the estimator carries the explicit minus sign.
// Throws when every action is zero.
double estimate_b(std::span<const Trajectory> batch, double step);

// Temporary impact recovered from execution prices. The execution price is
// reconstructed from cash increments (dX = S_hat v h), so the per-step
// identity k = (S_next - S_hat) / v holds exactly; steps with |v| below
// min_speed are skipped. Throws when no step qualifies.
double estimate_k(std::span<const Trajectory> batch, double step,
                  double min_speed = 1e-9);

ImpactEstimates estimate_impacts(std::span<const Trajectory> batch, double step);

}  // namespace vwaplab
