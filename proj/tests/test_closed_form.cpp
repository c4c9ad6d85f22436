#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "vwaplab/closed_form.hpp"
#include "vwaplab/market.hpp"

using namespace vwaplab;

namespace {

MarketParams market_env1() { return MarketParams{}; }

MarketParams market_env2() {
  MarketParams market;
  market.b = 0.5;
  market.k = 0.5;
  market.alpha = 10.0;
  return market;
}

PenaltyParams penalty_env1() { return PenaltyParams{}; }

PenaltyParams penalty_env2() {
  PenaltyParams penalty;
  penalty.phi = 10.0;
  return penalty;
}

MarketState state_at(double q, double mu) { return MarketState{20.0, 0.0, q, mu, 0}; }

}  // namespace

TEST_CASE("coefficients hit their terminal conditions") {
  const ClosedForm cf(market_env1(), penalty_env1(), 1.0);
  CHECK(cf.w2(1.0) == doctest::Approx(-100.0).epsilon(1e-14));
  CHECK(cf.l1(1.0) == 0.0);
  CHECK(cf.l0(1.0) == 0.0);

  const ClosedForm cf2(market_env2(), penalty_env2(), 1.0);
  CHECK(cf2.w2(1.0) == doctest::Approx(-10.0).epsilon(1e-14));
  CHECK(cf2.l1(1.0) == 0.0);
  CHECK(cf2.l0(1.0) == 0.0);
}

TEST_CASE("coefficients at t = 0 match the independently computed values") {
  // Frozen from a high-precision evaluation of the same formulas.
  const ClosedForm cf(market_env1(), penalty_env1(), 1.0);
  CHECK(cf.w2(0.0) == doctest::Approx(-0.24960059910134796).epsilon(1e-13));
  CHECK(cf.l1(0.0) == doctest::Approx(0.00019960059868994045).epsilon(1e-13));
  CHECK(cf.l0(0.0) == doctest::Approx(0.094810284583425469).epsilon(1e-13));
  CHECK(cf.zeta() == doctest::Approx(0.0020010005002501249).epsilon(1e-13));
  CHECK(cf.w2(0.5) == doctest::Approx(-0.44840558046836071).epsilon(1e-13));
  CHECK(cf.l1(0.5) == doctest::Approx(0.00039838749288299044).epsilon(1e-13));
  CHECK(cf.l0(0.5) == doctest::Approx(0.089641707795015416).epsilon(1e-13));

  const ClosedForm cf2(market_env2(), penalty_env2(), 1.0);
  CHECK(cf2.w2(0.0) == doctest::Approx(-5.3055555555555554).epsilon(1e-13));
  CHECK(cf2.l1(0.0) == doctest::Approx(0.0096296296097814864).epsilon(1e-13));
  CHECK(cf2.l0(0.0) == doctest::Approx(4.5740740745702775).epsilon(1e-13));
  CHECK(cf2.zeta() == doctest::Approx(1.0769230769230769).epsilon(1e-13));
}

TEST_CASE("rho = 0 kills the tracking coefficients") {
  PenaltyParams penalty;
  penalty.rho = 0.0;
  const ClosedForm cf(market_env1(), penalty, 1.0);
  for (double t : {0.0, 0.3, 0.7, 0.99}) {
    CHECK(cf.l1(t) == 0.0);
    CHECK(cf.l0(t) == 0.0);
  }
}

TEST_CASE("optimal speed at the initial state matches the frozen oracle") {
  const ClosedForm cf(market_env1(), penalty_env1(), 1.0);
  CHECK(cf.optimal_speed(0.0, state_at(1.25, 25.0)) ==
        doctest::Approx(1.2480029955067398).epsilon(1e-13));
  const ClosedForm cf2(market_env2(), penalty_env2(), 1.0);
  CHECK(cf2.optimal_speed(0.0, state_at(1.25, 25.0)) ==
        doctest::Approx(0.8487654320987655).epsilon(1e-13));
}

TEST_CASE("with rho = 0 the optimal speed is the TWAP-like term") {
  PenaltyParams penalty;
  penalty.rho = 0.0;
  const ClosedForm cf(market_env1(), penalty, 1.0);
  for (double t : {0.0, 0.25, 0.9}) {
    for (double q : {0.0, 0.4, 1.25}) {
      const double expected = q / ((1.0 - t) + cf.zeta());
      CHECK(cf.optimal_speed(t, state_at(q, 25.0)) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(cf.optimal_speed(0.5, state_at(0.0, 25.0)) == 0.0);
}

TEST_CASE("exploratory mean equals the deterministic speed pointwise") {
  const ClosedForm cf(market_env1(), penalty_env1(), 1.0);
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double t = rng.uniform01();
    MarketState state = state_at(2.5 * rng.uniform01(), 60.0 * rng.uniform01());
    state.s = 10.0 + 20.0 * rng.uniform01();
    state.x = -10.0 + 40.0 * rng.uniform01();
    const GaussianPolicySpec spec = cf.exploratory_policy(t, state);
    CHECK(std::abs(spec.mean - cf.optimal_speed(t, state)) < 1e-12);
  }
}

TEST_CASE("exploratory std follows the variance law") {
  const ClosedForm cf(market_env1(), penalty_env1(), 1.0);
  const GaussianPolicySpec spec = cf.exploratory_policy(0.37, state_at(0.9, 31.0));
  CHECK(spec.std == 0.05);  // sqrt(0.001 / 0.4)
  CHECK(cf.exploratory_variance() * 2.0 * (0.1 + 0.1) == 0.001);

  // std is state- and time-independent
  const GaussianPolicySpec other = cf.exploratory_policy(0.9, state_at(0.1, 3.0));
  CHECK(other.std == spec.std);

  // gamma = 0 collapses to the deterministic policy
  PenaltyParams penalty;
  penalty.gamma = 0.0;
  const ClosedForm dirac(market_env1(), penalty, 1.0);
  CHECK(dirac.exploratory_policy(0.4, state_at(1.0, 25.0)).std == 0.0);
}

TEST_CASE("halving gamma scales std by 1/sqrt(2) and leaves the mean untouched") {
  PenaltyParams penalty_full = penalty_env1();
  PenaltyParams penalty_half = penalty_env1();
  penalty_half.gamma = penalty_full.gamma / 2.0;
  const ClosedForm full(market_env1(), penalty_full, 1.0);
  const ClosedForm half(market_env1(), penalty_half, 1.0);
  const MarketState state = state_at(0.8, 27.0);
  const GaussianPolicySpec a = full.exploratory_policy(0.2, state);
  const GaussianPolicySpec b = half.exploratory_policy(0.2, state);
  CHECK(a.mean == b.mean);
  CHECK(b.std == doctest::Approx(a.std / std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("twap speed") {
  CHECK(twap_speed(1.25, 1.0) == 1.25);
  CHECK(twap_speed(0.0, 1.0) == 0.0);
}

TEST_CASE("coefficient functions solve their ODEs on interior grid points") {
  const double delta = 1e-5;  // 1e-5 * T
  for (int env = 1; env <= 2; ++env) {
    const ClosedForm cf = env == 1 ? ClosedForm(market_env1(), penalty_env1(), 1.0)
                                   : ClosedForm(market_env2(), penalty_env2(), 1.0);
    double max_residual = 0.0;
    for (int i = 1; i < 100; ++i) {
      const double t = i / 100.0;
      max_residual = std::max(max_residual, cf.ode_residual(t, ClosedForm::Coeff::W2, delta));
      max_residual = std::max(max_residual, cf.ode_residual(t, ClosedForm::Coeff::L1, delta));
      max_residual = std::max(max_residual, cf.ode_residual(t, ClosedForm::Coeff::L0, delta));
    }
    CHECK(max_residual < 1e-6);
  }
}

TEST_CASE("rho = 0 zeroes the l1 and l0 residuals identically") {
  PenaltyParams penalty;
  penalty.rho = 0.0;
  const ClosedForm cf(market_env1(), penalty, 1.0);
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    CHECK(cf.ode_residual(t, ClosedForm::Coeff::L1, 1e-5) == 0.0);
    CHECK(cf.ode_residual(t, ClosedForm::Coeff::L0, 1e-5) == 0.0);
  }
}

TEST_CASE("w2 increases toward -alpha") {
  for (int env = 1; env <= 2; ++env) {
    const ClosedForm cf = env == 1 ? ClosedForm(market_env1(), penalty_env1(), 1.0)
                                   : ClosedForm(market_env2(), penalty_env2(), 1.0);
    double previous = cf.w2(0.0);
    for (int i = 1; i <= 100; ++i) {
      const double current = cf.w2(i / 100.0);
      CHECK(current < previous);
      previous = current;
    }
  }
}

TEST_CASE("alpha <= b/2 is a domain error") {
  MarketParams market;
  market.alpha = 0.05;
  market.b = 0.1;
  CHECK_THROWS_AS(ClosedForm(market, PenaltyParams{}, 1.0), std::domain_error);
}
