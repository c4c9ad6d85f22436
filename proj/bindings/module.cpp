// Python bindings for the execution laboratory: market simulation, the
// closed-form policies, impact estimation, training and evaluation.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "vwaplab/closed_form.hpp"
#include "vwaplab/estimators.hpp"
#include "vwaplab/experiment.hpp"
#include "vwaplab/trainers.hpp"

namespace py = pybind11;
using namespace vwaplab;

namespace {

// Adapter so Python callables can act as rollout policies. The callable
// receives (t, state) and returns either a float (deterministic speed) or a
// (speed, log_density) pair.
class PyCallablePolicy final : public Policy {
 public:
  explicit PyCallablePolicy(py::function fn) : fn_(std::move(fn)) {}

  PolicyDecision decide(double t, const MarketState& state, Rng&) override {
    py::object result = fn_(t, state);
    if (py::isinstance<py::tuple>(result)) {
      auto pair = result.cast<std::pair<double, double>>();
      return {pair.first, pair.second};
    }
    return {result.cast<double>(), {}};
  }

 private:
  py::function fn_;
};

Trajectory rollout_named(const Environment& env, const std::string& policy,
                         std::uint64_t seed, std::uint64_t salt) {
  RunStreams streams = RunStreams::for_run(seed, salt);
  if (policy == "twap") {
    TwapPolicy twap(twap_speed(env.market().q0, env.grid().t_end));
    return env.rollout(twap, streams);
  }
  ClosedForm closed_form(env.market(), env.penalty(), env.grid().t_end);
  if (policy == "closed-form") {
    ExploratoryOptimalPolicy exploratory(closed_form);
    return env.rollout(exploratory, streams);
  }
  if (policy == "optimal") {
    DeterministicOptimalPolicy optimal(closed_form);
    return env.rollout(optimal, streams);
  }
  throw std::invalid_argument("unknown policy '" + policy +
                              "' (use twap, closed-form or optimal)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "VWAP-targeting optimal execution laboratory";

  py::class_<MarketParams>(m, "MarketParams")
      .def(py::init<>())
      .def_readwrite("kappa", &MarketParams::kappa)
      .def_readwrite("lambda_", &MarketParams::lambda)
      .def_readwrite("eta_mean", &MarketParams::eta_mean)
      .def_readwrite("b", &MarketParams::b)
      .def_readwrite("k", &MarketParams::k)
      .def_readwrite("alpha", &MarketParams::alpha)
      .def_readwrite("sigma", &MarketParams::sigma)
      .def_readwrite("s0", &MarketParams::s0)
      .def_readwrite("x0", &MarketParams::x0)
      .def_readwrite("q0", &MarketParams::q0)
      .def_readwrite("mu0", &MarketParams::mu0)
      .def("validate", &MarketParams::validate);

  py::class_<PenaltyParams>(m, "PenaltyParams")
      .def(py::init<>())
      .def_readwrite("phi", &PenaltyParams::phi)
      .def_readwrite("rho", &PenaltyParams::rho)
      .def_readwrite("gamma", &PenaltyParams::gamma);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def(py::init<>())
      .def(py::init<double, int>(), py::arg("t_end"), py::arg("n_steps"))
      .def_readwrite("t_end", &TimeGrid::t_end)
      .def_readwrite("n_steps", &TimeGrid::n_steps)
      .def("step", &TimeGrid::step)
      .def("time_at", &TimeGrid::time_at);

  py::class_<MarketState>(m, "MarketState")
      .def(py::init<>())
      .def_readwrite("s", &MarketState::s)
      .def_readwrite("x", &MarketState::x)
      .def_readwrite("q", &MarketState::q)
      .def_readwrite("mu", &MarketState::mu)
      .def_readwrite("t_index", &MarketState::t_index)
      .def("__repr__", [](const MarketState& y) {
        std::ostringstream out;
        out << "MarketState(s=" << y.s << ", x=" << y.x << ", q=" << y.q
            << ", mu=" << y.mu << ", t_index=" << y.t_index << ")";
        return out.str();
      });

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("state", &StepRecord::state)
      .def_readonly("action", &StepRecord::action)
      .def_readonly("reward", &StepRecord::reward)
      .def_readonly("log_density", &StepRecord::log_density);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("steps", &Trajectory::steps)
      .def_readonly("terminal_state", &Trajectory::terminal_state)
      .def_readonly("terminal_reward", &Trajectory::terminal_reward)
      .def("total_return", &Trajectory::total_return);

  py::class_<GaussianPolicySpec>(m, "GaussianPolicySpec")
      .def_readonly("mean", &GaussianPolicySpec::mean)
      .def_readonly("std", &GaussianPolicySpec::std);

  py::class_<Environment>(m, "Environment")
      .def(py::init<MarketParams, PenaltyParams, TimeGrid>(), py::arg("market"),
           py::arg("penalty"), py::arg("grid") = TimeGrid{})
      .def_property_readonly("market", &Environment::market)
      .def_property_readonly("penalty", &Environment::penalty)
      .def_property_readonly("grid", &Environment::grid)
      .def("initial_state", &Environment::initial_state)
      .def("terminal_reward", &Environment::terminal_reward)
      .def("running_reward", &Environment::running_reward)
      .def(
          "rollout",
          [](const Environment& env, const std::string& policy, std::uint64_t seed,
             std::uint64_t salt) { return rollout_named(env, policy, seed, salt); },
          py::arg("policy"), py::arg("seed") = 1, py::arg("salt") = 0,
          "Roll out a named policy: twap, closed-form or optimal")
      .def(
          "rollout_with",
          [](const Environment& env, py::function fn, std::uint64_t seed,
             std::uint64_t salt) {
            PyCallablePolicy policy(std::move(fn));
            RunStreams streams = RunStreams::for_run(seed, salt);
            return env.rollout(policy, streams);
          },
          py::arg("policy"), py::arg("seed") = 1, py::arg("salt") = 0,
          "Roll out a Python callable (t, state) -> speed or (speed, log_density)");

  py::class_<ClosedForm>(m, "ClosedForm")
      .def(py::init<const MarketParams&, const PenaltyParams&, double>(),
           py::arg("market"), py::arg("penalty"), py::arg("t_end") = 1.0)
      .def("w2", &ClosedForm::w2)
      .def("l1", &ClosedForm::l1)
      .def("l0", &ClosedForm::l0)
      .def("w1", &ClosedForm::w1)
      .def("zeta", &ClosedForm::zeta)
      .def("optimal_speed", &ClosedForm::optimal_speed)
      .def("exploratory_policy", &ClosedForm::exploratory_policy)
      .def("exploratory_variance", &ClosedForm::exploratory_variance)
      .def(
          "ode_residual",
          [](const ClosedForm& cf, double t, const std::string& which, double delta) {
            ClosedForm::Coeff coeff;
            if (which == "w2") {
              coeff = ClosedForm::Coeff::W2;
            } else if (which == "l1") {
              coeff = ClosedForm::Coeff::L1;
            } else if (which == "l0") {
              coeff = ClosedForm::Coeff::L0;
            } else {
              throw std::invalid_argument("which must be w2, l1 or l0");
            }
            return cf.ode_residual(t, coeff, delta);
          },
          py::arg("t"), py::arg("which"), py::arg("delta") = 1e-5);

  m.def("twap_speed", &twap_speed, py::arg("initial_inventory"), py::arg("t_end"));
  m.def("estimate_b",
        [](const std::vector<Trajectory>& batch, double step) {
          return estimate_b(batch, step);
        });
  m.def("estimate_k",
        [](const std::vector<Trajectory>& batch, double step) {
          return estimate_k(batch, step);
        });
  m.def("delta_pnl", &delta_pnl, py::arg("agent_terminal_cash"),
        py::arg("twap_terminal_cash"));

  py::class_<EpochReport>(m, "EpochReport")
      .def_readonly("epoch", &EpochReport::epoch)
      .def_readonly("mean_return", &EpochReport::mean_return)
      .def_readonly("min_return", &EpochReport::min_return)
      .def_readonly("max_return", &EpochReport::max_return)
      .def_readonly("critic_loss", &EpochReport::critic_loss)
      .def_readonly("policy_mse", &EpochReport::policy_mse)
      .def_readonly("aborted", &EpochReport::aborted);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_property(
          "algorithm",
          [](const TrainConfig& config) { return algorithm_name(config.algorithm); },
          [](TrainConfig& config, const std::string& name) {
            config.algorithm = algorithm_from_name(name);
          })
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("critic_rate", &TrainConfig::critic_rate)
      .def_readwrite("actor_rate", &TrainConfig::actor_rate)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("eval_rollouts", &TrainConfig::eval_rollouts)
      .def_readwrite("hidden_widths", &TrainConfig::hidden_widths);

  py::class_<TrainOutput>(m, "TrainOutput")
      .def_readonly("reports", &TrainOutput::reports)
      .def_readonly("initial_policy_mse", &TrainOutput::initial_policy_mse)
      .def_readonly("aborted_epochs", &TrainOutput::aborted_epochs)
      .def("policy_mean", &TrainOutput::policy_mean)
      .def("evaluate",
           [](const TrainOutput& trained, const Environment& env, int episodes,
              std::uint64_t seed) {
             auto policy = trained.make_policy();
             const EvalResult result = evaluate_policy(env, *policy, episodes, seed);
             return py::make_tuple(result.total_return.mean, result.total_return.stdev,
                                   result.returns);
           },
           py::arg("environment"), py::arg("episodes") = 100, py::arg("seed") = 777);

  m.def(
      "train",
      [](const Environment& env, const TrainConfig& config) {
        py::gil_scoped_release release;
        return train(env, config);
      },
      py::arg("environment"), py::arg("config"));

  py::class_<Summary>(m, "Summary")
      .def_readonly("mean", &Summary::mean)
      .def_readonly("stdev", &Summary::stdev)
      .def_readonly("min", &Summary::min)
      .def_readonly("max", &Summary::max);

  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("total_return", &EvalResult::total_return)
      .def_readonly("effective_cash", &EvalResult::effective_cash)
      .def_readonly("returns", &EvalResult::returns)
      .def_readonly("cashes", &EvalResult::cashes);

  m.def(
      "evaluate_named_policy",
      [](const Environment& env, const std::string& policy, int episodes,
         std::uint64_t seed) {
        std::unique_ptr<Policy> p;
        if (policy == "twap") {
          p = std::make_unique<TwapPolicy>(twap_speed(env.market().q0, env.grid().t_end));
        } else if (policy == "closed-form") {
          p = std::make_unique<ExploratoryOptimalPolicy>(
              ClosedForm(env.market(), env.penalty(), env.grid().t_end));
        } else if (policy == "optimal") {
          p = std::make_unique<DeterministicOptimalPolicy>(
              ClosedForm(env.market(), env.penalty(), env.grid().t_end));
        } else {
          throw std::invalid_argument("unknown policy '" + policy + "'");
        }
        return evaluate_policy(env, *p, episodes, seed);
      },
      py::arg("environment"), py::arg("policy"), py::arg("episodes") = 100,
      py::arg("seed") = 777);

  m.def("builtin_market", [](const std::string& name) {
    const ExperimentConfig config = builtin_config(name);
    return py::make_tuple(config.market, config.penalty, config.grid);
  });
}
