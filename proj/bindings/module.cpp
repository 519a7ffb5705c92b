#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "json.hpp"
#include "notifrl/dataset.hpp"
#include "notifrl/harness.hpp"
#include "notifrl/ope.hpp"
#include "notifrl/policies.hpp"
#include "notifrl/qlearn.hpp"
#include "notifrl/sim.hpp"

namespace py = pybind11;
using namespace notifrl;

namespace {

ope::PolicyValueEstimate run_estimator(const TrajectoryBatch& batch,
                                       const Policy& target,
                                       const std::string& method, int bins,
                                       bool self_normalize, double gamma,
                                       double smoothing_lambda) {
  switch (ope::method_from_name(method)) {
    case ope::Method::OneStep:
      return ope::one_step_estimate(batch, target, self_normalize, gamma);
    case ope::Method::Trajectory:
      return ope::trajectory_estimate(batch, target, self_normalize, gamma);
    case ope::Method::StateMarginalized: {
      ope::DiscretizationSpec spec;
      spec.bins_per_feature = bins;
      spec.fit(batch);
      return ope::state_marginalized_estimate(batch, target, spec,
                                              self_normalize, gamma,
                                              smoothing_lambda);
    }
  }
  throw ValidationError("unknown method: " + method);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Offline RL workbench for notification delivery timing";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::enum_<Action>(m, "Action")
      .value("NOT_SEND", Action::NotSend)
      .value("SEND", Action::Send);

  py::class_<State>(m, "State")
      .def(py::init<int, int, int, double>(), py::arg("badge_count") = 0,
           py::arg("queue_size") = 0, py::arg("time_index") = 0,
           py::arg("activeness") = 0.0)
      .def_readwrite("badge_count", &State::badge_count)
      .def_readwrite("queue_size", &State::queue_size)
      .def_readwrite("time_index", &State::time_index)
      .def_readwrite("activeness", &State::activeness)
      .def("__repr__", [](const State& s) {
        return "State(badge_count=" + std::to_string(s.badge_count) +
               ", queue_size=" + std::to_string(s.queue_size) +
               ", time_index=" + std::to_string(s.time_index) +
               ", activeness=" + std::to_string(s.activeness) + ")";
      });

  py::class_<sim::VisitWeights>(m, "VisitWeights")
      .def(py::init<double, double, double>(), py::arg("w0") = -2.0,
           py::arg("w1") = 2.0, py::arg("w2") = 0.8)
      .def_readwrite("w0", &sim::VisitWeights::w0)
      .def_readwrite("w1", &sim::VisitWeights::w1)
      .def_readwrite("w2", &sim::VisitWeights::w2);

  py::class_<sim::SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("horizon", &sim::SimConfig::horizon)
      .def_readwrite("base_arrival_rate", &sim::SimConfig::base_arrival_rate)
      .def_readwrite("realtime_rate", &sim::SimConfig::realtime_rate)
      .def_readwrite("visit_weights", &sim::SimConfig::visit_weights)
      .def_static("load", &sim::load_sim_config, py::arg("path"))
      .def("save", &sim::save_sim_config, py::arg("path"))
      .def("validate", &sim::SimConfig::validate);

  m.def("visit_probability", &sim::visit_probability, py::arg("badge_count"),
        py::arg("activeness"), py::arg("weights") = sim::VisitWeights{},
        "Logistic visit model used by the simulator");

  py::class_<sim::StepResult>(m, "StepResult")
      .def_readonly("next_state", &sim::StepResult::next_state)
      .def_readonly("reward", &sim::StepResult::reward)
      .def_readonly("done", &sim::StepResult::done);

  py::class_<sim::Environment>(m, "Environment")
      .def(py::init<>())
      .def("reset", &sim::Environment::reset, py::arg("config"), py::arg("seed"))
      .def("step",
           [](sim::Environment& env, Action a) {
             const sim::StepResult r = env.step(a);
             return py::make_tuple(r.next_state, r.reward, r.done);
           },
           py::arg("action"))
      .def_property_readonly("done", &sim::Environment::done)
      .def_property_readonly("observation", &sim::Environment::observation);

  py::class_<Policy, std::shared_ptr<Policy>>(m, "Policy")
      .def("action_prob", &Policy::action_prob, py::arg("state"), py::arg("action"));

  py::class_<policies::UniformRandomPolicy, Policy,
             std::shared_ptr<policies::UniformRandomPolicy>>(m, "UniformRandomPolicy")
      .def(py::init<>());

  py::class_<policies::BaselinePolicy, Policy,
             std::shared_ptr<policies::BaselinePolicy>>(m, "BaselinePolicy")
      .def(py::init<double, sim::VisitWeights, double>(), py::arg("tau"),
           py::arg("weights") = sim::VisitWeights{},
           py::arg("denom_floor") = 1e-6)
      .def("decide", &policies::BaselinePolicy::decide, py::arg("state"));

  py::class_<policies::EpsilonGreedyPolicy, Policy,
             std::shared_ptr<policies::EpsilonGreedyPolicy>>(m, "EpsilonGreedyPolicy")
      .def(py::init<std::shared_ptr<const Policy>, double>(), py::arg("base"),
           py::arg("epsilon"));

  py::class_<policies::GreedyQPolicy, Policy,
             std::shared_ptr<policies::GreedyQPolicy>>(m, "GreedyQPolicy")
      .def(py::init<qlearn::QNetwork>(), py::arg("network"));

  py::class_<TrajectoryBatch>(m, "TrajectoryBatch")
      .def_readonly("horizon", &TrajectoryBatch::horizon)
      .def("__len__", &TrajectoryBatch::size)
      .def("save", &save_batch, py::arg("path"))
      .def_static("load", &load_batch, py::arg("path"))
      .def("undiscounted_value",
           [](const TrajectoryBatch& b) { return undiscounted_value(b); });

  m.def("collect_batch",
        [](const Policy& policy, const sim::SimConfig& config, int n,
           std::uint64_t seed, const std::string& descriptor) {
          return policies::collect_batch(policy, config, n, seed, descriptor);
        },
        py::arg("policy"), py::arg("config"), py::arg("n_trajectories"),
        py::arg("seed"), py::arg("descriptor") = "");

  m.def("rollout_value",
        [](const Policy& policy, const sim::SimConfig& config, int n,
           std::uint64_t seed, double gamma) {
          const sim::RolloutStats s = sim::rollout_value(policy, config, n, seed, gamma);
          return py::make_tuple(s.mean_return, s.std_error);
        },
        py::arg("policy"), py::arg("config"), py::arg("n_episodes"),
        py::arg("seed"), py::arg("gamma") = 1.0,
        "Monte-Carlo on-policy value; returns (mean, std_error)");

  py::class_<qlearn::QNetwork>(m, "QNetwork")
      .def(py::init<std::vector<int>, std::uint64_t>(), py::arg("layer_dims"),
           py::arg("seed"))
      .def("forward",
           [](const qlearn::QNetwork& net, const State& s) {
             const auto q = net.forward(s);
             return py::make_tuple(q[0], q[1]);
           },
           py::arg("state"), "Q-values as (q_not_send, q_send)")
      .def("greedy_action", &qlearn::QNetwork::greedy_action, py::arg("state"))
      .def("save", &qlearn::QNetwork::save, py::arg("path"))
      .def_static("load", &qlearn::QNetwork::load, py::arg("path"));

  py::class_<qlearn::TrainConfig>(m, "TrainConfig")
      .def(py::init([](double gamma, double learning_rate, int batch_size,
                       int target_update_period, int n_updates, int hidden_width,
                       const std::string& algorithm, std::uint64_t seed) {
             qlearn::TrainConfig c;
             c.gamma = gamma;
             c.learning_rate = learning_rate;
             c.batch_size = batch_size;
             c.target_update_period = target_update_period;
             c.n_updates = n_updates;
             c.hidden_width = hidden_width;
             c.algorithm = qlearn::algorithm_from_name(algorithm);
             c.seed = seed;
             c.validate();
             return c;
           }),
           py::arg("gamma") = 0.95, py::arg("learning_rate") = 1e-3,
           py::arg("batch_size") = 64, py::arg("target_update_period") = 100,
           py::arg("n_updates") = 2000, py::arg("hidden_width") = 32,
           py::arg("algorithm") = "double_dqn", py::arg("seed") = 0)
      .def_readwrite("gamma", &qlearn::TrainConfig::gamma)
      .def_readwrite("learning_rate", &qlearn::TrainConfig::learning_rate)
      .def_readwrite("batch_size", &qlearn::TrainConfig::batch_size)
      .def_readwrite("n_updates", &qlearn::TrainConfig::n_updates);

  py::class_<qlearn::TrainReport>(m, "TrainReport")
      .def_readonly("loss_curve", &qlearn::TrainReport::loss_curve)
      .def_readonly("final_network", &qlearn::TrainReport::final_network);

  m.def("train_offline", &qlearn::train_offline, py::arg("batch"), py::arg("config"),
        "Offline (double) DQN on a fixed batch of logged episodes");

  m.def("evaluate_policy", &run_estimator, py::arg("batch"), py::arg("target"),
        py::arg("method") = "statemarg", py::arg("bins") = 10,
        py::arg("self_normalize") = true, py::arg("gamma") = 1.0,
        py::arg("smoothing_lambda") = 0.0,
        "Off-policy value estimate from logged data");

  py::class_<ope::PolicyValueEstimate>(m, "PolicyValueEstimate")
      .def_readonly("value", &ope::PolicyValueEstimate::value)
      .def_readonly("per_step_values", &ope::PolicyValueEstimate::per_step_values)
      .def_readonly("self_normalized", &ope::PolicyValueEstimate::self_normalized)
      .def_readonly("empty_bin_samples", &ope::PolicyValueEstimate::empty_bin_samples)
      .def_property_readonly("method",
                             [](const ope::PolicyValueEstimate& e) {
                               return ope::method_name(e.method);
                             })
      .def("to_dict", [](const ope::PolicyValueEstimate& e) {
        return py::module_::import("json").attr("loads")(e.to_json().dump());
      });
}
