// Python access to the network models, tables, solvers and simulator.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sleeptrack/errors.hpp"
#include "sleeptrack/filter.hpp"
#include "sleeptrack/io.hpp"
#include "sleeptrack/lowerbound.hpp"
#include "sleeptrack/sim.hpp"

namespace py = pybind11;
using namespace sleeptrack;

namespace {

NetworkModel resolve(const py::object& network, double c) {
  NetworkModel m = py::isinstance<py::str>(network)
                       ? make_network(network.cast<std::string>())
                       : network.cast<NetworkModel>();
  return c > 0.0 ? m.with_energy_price(c) : m;
}

py::dict point_dict(const TradeoffPoint& p) {
  py::dict d;
  d["network"] = p.network;
  d["policy"] = p.policy;
  d["tdelta_source"] = p.tdelta_source;
  d["c"] = p.c;
  d["tracking_per_time"] = p.tracking_per_time;
  d["tracking_se"] = p.tracking_se;
  d["energy_per_time"] = p.energy_per_time;
  d["energy_se"] = p.energy_se;
  d["runs"] = p.runs;
  d["seed"] = p.seed;
  d["mean_duration"] = p.mean_duration;
  return d;
}

}  // namespace

PYBIND11_MODULE(_sleeptrack, m) {
  m.doc() = "Sensor sleep scheduling for object tracking";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<InconsistentObservation>(m, "InconsistentObservation", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("NEVER_WAKE") = kNeverWake;

  py::class_<NetworkModel>(m, "Network")
      .def_readonly("name", &NetworkModel::name)
      .def_readonly("energy_price", &NetworkModel::energy_price)
      .def_property_readonly("num_sensors", &NetworkModel::num_sensors)
      .def_property_readonly("is_finite", &NetworkModel::is_finite)
      .def_property_readonly("num_states",
                             [](const NetworkModel& n) { return n.space.size(); })
      .def_property_readonly("kernel",
                             [](const NetworkModel& n) { return n.finite_kernel().dense(); })
      .def("with_energy_price", &NetworkModel::with_energy_price, py::arg("c"));

  m.def("network", &make_network, py::arg("name"), "Builtin network A, B or C.");
  m.def(
      "load_config", [](const std::string& path) { return load_network_config(path).model; },
      py::arg("path"));
  m.def(
      "parse_config", [](const std::string& text) { return parse_network_config(text).model; },
      py::arg("json_text"));

  m.def(
      "expected_lifetime",
      [](const py::object& network, int runs, std::uint64_t seed) {
        const auto life = expected_lifetime(resolve(network, 0.0), runs, seed);
        return py::make_tuple(life.mean, life.se, life.exact);
      },
      py::arg("network"), py::arg("runs") = kLifetimeRuns, py::arg("seed") = 1,
      "(mean, standard error, exact) of the time spent in the network.");

  m.def(
      "belief_update",
      [](const py::object& network, const Eigen::VectorXd& prior,
         const std::vector<std::optional<double>>& readings, bool exited) {
        const auto model = resolve(network, 0.0);
        SleepState r = SleepState::all_awake(model.num_sensors());
        for (std::size_t l = 0; l < readings.size() && l < r.timers.size(); ++l)
          if (!readings[l]) r.timers[l] = 1;
        return belief_update(DenseBelief{prior}, model, Observation{readings, exited}, r).mass;
      },
      py::arg("network"), py::arg("prior"), py::arg("readings"), py::arg("exited") = false,
      "Exact filter step; None marks a sleeping sensor.");

  m.def(
      "tdelta_table",
      [](const py::object& network, double c, const std::string& source, int samples,
         std::uint64_t seed) {
        const auto model = resolve(network, c);
        return build_tdelta_table(model, parse_tdelta_source(source), samples, seed).values();
      },
      py::arg("network"), py::arg("c"), py::arg("source") = "greedy",
      py::arg("samples") = kDefaultMonteCarloSamples, py::arg("seed") = 1);

  m.def(
      "qmdp_solve",
      [](const py::object& network, double c, const Eigen::MatrixXd& table, int sensor, int u_max) {
        const auto model = resolve(network, c);
        const TDeltaTable t(table, model.space.coordinates(), false, TDeltaSource::File);
        const auto v = qmdp_solve(model, t, sensor, u_max);
        return py::make_tuple(v.value, v.sleep, v.iterations);
      },
      py::arg("network"), py::arg("c"), py::arg("table"), py::arg("sensor"), py::arg("u_max"),
      "(values, sleep inputs, iterations) of one sensor's sleep problem.");

  m.def(
      "fcr_sleep_time",
      [](const py::object& network, double c, const Eigen::MatrixXd& table,
         const Eigen::VectorXd& belief, int sensor, int u_max) {
        const auto model = resolve(network, c);
        const TDeltaTable t(table, model.space.coordinates(), false, TDeltaSource::File);
        return fcr_sleep_time(model, t, DenseBelief{belief}, sensor, u_max);
      },
      py::arg("network"), py::arg("c"), py::arg("table"), py::arg("belief"), py::arg("sensor"),
      py::arg("u_max"));

  m.def(
      "sweep",
      [](const py::object& network, const std::vector<std::string>& policies,
         const std::vector<double>& c_grid, int runs, std::uint64_t seed, int particles,
         int samples, int workers) {
        const auto model = resolve(network, 0.0);
        SweepConfig cfg;
        for (const auto& p : policies) cfg.policies.push_back(PolicySpec::parse(p));
        cfg.c_grid = c_grid;
        cfg.runs = runs;
        cfg.seed = seed;
        cfg.particles = particles;
        cfg.mc_samples = samples;
        cfg.workers = workers;
        std::vector<TradeoffPoint> pts;
        {
          py::gil_scoped_release release;
          pts = sweep(model, cfg);
        }
        py::list out;
        for (const auto& p : pts) out.append(point_dict(p));
        return out;
      },
      py::arg("network"), py::arg("policies"), py::arg("c_grid"), py::arg("runs") = 50,
      py::arg("seed") = 1, py::arg("particles") = kDefaultParticles,
      py::arg("samples") = kDefaultMonteCarloSamples, py::arg("workers") = 1,
      "Tradeoff points, one dict per (policy, c).");

  m.def(
      "lower_bound",
      [](const py::object& network, const std::vector<double>& c_grid, int restarts, int steps,
         std::uint64_t seed) {
        EnvelopeConfig cfg;
        cfg.restarts = restarts;
        cfg.steps = steps;
        cfg.seed = seed;
        std::vector<EnvelopePoint> pts;
        {
          py::gil_scoped_release release;
          pts = lb_envelope(resolve(network, 0.0), c_grid, cfg);
        }
        py::list out;
        for (const auto& p : pts) {
          py::dict d;
          d["c"] = p.c;
          d["tracking_per_time"] = p.tracking / p.lifetime;
          d["energy_per_time"] = p.energy / p.lifetime;
          d["bound_per_time"] = p.bound / p.lifetime;
          out.append(d);
        }
        return out;
      },
      py::arg("network"), py::arg("c_grid"), py::arg("restarts") = 20, py::arg("steps") = 100,
      py::arg("seed") = 1);
}
