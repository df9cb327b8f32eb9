#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "swarmot/assignment.hpp"
#include "swarmot/cli.hpp"
#include "swarmot/error.hpp"
#include "swarmot/lq.hpp"
#include "swarmot/measures.hpp"
#include "swarmot/partition.hpp"
#include "swarmot/regimes.hpp"

namespace py = pybind11;
using namespace swarmot;

namespace {

Interval interval(std::pair<double, double> d) { return {d.first, d.second}; }

std::vector<Atom> atoms(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<Atom> out;
  out.reserve(pairs.size());
  for (const auto& [x, m] : pairs) out.push_back({x, m});
  return out;
}

Density make_density(std::pair<double, double> domain, const std::vector<std::pair<double, double>>& point_masses,
                     std::vector<double> edges, std::vector<double> values, bool normalize) {
  Histogram h{std::move(edges), std::move(values)};
  return normalize ? Density::normalized(interval(domain), atoms(point_masses), std::move(h))
                   : Density(interval(domain), atoms(point_masses), std::move(h));
}

OptimalControlSolution solve_text(const std::string& text, const std::string& regime, bool simulate) {
  const Scenario sc = cli::build_scenario(cli::Config::parse(text));
  const SolveOptions opts{simulate};
  if (regime == "static") return solve_static(sc, opts);
  if (regime == "periodic") return solve_periodic(sc, opts);
  if (regime == "general") return solve_general(sc, opts);
  throw InvalidInput("regime must be one of static, periodic, general");
}

}  // namespace

PYBIND11_MODULE(_swarmot, m) {
  m.doc() = "Optimal transport control of resource densities in one dimension";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Density>(m, "Density")
      .def(py::init(&make_density), py::arg("domain"), py::arg("atoms") = std::vector<std::pair<double, double>>{},
           py::arg("edges") = std::vector<double>{}, py::arg("values") = std::vector<double>{},
           py::arg("normalize") = false)
      .def_static("point", [](std::pair<double, double> d, double x) { return Density::point(interval(d), x); })
      .def_static("uniform", [](std::pair<double, double> d) { return Density::uniform(interval(d)); })
      .def_property_readonly("domain", [](const Density& d) { return std::make_pair(d.domain().lo, d.domain().hi); })
      .def_property_readonly("atoms",
                             [](const Density& d) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& a : d.atoms()) out.emplace_back(a.position, a.mass);
                               return out;
                             })
      .def_property_readonly("edges", [](const Density& d) { return d.continuous().edges; })
      .def_property_readonly("values", [](const Density& d) { return d.continuous().values; })
      .def("mean", &Density::mean)
      .def("atom_mass", &Density::atom_mass)
      .def("density_at", &Density::density_at);

  py::class_<QuantileFunction>(m, "QuantileFunction")
      .def("__call__", [](const QuantileFunction& q, double z) { return q(z); })
      .def("flats", [](const QuantileFunction& q) {
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& f : q.flat_intervals()) out.emplace_back(f.z_lo, f.z_hi, f.value);
        return out;
      });

  m.def("quantile_of", &quantile_of);
  m.def("gaussian_mixture",
        [](std::pair<double, double> domain, int cells, const std::vector<std::tuple<double, double, double>>& comps) {
          std::vector<GaussianComponent> g;
          for (const auto& [w, mu, var] : comps) g.push_back({w, mu, var});
          return gaussian_mixture(interval(domain), cells, g);
        },
        py::arg("domain"), py::arg("cells"), py::arg("components"),
        "Components are (weight, mean, variance) triples.");
  m.def("wasserstein2", &wasserstein2);
  m.def("squared_wasserstein2", &squared_wasserstein2);
  m.def("plan_cost", [](const Density& r, const Density& d) { return plan_cost(optimal_plan(r, d)); },
        "Cost of the comonotone assignment plan between r and d.");

  m.def("partition_cells",
        [](const Density& r) {
          std::vector<std::tuple<double, double, double>> out;
          for (const auto& c : build_partition(quantile_of(r)).cells()) out.emplace_back(c.z_lo, c.z_hi, c.level);
          return out;
        },
        "Interval cells (z_lo, z_hi, level) of the level-set partition of r.");
  m.def("averaged_density", [](const Density& d, const Density& r) {
    return averaged_density(d, build_partition(quantile_of(r)));
  });

  m.def("riccati", [](double alpha, double horizon, double t) { return riccati(LQParams{alpha, horizon, 1}, t); });

  py::class_<ScalarLQSolution>(m, "ScalarSolution")
      .def_readonly("times", &ScalarLQSolution::times)
      .def_readonly("r", &ScalarLQSolution::r)
      .def_readonly("u", &ScalarLQSolution::u)
      .def_readonly("p", &ScalarLQSolution::p)
      .def_readonly("y", &ScalarLQSolution::y)
      .def_readonly("cost", &ScalarLQSolution::cost)
      .def("state_at", &ScalarLQSolution::state_at)
      .def("control_at", &ScalarLQSolution::control_at);
  m.def("solve_scalar",
        [](double alpha, double horizon, double r0, const std::vector<double>& d) {
          if (d.size() < 2) throw InvalidInput("need at least two demand samples");
          return solve_scalar(LQParams{alpha, horizon, static_cast<int>(d.size()) - 1}, r0, d);
        },
        py::arg("alpha"), py::arg("horizon"), py::arg("r0"), py::arg("d"),
        "Scalar tracking problem on an even grid of len(d) points over [0, horizon].");

  py::class_<OptimalControlSolution>(m, "Solution")
      .def_readonly("alpha", &OptimalControlSolution::alpha)
      .def_readonly("horizon", &OptimalControlSolution::horizon)
      .def_readonly("times", &OptimalControlSolution::times)
      .def_readonly("predicted_cost", &OptimalControlSolution::predicted_cost)
      .def_readonly("K", &OptimalControlSolution::K)
      .def_property_readonly("realized_cost", [](const OptimalControlSolution& s) { return s.realized.total; })
      .def_property_readonly("motion_identity_gap",
                             [](const OptimalControlSolution& s) { return s.realized.motion_identity_gap; })
      .def_property_readonly("trajectory", [](const OptimalControlSolution& s) { return s.trajectory; })
      .def("atom_positions", &OptimalControlSolution::atom_positions)
      .def_property_readonly("frequency_table", [](const OptimalControlSolution& s) {
        std::vector<std::tuple<std::size_t, int, double, double, double, double>> out;
        for (const auto& r : s.frequency_table) {
          out.emplace_back(r.cell, r.harmonic, r.omega, r.demand_amplitude, r.resource_amplitude, r.gain);
        }
        return out;
      });

  m.def("solve_config", &solve_text, py::arg("text"), py::arg("regime"), py::arg("simulate") = true,
        py::call_guard<py::gil_scoped_release>(),
        "Builds a scenario from config text and solves it in the named regime.");
  m.def("run",
        [](const std::string& subcommand, const std::string& text) {
          std::ostringstream out;
          std::ostringstream err;
          int code = 0;
          {
            py::gil_scoped_release release;
            try {
              code = cli::run(subcommand, cli::Config::parse(text), out, err);
            } catch (const InvalidInput& e) {
              err << e.what() << '\n';
              code = 2;
            }
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("subcommand"), py::arg("text"), "Runs a tool subcommand; returns (exit_code, stdout, stderr).");
}
