#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "mscme/effective.hpp"
#include "mscme/error.hpp"
#include "mscme/generator.hpp"
#include "mscme/oracles.hpp"
#include "mscme/parallel.hpp"
#include "mscme/examples.hpp"
#include "mscme/parser.hpp"
#include "mscme/pathsample.hpp"
#include "mscme/simulate.hpp"

namespace py = pybind11;
using namespace mscme;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<long long> states_array(const StateSpace& space) {
  py::array_t<long long> out({static_cast<py::ssize_t>(space.size()), static_cast<py::ssize_t>(space.dimension())});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < space.size(); ++i)
    for (std::size_t k = 0; k < space.dimension(); ++k) a(i, k) = space.state(i)[k];
  return out;
}

SlowDomain domain(Count lo, Count hi) { return {{lo}, {hi}}; }

EffectiveOptions options(unsigned workers) {
  EffectiveOptions o;
  o.workers = workers == 0 ? default_workers() : workers;
  return o;
}

const VariableBasis& basis_of(const NetworkDescription& d) {
  if (!d.basis) throw ConfigError("network declares no slow/fast variables");
  return *d.basis;
}

}  // namespace

PYBIND11_MODULE(_mscme, m) {
  m.doc() = "Multiscale chemical master equation reductions and bridge sampling";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<NetworkDescription>(m, "Network")
      .def_property_readonly("species", [](const NetworkDescription& d) { return d.network.species(); })
      .def_property_readonly("reactions",
                             [](const NetworkDescription& d) {
                               std::vector<std::string> names;
                               for (const auto& r : d.network.reactions()) names.push_back(r.name);
                               return names;
                             })
      .def_property_readonly("slow_variables",
                             [](const NetworkDescription& d) {
                               std::vector<std::string> names;
                               if (d.basis)
                                 for (const auto& v : d.basis->slow()) names.push_back(v.name);
                               return names;
                             })
      .def("propensities",
           [](const NetworkDescription& d, const StateVector& x) { return to_array(propensities(d.network, x).values); },
           py::arg("state"))
      .def("project", [](const NetworkDescription& d, const IntVector& nu) { return basis_of(d).project(nu); },
           py::arg("stoichiometry"));

  m.def("parse_network", [](const std::string& text) { return parse_network(text); }, py::arg("text"));
  m.def("load_network", &load_network, py::arg("path"));

  py::module_ ex = m.def_submodule("examples", "Example network and plan texts");
  ex.attr("linear") = std::string(examples::kLinear);
  ex.attr("bistable") = std::string(examples::kBistable);
  ex.attr("three_scale") = std::string(examples::kThreeScale);
  ex.attr("three_scale_plan") = std::string(examples::kThreeScalePlan);

  py::class_<Distribution>(m, "Distribution")
      .def_property_readonly("species", [](const Distribution& d) { return d.space->species(); })
      .def_property_readonly("states", [](const Distribution& d) { return states_array(*d.space); })
      .def_property_readonly("probabilities", [](const Distribution& d) { return to_array(d.probabilities); })
      .def("marginal",
           [](const Distribution& d, const IntVector& coefficients, const std::string& name) {
             return marginalize(d, coefficients, name);
           },
           py::arg("coefficients"), py::arg("name") = "S")
      .def("peaks", [](const Distribution& d) {
        std::vector<std::pair<Count, double>> out;
        for (const auto& p : peak_report(d)) out.emplace_back(p.position, p.height);
        return out;
      });

  m.def("relative_l2", py::overload_cast<const Distribution&, const Distribution&>(&relative_l2),
        py::arg("approx"), py::arg("reference"));

  py::class_<SparseGenerator>(m, "Generator")
      .def_property_readonly("dimension", &SparseGenerator::dimension)
      .def_property_readonly("max_exit_rate", &SparseGenerator::max_exit_rate)
      .def_property_readonly("states", [](const SparseGenerator& g) { return states_array(*g.space()); })
      .def("dense", &SparseGenerator::dense)
      .def("stationary", [](const SparseGenerator& g) { return stationary_distribution(g); });

  m.def("full_generator",
        [](const NetworkDescription& d) {
          auto space = std::make_shared<StateSpace>(enumerate_states(d.network, d.species_domains()));
          return assemble_generator(d.network, space);
        },
        py::arg("network"), "Generator over the species domains declared in the file.");

  py::class_<EffectiveGenerator>(m, "EffectiveGenerator")
      .def_readonly("generator", &EffectiveGenerator::generator)
      .def_readonly("slow_reaction_names", &EffectiveGenerator::slow_reaction_names)
      .def_readonly("propensities", &EffectiveGenerator::propensities)
      .def_property_readonly("method", [](const EffectiveGenerator& e) { return std::string(to_string(e.method)); })
      .def("stationary", [](const EffectiveGenerator& e) { return stationary_distribution(e.generator); });

  m.def("cma",
        [](const NetworkDescription& d, Count lo, Count hi, unsigned workers) {
          py::gil_scoped_release release;
          return cma_effective_generator(d.network, basis_of(d), domain(lo, hi), {}, options(workers));
        },
        py::arg("network"), py::arg("lo"), py::arg("hi"), py::arg("workers") = 1);
  m.def("qssa",
        [](const NetworkDescription& d, Count lo, Count hi, const std::vector<std::string>& fast, unsigned workers) {
          py::gil_scoped_release release;
          return qssa_effective_generator(d.network, basis_of(d), fast, domain(lo, hi), {}, options(workers));
        },
        py::arg("network"), py::arg("lo"), py::arg("hi"), py::arg("fast_reactions") = std::vector<std::string>{},
        py::arg("workers") = 1);
  m.def("nested",
        [](const NetworkDescription& d, const std::string& plan, const std::string& method, Count lo, Count hi,
           unsigned workers) {
          const auto p = parse_plan(plan, d.network.species());
          const Method meth = parse_method(method);
          py::gil_scoped_release release;
          return nested_effective_generator(d.network, p, meth, domain(lo, hi), options(workers));
        },
        py::arg("network"), py::arg("plan"), py::arg("method") = "cma", py::arg("lo"), py::arg("hi"),
        py::arg("workers") = 1);

  m.def("simulate",
        [](const NetworkDescription& d, const StateVector& x0, double t_end, std::uint64_t seed) {
          RandomSource rng(seed);
          const auto traj = simulate_ssa(d.network, x0, t_end, rng);
          py::array_t<long long> states({static_cast<py::ssize_t>(traj.epochs()),
                                         static_cast<py::ssize_t>(traj.species.size())});
          auto a = states.mutable_unchecked<2>();
          for (std::size_t i = 0; i < traj.epochs(); ++i)
            for (std::size_t k = 0; k < traj.species.size(); ++k) a(i, k) = traj.states[i][k];
          return py::make_tuple(to_array(traj.times), states, traj.reaction_ids);
        },
        py::arg("network"), py::arg("x0"), py::arg("t_end"), py::arg("seed") = 0,
        "Returns (times, states, reaction_ids).");

  py::class_<EventCountPMF>(m, "EventCountPMF")
      .def_readonly("r_max", &EventCountPMF::r_max)
      .def_readonly("transition", &EventCountPMF::transition)
      .def_property_readonly("weights", [](const EventCountPMF& p) { return to_array(p.weights); });

  py::class_<DominatingProcess>(m, "DominatingProcess")
      .def(py::init([](const SparseGenerator& g, const std::string& strategy, double inflation) {
             DominatingOptions o;
             o.strategy = parse_power_strategy(strategy);
             o.inflation = inflation;
             return std::make_unique<DominatingProcess>(g, o);
           }),
           py::arg("generator"), py::arg("strategy") = "auto", py::arg("inflation") = 1.0, py::keep_alive<1, 2>())
      .def_property_readonly("rho", &DominatingProcess::rho)
      .def_property_readonly("strategy", [](const DominatingProcess& d) { return std::string(to_string(d.strategy())); })
      .def_property_readonly("degraded", &DominatingProcess::degraded)
      .def("index",
           [](const DominatingProcess& d, const StateVector& x) {
             const auto i = d.space()->find(x);
             if (i == StateSpace::npos) throw ConfigError("state outside the generator's space");
             return i;
           },
           py::arg("state"))
      .def("event_count_pmf", [](const DominatingProcess& d, double t, std::size_t x0, std::size_t x1) {
             return event_count_pmf(d, t, x0, x1);
           },
           py::arg("t"), py::arg("x0"), py::arg("x1"))
      .def("bridge",
           [](const DominatingProcess& d, const EventCountPMF& pmf, double t0, std::uint64_t seed,
              std::uint64_t stream) {
             RandomSource rng(seed, stream);
             const auto path = sample_conditioned_path(d, pmf, t0, rng);
             std::vector<std::vector<Count>> states(path.states.begin(), path.states.end());
             return py::make_tuple(to_array(path.times), states);
           },
           py::arg("pmf"), py::arg("t0") = 0.0, py::arg("seed") = 0, py::arg("stream") = 0,
           "Returns (times, states) of one endpoint conditioned path.");

  m.def("lin_marginal_intensity",
        [](double k1v, double k2, double k3, double k4, const std::string& method) {
          return lin_marginal_intensity(k1v, k2, k3, k4, parse_method(method));
        },
        py::arg("k1v"), py::arg("k2"), py::arg("k3"), py::arg("k4"), py::arg("method") = "cma");
  m.def("poisson", [](double lambda, Count lo, Count hi) { return AnalyticLaw::poisson(lambda).distribution("S", lo, hi); },
        py::arg("lam"), py::arg("lo"), py::arg("hi"));
}
