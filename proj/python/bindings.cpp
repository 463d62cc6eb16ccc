#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cli.hpp"
#include "wbdr/barycenter.hpp"
#include "wbdr/coreset.hpp"
#include "wbdr/instances.hpp"
#include "wbdr/projection.hpp"
#include "wbdr/transport.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace wbdr;

namespace {

SolverOptions make_options(std::size_t support_size, double p, std::uint64_t seed, int restarts,
                           int max_iters, bool reestimate_weights, const std::string& init) {
  SolverOptions opts;
  opts.support_size = support_size;
  opts.p = p;
  opts.seed = seed;
  opts.restarts = restarts;
  opts.max_outer_iters = max_iters;
  opts.reestimate_weights = reestimate_weights;
  if (init == "weighted") {
    opts.init = InitMethod::kWeightedSample;
  } else if (init == "farthest") {
    opts.init = InitMethod::kFarthestPoint;
  } else {
    throw Error(ErrorCode::kBadParams, "init must be 'weighted' or 'farthest'");
  }
  return opts;
}

py::dict report_dict(const CostReport& r) {
  return py::dict("cost"_a = r.total_cost, "per_atom_costs"_a = r.per_atom_costs,
                  "iterations"_a = r.iterations, "converged"_a = r.converged);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wasserstein barycenters with dimensionality reduction and coresets";

  // Messages start with the error code, e.g. "BadWeights: ...".
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<DiscreteDistribution>(m, "Distribution")
      .def(py::init([](Matrix atoms, Vector weights) {
             return make_distribution(std::move(atoms), std::move(weights));
           }),
           "atoms"_a, "weights"_a)
      .def_static("uniform", [](Matrix atoms) { return uniform_distribution(std::move(atoms)); })
      .def_property_readonly("atoms", &DiscreteDistribution::atoms)
      .def_property_readonly("weights", &DiscreteDistribution::weights)
      .def_property_readonly("size", &DiscreteDistribution::size)
      .def_property_readonly("dim", &DiscreteDistribution::dim)
      .def("__len__", &DiscreteDistribution::size)
      .def("__repr__", [](const DiscreteDistribution& d) {
        std::ostringstream s;
        s << "Distribution(size=" << d.size() << ", dim=" << d.dim() << ")";
        return s.str();
      });

  m.def("solve_ot",
        [](const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p) {
          auto plan = solve_ot(mu, nu, p);
          return py::make_tuple(plan.cost, plan.flow);
        },
        "mu"_a, "nu"_a, "p"_a = 2.0, "Optimal cost and plan between two distributions.");
  m.def("wasserstein", &wasserstein_p, "mu"_a, "nu"_a, "p"_a = 2.0);
  m.def("solve_transport", [](const Vector& a, const Vector& b, const Matrix& c) {
    auto plan = solve_transport(a, b, c);
    return py::make_tuple(plan.cost, plan.flow);
  });

  m.def("solve_barycenter",
        [](const std::vector<DiscreteDistribution>& mus, std::size_t support_size, double p,
           std::uint64_t seed, int restarts, int max_iters, bool reestimate_weights,
           const std::string& init) {
          BarycenterResult r;
          {
            py::gil_scoped_release release;
            r = solve_barycenter(mus, make_options(support_size, p, seed, restarts, max_iters,
                                                   reestimate_weights, init));
          }
          py::dict out = report_dict(r.report);
          out["barycenter"] = r.barycenter;
          out["plans"] = r.solution.plans;
          out["trace"] = r.trace;
          return out;
        },
        "mus"_a, "support_size"_a, "p"_a = 2.0, "seed"_a = 0, "restarts"_a = 1,
        "max_iters"_a = 200, "reestimate_weights"_a = false, "init"_a = "weighted");

  py::class_<ProjectionMap>(m, "ProjectionMap")
      .def_property_readonly("kind", [](const ProjectionMap& p) { return std::string(to_string(p.kind())); })
      .def_property_readonly("input_dim", &ProjectionMap::input_dim)
      .def_property_readonly("output_dim", &ProjectionMap::output_dim)
      .def_property_readonly("seed", &ProjectionMap::seed)
      .def("apply", [](const ProjectionMap& p, const Matrix& points) { return p.apply_rows(points); },
           "points"_a);

  m.def("make_map",
        [](const std::string& kind, std::size_t d, std::size_t m, std::uint64_t seed) {
          return make_map(parse_map_kind(kind), d, m, seed);
        },
        "kind"_a, "d"_a, "m"_a, "seed"_a = 0);

  m.def("jl_dimension",
        [](std::size_t n, double eps, double delta, double p, const std::string& policy,
           std::optional<std::size_t> k, double c_jl) {
          return jl_dimension(n, eps, delta, p, parse_policy(policy), k, c_jl);
        },
        "n"_a, "eps"_a, "delta"_a, "p"_a = 2.0, "policy"_a = "optimal", "k"_a = py::none(),
        "c_jl"_a = 1.0);

  m.def("reduce_solve_reconstruct",
        [](const std::vector<DiscreteDistribution>& mus, const ProjectionMap& map,
           std::size_t support_size, double p, std::uint64_t seed, int restarts) {
          ReductionResult r;
          {
            py::gil_scoped_release release;
            r = reduce_solve_reconstruct(mus, map,
                                         make_options(support_size, p, seed, restarts, 200, false,
                                                      "weighted"));
          }
          return py::dict("barycenter"_a = r.barycenter, "low_barycenter"_a = r.low_barycenter,
                          "cost_low"_a = r.low.total_cost, "cost_high"_a = r.high.total_cost);
        },
        "mus"_a, "map"_a, "support_size"_a, "p"_a = 2.0, "seed"_a = 0, "restarts"_a = 1);

  m.def("sensitivity_scores",
        [](const std::vector<DiscreteDistribution>& mus, const DiscreteDistribution& anchor,
           double alpha, double p) {
          auto s = sensitivity_upper_bounds(mus, anchor, alpha, p);
          return py::make_tuple(s.s, s.q);
        },
        "mus"_a, "anchor"_a, "alpha"_a = 2.0, "p"_a = 2.0);

  m.def("gen_ot_pair", [](std::size_t d) {
    auto inst = gen_ot_pair(d);
    return py::make_tuple(inst.a, inst.b, inst.reference_cost);
  });
  m.def("gen_coreset_synthetic", &gen_coreset_synthetic, "k"_a);

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = cli::run_cli(args, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        "args"_a, "Run one CLI command; returns (exit_code, stdout, stderr).");
}
