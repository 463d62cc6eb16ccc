#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wbdr/barycenter.hpp"
#include "wbdr/core.hpp"
#include "wbdr/coreset.hpp"
#include "wbdr/instances.hpp"
#include "wbdr/projection.hpp"
#include "wbdr/rng.hpp"
#include "wbdr/transport.hpp"

namespace wbdr::cli {

namespace {

using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::string format = "json";
  std::string output;
  bool no_timing = false;
};

struct InputArgs {
  std::string csv;
  std::string images;
  std::string labels;
  std::size_t subsample = 0;
  bool synthetic = false;
  std::size_t classes = 10;
  std::size_t per_class = 100;
  std::size_t side = 28;
};

struct SolverArgs {
  double p = 2.0;
  std::size_t support_size = 1;
  int restarts = 1;
  int max_iters = 200;
  std::string init = "weighted";
  bool reestimate = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--output,-o", c.output, "Write results here instead of stdout");
  cmd->add_flag("--no-timing", c.no_timing, "Leave wall-clock times out of the output");
}

void add_input(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--input,-i", in.csv, "CSV file with rows dist_id,w,x_1,...,x_d");
  cmd->add_option("--images", in.images, "IDX image file");
  cmd->add_option("--labels", in.labels, "IDX label file (one distribution per label)");
  cmd->add_option("--subsample", in.subsample, "Points kept per label (0 = all)");
  cmd->add_flag("--synthetic", in.synthetic, "Use the built-in MNIST-like generator");
  cmd->add_option("--classes", in.classes, "Synthetic classes")->capture_default_str();
  cmd->add_option("--per-class", in.per_class, "Synthetic points per class")->capture_default_str();
  cmd->add_option("--side", in.side, "Synthetic image side length")->capture_default_str();
}

void add_solver(CLI::App* cmd, SolverArgs& s) {
  cmd->add_option("--p", s.p, "Exponent p >= 1")->capture_default_str();
  cmd->add_option("--support-size,-n", s.support_size, "Barycenter atoms")->capture_default_str();
  cmd->add_option("--restarts", s.restarts, "Random restarts")->capture_default_str();
  cmd->add_option("--max-iters", s.max_iters, "Outer iteration cap")->capture_default_str();
  cmd->add_option("--init", s.init, "Initialization")->check(CLI::IsMember({"weighted", "farthest"}));
  cmd->add_flag("--reestimate-weights", s.reestimate, "Re-estimate atom weights");
}

SolverOptions solver_options(const SolverArgs& s, std::uint64_t seed) {
  SolverOptions opts;
  opts.p = s.p;
  opts.support_size = s.support_size;
  opts.restarts = s.restarts;
  opts.max_outer_iters = s.max_iters;
  opts.init = s.init == "farthest" ? InitMethod::kFarthestPoint : InitMethod::kWeightedSample;
  opts.reestimate_weights = s.reestimate;
  opts.seed = seed;
  validate_options(opts);
  return opts;
}

std::vector<DiscreteDistribution> load_input(const InputArgs& in, std::uint64_t seed) {
  const int sources = int(!in.csv.empty()) + int(!in.images.empty()) + int(in.synthetic);
  if (sources != 1) throw UsageError("give exactly one of --input, --images or --synthetic");
  if (!in.csv.empty()) {
    auto mus = load_csv_distributions(in.csv);
    if (mus.empty()) throw Error(ErrorCode::kEmptyInput, in.csv + ": no distributions");
    return mus;
  }
  if (!in.images.empty()) {
    if (in.labels.empty()) throw UsageError("--images needs --labels");
    const Matrix points = load_idx_images(in.images);
    const auto labels = load_idx_labels(in.labels);
    return group_by_label(points, labels, in.subsample, derive_seed(seed, {1}));
  }
  const auto data = gen_synthetic_digits(in.classes, in.per_class, in.side, derive_seed(seed, {2}));
  return group_by_label(data.points, data.labels, in.subsample, derive_seed(seed, {1}));
}

ordered_json rows_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_json(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.output, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + c.output);
  file << text;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string barycenter_csv(const DiscreteDistribution& nu) {
  std::ostringstream os;
  for (std::size_t t = 0; t < nu.size(); ++t) {
    os << format_double(nu.weight(t));
    for (Eigen::Index c = 0; c < nu.atoms().cols(); ++c) os << ',' << format_double(nu.atoms()(static_cast<Eigen::Index>(t), c));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_barycenter(const Common& c, const InputArgs& in, const SolverArgs& s, std::ostream& out) {
  const auto mus = load_input(in, c.seed);
  const auto result = solve_barycenter(mus, solver_options(s, c.seed));
  if (c.format == "csv") {
    emit(c, barycenter_csv(result.barycenter), out);
    return kExitOk;
  }
  ordered_json j;
  j["command"] = "barycenter";
  j["p"] = s.p;
  j["support_size"] = s.support_size;
  j["seed"] = c.seed;
  j["cost"] = result.report.total_cost;
  j["iterations"] = result.report.iterations;
  j["converged"] = result.report.converged;
  j["support"] = rows_json(result.barycenter.atoms());
  j["weights"] = vector_json(result.barycenter.weights());
  j["trace"] = result.trace;
  emit(c, dump(j), out);
  return kExitOk;
}

struct ReduceArgs {
  std::optional<std::size_t> dim;
  std::optional<std::string> policy;
  double eps = 0.25;
  double delta = 0.1;
  double c_jl = 1.0;
  std::string map = "gaussian";
};

int cmd_reduce(const Common& c, const InputArgs& in, const SolverArgs& s, const ReduceArgs& r,
               std::ostream& out) {
  const auto mus = load_input(in, c.seed);
  const std::size_t d = common_dimension(mus);
  const MapKind kind = parse_map_kind(r.map);
  std::size_t m = d;
  std::optional<DimensionPolicy> policy;
  if (r.policy) policy = parse_policy(*r.policy);
  if (r.dim) {
    m = *r.dim;
  } else if (kind != MapKind::kIdentity) {
    if (!policy) policy = DimensionPolicy::kOptimal;
    m = jl_dimension(s.support_size, r.eps, r.delta, s.p, *policy, mus.size(), r.c_jl);
  }
  const ProjectionMap map = make_map(kind, d, m, derive_seed(c.seed, {3}));
  const auto result = reduce_solve_reconstruct(mus, map, solver_options(s, c.seed));

  if (c.format == "csv") {
    std::ostringstream os;
    os << "field,value\n";
    os << "m," << map.output_dim() << "\n";
    os << "map," << to_string(kind) << "\n";
    os << "cost_low," << format_double(result.low.total_cost) << "\n";
    os << "cost_high," << format_double(result.high.total_cost) << "\n";
    if (!c.no_timing) {
      os << "projection_seconds," << format_double(result.projection_seconds) << "\n";
      os << "solve_seconds," << format_double(result.solve_seconds) << "\n";
      os << "reconstruction_seconds," << format_double(result.reconstruction_seconds) << "\n";
    }
    emit(c, os.str(), out);
    return kExitOk;
  }
  ordered_json j;
  j["command"] = "reduce";
  j["p"] = s.p;
  j["support_size"] = s.support_size;
  j["seed"] = c.seed;
  j["d"] = d;
  j["m"] = map.output_dim();
  j["map"] = std::string(to_string(kind));
  j["policy"] = policy ? ordered_json(std::string(to_string(*policy))) : ordered_json(nullptr);
  j["eps"] = r.eps;
  j["delta"] = r.delta;
  j["cost_low"] = result.low.total_cost;
  j["cost_high"] = result.high.total_cost;
  j["support"] = rows_json(result.barycenter.atoms());
  j["weights"] = vector_json(result.barycenter.weights());
  if (!c.no_timing) {
    j["timings"] = {{"projection_seconds", result.projection_seconds},
                    {"solve_seconds", result.solve_seconds},
                    {"reconstruction_seconds", result.reconstruction_seconds}};
  }
  emit(c, dump(j), out);
  return kExitOk;
}

struct CoresetArgs {
  std::size_t k = 1000;
  std::vector<long long> sizes{10, 100, 1000};
  std::vector<double> queries{0.0, 10.0, 100.0};
  std::vector<std::string> methods{"uniform", "sensitivity"};
  int trials = 1;
  double alpha = 2.0;
  double p = 2.0;
};

Vector query_costs(std::span<const DiscreteDistribution> mus, const DiscreteDistribution& q,
                   double p) {
  Vector costs(static_cast<Eigen::Index>(mus.size()));
  for (std::size_t i = 0; i < mus.size(); ++i) costs(static_cast<Eigen::Index>(i)) = solve_ot(mus[i], q, p).cost;
  return costs;
}

int cmd_coreset(const Common& c, const InputArgs& in, const CoresetArgs& a, std::ostream& out) {
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  for (long long size : a.sizes) {
    if (size < 1) throw UsageError("sample sizes must be >= 1");
  }
  std::vector<DiscreteDistribution> mus;
  const bool from_file = !in.csv.empty() || !in.images.empty() || in.synthetic;
  mus = from_file ? load_input(in, c.seed) : gen_coreset_synthetic(a.k);
  const std::size_t d = common_dimension(mus);

  SolverOptions anchor_opts;
  anchor_opts.p = a.p;
  anchor_opts.support_size = 1;
  anchor_opts.seed = derive_seed(c.seed, {4});
  const auto anchor = solve_barycenter(mus, anchor_opts);
  const auto scores = sensitivity_upper_bounds(mus, anchor.barycenter, a.alpha, a.p);

  std::vector<Vector> costs;
  for (double x : a.queries) costs.push_back(query_costs(mus, dirac(Vector::Constant(static_cast<Eigen::Index>(d), x)), a.p));

  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << "method,size,query,rel_error,cost_orig,cost_core,undefined\n";
  for (std::size_t mi = 0; mi < a.methods.size(); ++mi) {
    const std::string& method = a.methods[mi];
    for (long long size : a.sizes) {
      std::vector<double> err_sum(a.queries.size(), 0.0);
      std::vector<double> core_sum(a.queries.size(), 0.0);
      std::vector<int> undefined(a.queries.size(), 0);
      for (int trial = 0; trial < a.trials; ++trial) {
        const std::uint64_t s = derive_seed(c.seed, {5, mi, static_cast<std::uint64_t>(size),
                                                     static_cast<std::uint64_t>(trial)});
        const WeightedCoreset core =
            method == "uniform" ? build_uniform_coreset(mus.size(), static_cast<std::size_t>(size), s)
                                : build_coreset(scores, static_cast<std::size_t>(size), s);
        for (std::size_t qi = 0; qi < a.queries.size(); ++qi) {
          const auto ev = evaluate_coreset(core, costs[qi]);
          err_sum[qi] += ev.rel_error;
          core_sum[qi] += ev.cost_core;
          undefined[qi] += ev.undefined ? 1 : 0;
        }
      }
      for (std::size_t qi = 0; qi < a.queries.size(); ++qi) {
        const double rel = err_sum[qi] / a.trials;
        const double orig = costs[qi].mean();
        const double core = core_sum[qi] / a.trials;
        ordered_json row;
        row["method"] = method;
        row["size"] = size;
        row["query"] = a.queries[qi];
        row["rel_error"] = std::isfinite(rel) ? ordered_json(rel) : ordered_json(nullptr);
        row["cost_orig"] = orig;
        row["cost_core"] = core;
        row["undefined"] = undefined[qi];
        rows.push_back(std::move(row));
        csv << method << ',' << size << ',' << format_double(a.queries[qi]) << ','
            << (std::isfinite(rel) ? format_double(rel) : "nan") << ',' << format_double(orig) << ','
            << format_double(core) << ',' << undefined[qi] << '\n';
      }
    }
  }
  if (c.format == "csv") {
    emit(c, csv.str(), out);
    return kExitOk;
  }
  ordered_json j;
  j["command"] = "coreset";
  j["p"] = a.p;
  j["seed"] = c.seed;
  j["k"] = mus.size();
  j["alpha"] = a.alpha;
  j["trials"] = a.trials;
  j["mean_sensitivity"] = scores.mean_s;
  j["rows"] = std::move(rows);
  emit(c, dump(j), out);
  return kExitOk;
}

struct GenArgs {
  std::string kind;
  std::size_t d = 4;
  std::size_t t = 2;
  double N = 10.0;
  double C = 1.0;
  double eps = 0.1;
  double p = 2.0;
  std::size_t k = 1000;
};

std::vector<DiscreteDistribution> matching_as_distributions(const MatchingInstance& inst) {
  return {uniform_distribution(inst.a), uniform_distribution(inst.b)};
}

int cmd_gen(const Common& c, bool format_given, const InputArgs& in, const GenArgs& g,
            std::ostream& out) {
  std::vector<DiscreteDistribution> mus;
  ordered_json meta;
  if (g.kind == "lb_barycenter") {
    auto inst = gen_lb_barycenter(g.t, g.N, g.C, g.eps, g.p);
    meta["support_size"] = inst.support_size;
    meta["expected_opt_cost"] = inst.expected_opt_cost;
    mus = std::move(inst.distributions);
  } else if (g.kind == "ot_pair") {
    const auto inst = gen_ot_pair(g.d);
    meta["reference_cost"] = inst.reference_cost;
    mus = matching_as_distributions(inst);
  } else if (g.kind == "pullback") {
    const auto inst = gen_pullback(g.d, static_cast<std::size_t>(g.C));
    meta["reference_cost"] = inst.reference_cost;
    mus = matching_as_distributions(inst);
  } else if (g.kind == "coreset_synthetic") {
    mus = gen_coreset_synthetic(g.k);
  } else {
    const auto data = gen_synthetic_digits(in.classes, in.per_class, in.side, derive_seed(c.seed, {2}));
    mus = group_by_label(data.points, data.labels, in.subsample, derive_seed(c.seed, {1}));
  }

  if (!format_given || c.format == "csv") {
    std::ostringstream os;
    write_csv_distributions(os, mus);
    emit(c, os.str(), out);
    return kExitOk;
  }
  ordered_json j;
  j["command"] = "gen";
  j["kind"] = g.kind;
  j["seed"] = c.seed;
  j["meta"] = meta.is_null() ? ordered_json::object() : meta;
  ordered_json dists = ordered_json::array();
  for (const auto& mu : mus) {
    dists.push_back({{"weights", vector_json(mu.weights())}, {"atoms", rows_json(mu.atoms())}});
  }
  j["distributions"] = std::move(dists);
  emit(c, dump(j), out);
  return kExitOk;
}

struct SweepArgs {
  std::vector<std::size_t> m_values;
  int trials = 1;
  int jobs = 1;
  std::string map = "gaussian";
};

int cmd_sweep(const Common& c, const InputArgs& in, const SolverArgs& s, const SweepArgs& a,
              std::ostream& out, std::ostream& err) {
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  if (a.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (a.m_values.empty()) throw UsageError("--m-values is required");
  const auto mus = load_input(in, c.seed);
  SweepOptions sweep;
  sweep.m_values = a.m_values;
  sweep.trials = a.trials;
  sweep.seed = c.seed;
  sweep.kind = parse_map_kind(a.map);
  sweep.jobs = a.jobs;
  err << "sweep: " << a.m_values.size() << " dimensions x " << a.trials << " trials\n";
  const auto rows = cost_ratio_sweep(mus, solver_options(s, c.seed), sweep);

  if (c.format == "csv") {
    std::ostringstream os;
    os << (c.no_timing ? "m,mean_ratio,stddev\n" : "m,mean_ratio,stddev,low_seconds,high_seconds\n");
    for (const auto& row : rows) {
      os << row.m << ',' << format_double(row.mean_ratio) << ',' << format_double(row.stddev);
      if (!c.no_timing) os << ',' << format_double(row.low_seconds) << ',' << format_double(row.high_seconds);
      os << '\n';
    }
    emit(c, os.str(), out);
    return kExitOk;
  }
  ordered_json j;
  j["command"] = "sweep";
  j["p"] = s.p;
  j["support_size"] = s.support_size;
  j["seed"] = c.seed;
  j["map"] = a.map;
  j["trials"] = a.trials;
  ordered_json table = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["m"] = row.m;
    r["mean_ratio"] = row.mean_ratio;
    r["stddev"] = row.stddev;
    r["ratios"] = row.ratios;
    if (!c.no_timing) {
      r["low_seconds"] = row.low_seconds;
      r["high_seconds"] = row.high_seconds;
    }
    table.push_back(std::move(r));
  }
  j["rows"] = std::move(table);
  emit(c, dump(j), out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein barycenters with dimensionality reduction and coresets", "wbdr"};
  app.require_subcommand(1);

  Common common;
  InputArgs input;
  SolverArgs solver;
  ReduceArgs reduce;
  CoresetArgs coreset;
  GenArgs gen;
  SweepArgs sweep;

  auto* bary = app.add_subcommand("barycenter", "Solve the barycenter problem in the input dimension");
  add_common(bary, common);
  add_input(bary, input);
  add_solver(bary, solver);

  auto* red = app.add_subcommand("reduce", "Project, solve in low dimension, rebuild in the input dimension");
  add_common(red, common);
  add_input(red, input);
  add_solver(red, solver);
  auto* dim_opt = red->add_option("--dim,-m", reduce.dim, "Target dimension");
  auto* pol_opt = red->add_option("--policy", reduce.policy, "p2, kirszbraun or optimal");
  dim_opt->excludes(pol_opt);
  red->add_option("--eps", reduce.eps, "Distortion")->capture_default_str();
  red->add_option("--delta", reduce.delta, "Failure probability")->capture_default_str();
  red->add_option("--c-jl", reduce.c_jl, "Constant in front of the dimension bound")->capture_default_str();
  red->add_option("--map", reduce.map, "gaussian, srht or identity")->capture_default_str();

  auto* core = app.add_subcommand("coreset", "Compare uniform and sensitivity sampling");
  add_common(core, common);
  add_input(core, input);
  core->add_option("--k", coreset.k, "Size of the synthetic instance")->capture_default_str();
  core->add_option("--sizes", coreset.sizes, "Sample sizes")->delimiter(',');
  core->add_option("--queries", coreset.queries, "Query points x (delta at x * ones)")->delimiter(',');
  core->add_option("--methods", coreset.methods, "uniform and/or sensitivity")
      ->delimiter(',')
      ->check(CLI::IsMember({"uniform", "sensitivity"}));
  core->add_option("--trials", coreset.trials, "Seeds averaged per cell")->capture_default_str();
  core->add_option("--alpha", coreset.alpha, "Approximation factor of the anchor")->capture_default_str();
  core->add_option("--p", coreset.p, "Exponent p >= 1")->capture_default_str();

  auto* gen_cmd = app.add_subcommand("gen", "Write a generated instance as CSV");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--kind", gen.kind, "Instance family")
      ->required()
      ->check(CLI::IsMember({"lb_barycenter", "ot_pair", "pullback", "coreset_synthetic", "digits"}));
  gen_cmd->add_option("--d", gen.d, "Dimension")->capture_default_str();
  gen_cmd->add_option("--t", gen.t, "Lower-bound parameter t")->capture_default_str();
  gen_cmd->add_option("--N", gen.N, "Lower-bound scale N")->capture_default_str();
  gen_cmd->add_option("--C", gen.C, "Constant C (level count for pullback)")->capture_default_str();
  gen_cmd->add_option("--eps", gen.eps, "Lower-bound eps")->capture_default_str();
  gen_cmd->add_option("--p", gen.p, "Exponent p >= 1")->capture_default_str();
  gen_cmd->add_option("--k", gen.k, "Coreset instance size")->capture_default_str();
  gen_cmd->add_option("--classes", input.classes, "Digit classes")->capture_default_str();
  gen_cmd->add_option("--per-class", input.per_class, "Digits per class")->capture_default_str();
  gen_cmd->add_option("--side", input.side, "Digit side length")->capture_default_str();
  gen_cmd->add_option("--subsample", input.subsample, "Points kept per class (0 = all)");

  auto* sw = app.add_subcommand("sweep", "Cost ratio against the target dimension");
  add_common(sw, common);
  add_input(sw, input);
  add_solver(sw, solver);
  sw->add_option("--m-values", sweep.m_values, "Target dimensions")->delimiter(',');
  sw->add_option("--trials", sweep.trials, "Maps per dimension")->capture_default_str();
  sw->add_option("--jobs,-j", sweep.jobs, "Worker threads")->capture_default_str();
  sw->add_option("--map", sweep.map, "gaussian, srht or identity")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (bary->parsed()) return cmd_barycenter(common, input, solver, out);
    if (red->parsed()) return cmd_reduce(common, input, solver, reduce, out);
    if (core->parsed()) return cmd_coreset(common, input, coreset, out);
    if (gen_cmd->parsed()) {
      return cmd_gen(common, gen_cmd->get_option("--format")->count() > 0, input, gen, out);
    }
    return cmd_sweep(common, input, solver, sweep, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.is_input_error() ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace wbdr::cli
