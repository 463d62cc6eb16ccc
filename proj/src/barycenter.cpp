#include "wbdr/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "wbdr/rng.hpp"
#include "wbdr/transport.hpp"

namespace wbdr {

namespace {

constexpr double kMassFloor = 1e-15;

double powered(double dist, double p) {
  if (p == 1.0) return dist;
  if (p == 2.0) return dist * dist;
  return std::pow(dist, p);
}

Vector weighted_mean(const Matrix& points, const Vector& weights) {
  return (points.transpose() * weights) / weights.sum();
}

// Nearest data point, used as a fallback candidate when the optimum sits on
// a data point (where the iterative updates converge slowly).
Vector polish_with_nearest_point(const Matrix& points, const Vector& weights,
                                 const Vector& center, double p) {
  Eigen::Index nearest = 0;
  (points.rowwise() - center.transpose()).rowwise().squaredNorm().minCoeff(&nearest);
  const Vector candidate = points.row(nearest).transpose();
  return support_objective(points, weights, candidate, p) <
                 support_objective(points, weights, center, p)
             ? candidate
             : center;
}

Vector weiszfeld(const Matrix& points, const Vector& weights, int max_iters, double tol) {
  Vector y = weighted_mean(points, weights);
  const double scale = std::max(1.0, points.cwiseAbs().maxCoeff());
  const Eigen::Index d = points.cols();
  for (int it = 0; it < max_iters; ++it) {
    Vector numerator = Vector::Zero(d);
    Vector pull = Vector::Zero(d);
    double denominator = 0.0;
    double coincident = 0.0;
    for (Eigen::Index s = 0; s < points.rows(); ++s) {
      const Vector diff = points.row(s).transpose() - y;
      const double dist = diff.norm();
      if (dist <= 1e-14 * scale) {
        coincident += weights(s);
        continue;
      }
      numerator += (weights(s) / dist) * points.row(s).transpose();
      denominator += weights(s) / dist;
      pull += (weights(s) / dist) * diff;
    }
    if (denominator == 0.0) break;
    const Vector target = numerator / denominator;
    Vector next = target;
    if (coincident > 0.0) {
      const double r = pull.norm();
      if (r <= coincident) break;  // y is a data point satisfying the optimality condition
      const double gamma = std::min(1.0, coincident / r);
      next = (1.0 - gamma) * target + gamma * y;
    }
    const double step = (next - y).norm();
    y = next;
    if (step <= tol * (1.0 + y.norm())) break;
  }
  return polish_with_nearest_point(points, weights, y, 1.0);
}

Vector gradient_descent(const Matrix& points, const Vector& weights, double p, int max_iters,
                        double tol) {
  Vector y = weighted_mean(points, weights);
  double f = support_objective(points, weights, y, p);
  double step = 1.0 / (p * weights.sum());
  const Eigen::Index d = points.cols();
  for (int it = 0; it < max_iters && f > 0.0; ++it) {
    Vector grad = Vector::Zero(d);
    for (Eigen::Index s = 0; s < points.rows(); ++s) {
      const Vector diff = y - points.row(s).transpose();
      const double dist = diff.norm();
      if (dist == 0.0) continue;
      grad += (weights(s) * p * std::pow(dist, p - 2.0)) * diff;
    }
    const double g2 = grad.squaredNorm();
    if (g2 == 0.0) break;
    step *= 2.0;
    Vector next;
    double f_next = 0.0;
    for (int bt = 0; bt < 200; ++bt) {
      next = y - step * grad;
      f_next = support_objective(points, weights, next, p);
      if (f_next <= f - 0.5 * step * g2) break;
      step *= 0.5;
    }
    if (!(f_next < f)) break;
    const double decrease = f - f_next;
    y = next;
    f = f_next;
    if (decrease <= tol * f) break;
  }
  return polish_with_nearest_point(points, weights, y, p);
}

struct Column {
  Matrix points;
  Vector weights;
};

Column gather_column(const Solution& sol, std::span<const DiscreteDistribution> mus,
                     Eigen::Index j) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    count += static_cast<std::size_t>((sol.plans[i].col(j).array() > 0.0).count());
  }
  Column col;
  const auto d = static_cast<Eigen::Index>(mus.empty() ? 0 : mus.front().dim());
  col.points.resize(static_cast<Eigen::Index>(count), d);
  col.weights.resize(static_cast<Eigen::Index>(count));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const Matrix& plan = sol.plans[i];
    for (Eigen::Index t = 0; t < plan.rows(); ++t) {
      if (plan(t, j) > 0.0) {
        col.points.row(row) = mus[i].atom(static_cast<std::size_t>(t));
        col.weights(row) = plan(t, j);
        ++row;
      }
    }
  }
  return col;
}

void require_valid(const Solution& sol, std::span<const DiscreteDistribution> mus) {
  const auto report = validate_solution(sol, mus);
  if (!report) {
    std::string why = "solution fails validation";
    if (!report.violations.empty()) why += ": " + report.violations.front();
    throw Error(ErrorCode::kInvalidSolution, why);
  }
}

// Efraimidis-Spirakis keys: the n largest u^(1/w) form a weighted sample
// without replacement.
std::vector<Eigen::Index> weighted_sample_without_replacement(const Vector& weights,
                                                              std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<double, Eigen::Index>> keys;
  keys.reserve(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index s = 0; s < weights.size(); ++s) {
    const double u = unif(rng);
    if (weights(s) <= 0.0) continue;
    keys.emplace_back(std::log(std::max(u, 1e-300)) / weights(s), s);
  }
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<Eigen::Index> picked;
  for (std::size_t r = 0; r < std::min(n, keys.size()); ++r) picked.push_back(keys[r].second);
  // More atoms requested than distinct support points: duplicate.
  std::discrete_distribution<Eigen::Index> extra(weights.data(), weights.data() + weights.size());
  while (picked.size() < n) picked.push_back(extra(rng));
  return picked;
}

Matrix initial_support(const PooledAtoms& pooled, const SolverOptions& opts, Rng& rng) {
  const std::size_t n = opts.support_size;
  Matrix centers(static_cast<Eigen::Index>(n), pooled.points.cols());
  if (opts.init == InitMethod::kWeightedSample) {
    const auto picked = weighted_sample_without_replacement(pooled.weights, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
      centers.row(static_cast<Eigen::Index>(j)) = pooled.points.row(picked[j]);
    }
    return centers;
  }
  std::discrete_distribution<Eigen::Index> first(pooled.weights.data(),
                                                 pooled.weights.data() + pooled.weights.size());
  Eigen::Index pick = first(rng);
  Vector nearest = Vector::Constant(pooled.points.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < n; ++j) {
    centers.row(static_cast<Eigen::Index>(j)) = pooled.points.row(pick);
    const Vector dist = (pooled.points.rowwise() - pooled.points.row(pick)).rowwise().squaredNorm();
    nearest = nearest.cwiseMin(dist);
    for (Eigen::Index s = 0; s < nearest.size(); ++s) {
      if (pooled.weights(s) <= 0.0) nearest(s) = -1.0;
    }
    nearest.maxCoeff(&pick);
  }
  return centers;
}

struct TransportStep {
  std::vector<Matrix> plans;
  std::vector<Matrix> costs;
  double objective = 0.0;
};

TransportStep transport_step(std::span<const DiscreteDistribution> mus, const Matrix& centers,
                             const Vector& b, double p) {
  TransportStep step;
  step.plans.reserve(mus.size());
  step.costs.reserve(mus.size());
  const double k = static_cast<double>(mus.size());
  for (const auto& mu : mus) {
    Matrix cost = cost_matrix(mu.atoms(), centers, p);
    TransportPlan plan = solve_transport(mu.weights(), b, cost);
    step.objective += plan.cost / k;
    step.plans.push_back(std::move(plan.flow));
    step.costs.push_back(std::move(cost));
  }
  return step;
}

Vector nearest_atom_mass(std::span<const DiscreteDistribution> mus, const Matrix& centers,
                         double p) {
  Vector mass = Vector::Zero(centers.rows());
  for (const auto& mu : mus) {
    const Matrix cost = cost_matrix(mu.atoms(), centers, p);
    for (Eigen::Index t = 0; t < cost.rows(); ++t) {
      Eigen::Index j = 0;
      cost.row(t).minCoeff(&j);
      mass(j) += mu.weights()(t);
    }
  }
  return mass / static_cast<double>(mus.size());
}

struct Iterate {
  Matrix centers;
  Vector weights;
  TransportStep step;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

// One alternating run from a given initial support.
Iterate run_alternation(std::span<const DiscreteDistribution> mus, const PooledAtoms& pooled,
                        Matrix centers, const SolverOptions& opts) {
  const auto n = static_cast<Eigen::Index>(opts.support_size);
  Vector b = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector proposed_b;

  Iterate best;
  best.step.objective = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  double previous = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iter = 0;

  for (iter = 1; iter <= opts.max_outer_iters; ++iter) {
    TransportStep step;
    if (proposed_b.size() == n) {
      step = transport_step(mus, centers, proposed_b, opts.p);
      if (step.objective <= previous) {
        b = proposed_b;
      } else {
        step = transport_step(mus, centers, b, opts.p);
      }
      proposed_b.resize(0);
    } else {
      step = transport_step(mus, centers, b, opts.p);
    }

    const double obj = step.objective;
    if (obj > previous + 1e-10 * (1.0 + std::abs(previous))) {
      std::ostringstream msg;
      msg << "objective increased from " << previous << " to " << obj << " at iteration "
          << iter;
      throw Error(ErrorCode::kNumericalFailure, msg.str());
    }
    trace.push_back(obj);
    if (obj < best.step.objective) {
      best.centers = centers;
      best.weights = b;
      best.step = step;
    }
    if (obj == 0.0 || (std::isfinite(previous) && previous - obj <= opts.rel_tol * previous)) {
      converged = true;
      break;
    }
    previous = obj;
    if (iter == opts.max_outer_iters) break;

    // Support update: each atom moves to the minimizer of its column cost.
    Solution sol{step.plans, b};
    Vector atom_cost = Vector::Zero(pooled.points.rows());
    for (std::size_t i = 0; i < mus.size(); ++i) {
      const Vector per_row = step.plans[i].cwiseProduct(step.costs[i]).rowwise().sum();
      atom_cost.segment(static_cast<Eigen::Index>(pooled.offsets[i]), per_row.size()) = per_row;
    }
    std::vector<bool> reseeded(static_cast<std::size_t>(pooled.points.rows()), false);
    for (Eigen::Index j = 0; j < n; ++j) {
      Column col = gather_column(sol, mus, j);
      if (col.weights.size() == 0 || col.weights.sum() <= kMassFloor) {
        Eigen::Index worst = -1;
        for (Eigen::Index s = 0; s < atom_cost.size(); ++s) {
          if (reseeded[static_cast<std::size_t>(s)]) continue;
          if (worst < 0 || atom_cost(s) > atom_cost(worst)) worst = s;
        }
        if (worst >= 0) {
          reseeded[static_cast<std::size_t>(worst)] = true;
          centers.row(j) = pooled.points.row(worst);
        }
        continue;
      }
      const Vector current = centers.row(j).transpose();
      const Vector moved =
          update_support_atom(col.points, col.weights, opts.p, opts.inner_max_iters, opts.inner_tol);
      if (support_objective(col.points, col.weights, moved, opts.p) <=
          support_objective(col.points, col.weights, current, opts.p)) {
        centers.row(j) = moved.transpose();
      }
    }
    if (opts.reestimate_weights) proposed_b = nearest_atom_mass(mus, centers, opts.p);
  }

  best.trace = std::move(trace);
  best.iterations = std::min(iter, opts.max_outer_iters);
  best.converged = converged;
  return best;
}

}  // namespace

void validate_options(const SolverOptions& opts) {
  check_exponent(opts.p);
  if (opts.support_size < 1) throw Error(ErrorCode::kBadParams, "support size must be >= 1");
  if (opts.max_outer_iters < 1 || opts.inner_max_iters < 1) {
    throw Error(ErrorCode::kBadParams, "iteration limits must be >= 1");
  }
  if (!(opts.rel_tol > 0.0) || !(opts.inner_tol > 0.0)) {
    throw Error(ErrorCode::kBadParams, "tolerances must be positive");
  }
  if (opts.restarts < 1) throw Error(ErrorCode::kBadParams, "restarts must be >= 1");
}

double support_objective(const Matrix& points, const Vector& weights,
                         const Eigen::Ref<const Vector>& center, double p) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < points.rows(); ++s) {
    if (weights(s) == 0.0) continue;
    const double dist = (points.row(s).transpose() - center).norm();
    total += weights(s) * powered(dist, p);
  }
  return total;
}

Vector update_support_atom(const Matrix& points, const Vector& weights, double p, int max_iters,
                           double tol) {
  check_exponent(p);
  if (points.rows() != weights.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one weight per point expected");
  }
  if (points.rows() == 0 || !(weights.sum() > 0.0) || (weights.array() < 0.0).any()) {
    throw Error(ErrorCode::kZeroWeight, "support update needs positive total weight");
  }
  if (p == 2.0) return weighted_mean(points, weights);
  if (p == 1.0) return weiszfeld(points, weights, max_iters, tol);
  return gradient_descent(points, weights, p, max_iters, tol);
}

ReconstructedBarycenter reconstruct_barycenter(const Solution& sol,
                                               std::span<const DiscreteDistribution> mus,
                                               double p, int inner_max_iters, double inner_tol) {
  check_exponent(p);
  require_valid(sol, mus);
  const Eigen::Index n = sol.barycenter_weights.size();
  const auto d = static_cast<Eigen::Index>(mus.front().dim());
  Matrix atoms = Matrix::Zero(n, d);
  ReconstructedBarycenter out;
  out.degenerate.assign(static_cast<std::size_t>(n), false);
  Vector weights = sol.barycenter_weights;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Column col = gather_column(sol, mus, j);
    if (col.weights.size() == 0 || col.weights.sum() <= kMassFloor) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      weights(j) = 0.0;
      continue;
    }
    atoms.row(j) = update_support_atom(col.points, col.weights, p, inner_max_iters, inner_tol)
                       .transpose();
  }
  out.distribution = make_distribution_unchecked(std::move(atoms), std::move(weights));
  return out;
}

CostReport solution_cost(const Solution& sol, std::span<const DiscreteDistribution> mus, double p,
                         int inner_max_iters, double inner_tol) {
  const auto nu = reconstruct_barycenter(sol, mus, p, inner_max_iters, inner_tol);
  const Eigen::Index n = sol.barycenter_weights.size();
  const double k = static_cast<double>(mus.size());
  CostReport report;
  report.per_atom_costs = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (nu.degenerate[static_cast<std::size_t>(j)]) continue;
    const Column col = gather_column(sol, mus, j);
    report.per_atom_costs(j) =
        support_objective(col.points, col.weights, nu.distribution.atom(static_cast<std::size_t>(j)).transpose(), p) / k;
  }
  report.total_cost = report.per_atom_costs.sum();
  report.converged = true;
  return report;
}

double pairwise_cost_p2(const Solution& sol, std::span<const DiscreteDistribution> mus) {
  require_valid(sol, mus);
  const Eigen::Index n = sol.barycenter_weights.size();
  const double k = static_cast<double>(mus.size());
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double b = sol.barycenter_weights(j);
    if (!(b > 0.0)) {
      throw Error(ErrorCode::kZeroAtomWeight, "pairwise form needs every b_j > 0");
    }
    const Column col = gather_column(sol, mus, j);
    double pairs = 0.0;
    for (Eigen::Index s = 0; s < col.points.rows(); ++s) {
      for (Eigen::Index t = 0; t < col.points.rows(); ++t) {
        pairs += col.weights(s) * col.weights(t) *
                 (col.points.row(s) - col.points.row(t)).squaredNorm();
      }
    }
    total += pairs / (2.0 * k * b);
  }
  return total / k;
}

BarycenterResult solve_barycenter(std::span<const DiscreteDistribution> mus,
                                  const SolverOptions& opts) {
  if (mus.empty()) throw Error(ErrorCode::kEmptyInput, "no distributions given");
  validate_options(opts);
  const PooledAtoms pooled = pooled_atoms(mus);

  Iterate best;
  best.step.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    Rng rng = make_rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(r)}));
    Iterate run = run_alternation(mus, pooled, initial_support(pooled, opts, rng), opts);
    if (run.step.objective < best.step.objective) best = std::move(run);
  }

  BarycenterResult result;
  result.solution.plans = best.step.plans;
  result.solution.barycenter_weights = best.weights;
  result.barycenter = make_distribution_unchecked(best.centers, best.weights);
  result.report.total_cost = best.step.objective;
  result.report.per_atom_costs = Vector::Zero(best.weights.size());
  const double k = static_cast<double>(mus.size());
  for (std::size_t i = 0; i < mus.size(); ++i) {
    result.report.per_atom_costs +=
        best.step.plans[i].cwiseProduct(best.step.costs[i]).colwise().sum().transpose() / k;
  }
  result.report.total_cost = result.report.per_atom_costs.sum();
  result.report.iterations = best.iterations;
  result.report.converged = best.converged;
  result.trace = std::move(best.trace);
  return result;
}

}  // namespace wbdr
