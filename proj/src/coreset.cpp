#include "wbdr/coreset.hpp"

#include <cmath>
#include <random>

#include "wbdr/rng.hpp"
#include "wbdr/transport.hpp"

namespace wbdr {

namespace {

Vector costs_to(std::span<const DiscreteDistribution> mus, const DiscreteDistribution& nu,
                double p) {
  Vector costs(static_cast<Eigen::Index>(mus.size()));
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (mus[i].dim() != nu.dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "query lives in a different dimension");
    }
    costs(static_cast<Eigen::Index>(i)) = solve_ot(mus[i], nu, p).cost;
  }
  return costs;
}

WeightedCoreset sample(const Vector& q, std::size_t size, std::uint64_t seed) {
  if (size < 1) throw Error(ErrorCode::kBadSize, "coreset size must be >= 1");
  const double population = static_cast<double>(q.size());
  std::discrete_distribution<std::size_t> draw(q.data(), q.data() + q.size());
  Rng rng = make_rng(seed);
  WeightedCoreset out;
  out.members.reserve(size);
  for (std::size_t r = 0; r < size; ++r) {
    const std::size_t idx = draw(rng);
    const double weight =
        1.0 / (population * static_cast<double>(size) * q(static_cast<Eigen::Index>(idx)));
    out.members.push_back({idx, weight});
  }
  return out;
}

}  // namespace

SensitivityScores sensitivity_from_costs(const Vector& anchor_costs, double alpha, double p) {
  if (!(alpha >= 1.0)) throw Error(ErrorCode::kBadParams, "alpha must be >= 1");
  check_exponent(p);
  if (anchor_costs.size() == 0) throw Error(ErrorCode::kEmptyInput, "no distributions given");
  const double average = anchor_costs.mean();
  const double floor = alpha * std::pow(4.0, p - 1.0) + std::pow(4.0, p - 1.0);
  const double ratio_coef = alpha * std::pow(2.0, p - 1.0);

  SensitivityScores out;
  out.alpha = alpha;
  out.p = p;
  out.s = Vector::Constant(anchor_costs.size(), floor);
  if (average > 0.0) out.s.array() += ratio_coef * anchor_costs.array() / average;
  out.mean_s = out.s.mean();
  out.q = out.s / (static_cast<double>(out.s.size()) * out.mean_s);
  return out;
}

SensitivityScores sensitivity_upper_bounds(std::span<const DiscreteDistribution> mus,
                                           const DiscreteDistribution& nu_prime, double alpha,
                                           double p) {
  check_exponent(p);
  return sensitivity_from_costs(costs_to(mus, nu_prime, p), alpha, p);
}

WeightedCoreset build_coreset(const SensitivityScores& scores, std::size_t size,
                              std::uint64_t seed) {
  return sample(scores.q, size, seed);
}

WeightedCoreset build_uniform_coreset(std::size_t population, std::size_t size,
                                      std::uint64_t seed) {
  if (population < 1) throw Error(ErrorCode::kEmptyInput, "empty population");
  if (size == population) {
    WeightedCoreset out;
    for (std::size_t i = 0; i < population; ++i) {
      out.members.push_back({i, 1.0 / static_cast<double>(population)});
    }
    return out;
  }
  return sample(Vector::Constant(static_cast<Eigen::Index>(population),
                                 1.0 / static_cast<double>(population)),
                size, seed);
}

CoresetSizeBound coreset_size_bound(std::size_t n, std::size_t d, double eps, double delta,
                                    double alpha, double p, double c_cs, double observed_mean_s,
                                    double pseudo_dimension_surrogate) {
  if (n < 1 || d < 1 || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) ||
      !(alpha >= 1.0) || !(p >= 1.0) || !(c_cs > 0.0) || observed_mean_s < 0.0 ||
      pseudo_dimension_surrogate < 0.0) {
    throw Error(ErrorCode::kBadParams, "coreset bound parameters out of range");
  }
  auto sample_size = [&](double total, double pdim) {
    return c_cs * total / (eps * eps) * (pdim * std::log(total) + std::log(1.0 / delta));
  };
  CoresetSizeBound out;
  out.pseudo_dimension = std::pow(static_cast<double>(n), 8.0) * std::pow(static_cast<double>(d), 4.0);
  out.total_sensitivity =
      alpha * (std::pow(4.0, p - 1.0) + std::pow(2.0, p - 1.0)) + std::pow(4.0, p - 1.0);
  out.theoretical = sample_size(out.total_sensitivity, out.pseudo_dimension);
  if (observed_mean_s > 0.0) out.practical = sample_size(observed_mean_s, pseudo_dimension_surrogate);
  return out;
}

CoresetEvaluation evaluate_coreset(const WeightedCoreset& coreset, const Vector& query_costs) {
  CoresetEvaluation out;
  for (const auto& member : coreset.members) {
    if (member.index >= static_cast<std::size_t>(query_costs.size())) {
      throw Error(ErrorCode::kShapeMismatch, "coreset member outside the collection");
    }
    out.cost_core += member.weight * query_costs(static_cast<Eigen::Index>(member.index));
  }
  out.cost_orig = query_costs.mean();
  if (out.cost_orig != 0.0) {
    out.rel_error = std::abs(out.cost_core - out.cost_orig) / std::abs(out.cost_orig);
  } else if (out.cost_core != 0.0) {
    out.undefined = true;
    out.rel_error = INFINITY;
  }
  return out;
}

CoresetEvaluation evaluate_coreset(const WeightedCoreset& coreset,
                                   std::span<const DiscreteDistribution> mus,
                                   const DiscreteDistribution& query, double p) {
  check_exponent(p);
  if (mus.empty()) throw Error(ErrorCode::kEmptyInput, "no distributions given");
  return evaluate_coreset(coreset, costs_to(mus, query, p));
}

}  // namespace wbdr
