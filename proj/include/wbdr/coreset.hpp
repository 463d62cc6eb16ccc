#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wbdr/core.hpp"

namespace wbdr {

// Per-distribution sensitivity upper bounds and the sampling law built from
// them: q(mu) = s(mu) / (|M| * mean_s).
struct SensitivityScores {
  Vector s;
  double mean_s = 0.0;
  Vector q;
  double alpha = 1.0;
  double p = 2.0;
};

// s(mu) = alpha 2^(p-1) W(mu, nu')^p / avg_mu~ W(mu~, nu')^p + alpha 4^(p-1) + 4^(p-1),
// where nu' is an alpha-approximate barycenter. When every distance is zero
// the ratio term is taken as zero.
SensitivityScores sensitivity_upper_bounds(std::span<const DiscreteDistribution> mus,
                                           const DiscreteDistribution& nu_prime, double alpha,
                                           double p);

// Same bound from precomputed W(mu, nu')^p values.
SensitivityScores sensitivity_from_costs(const Vector& anchor_costs, double alpha, double p);

struct CoresetMember {
  std::size_t index = 0;  // into the original collection
  double weight = 0.0;
};

struct WeightedCoreset {
  std::vector<CoresetMember> members;  // duplicates allowed
  std::size_t size() const noexcept { return members.size(); }
};

// |K| i.i.d. draws from q, each weighted 1 / (|M| |K| q(mu)).
WeightedCoreset build_coreset(const SensitivityScores& scores, std::size_t size,
                              std::uint64_t seed);

// Same construction with q uniform, so every weight is 1/|K|. A sample as
// large as the population is the whole collection, each member once.
WeightedCoreset build_uniform_coreset(std::size_t population, std::size_t size,
                                      std::uint64_t seed);

struct CoresetSizeBound {
  double pseudo_dimension = 0.0;      // n^8 d^4
  double total_sensitivity = 0.0;     // alpha (4^(p-1) + 2^(p-1)) + 4^(p-1)
  double theoretical = 0.0;           // sample size with the two quantities above
  double practical = 0.0;             // sample size with mean_s and a surrogate pseudo-dimension
};

// Sample-size formula c S / eps^2 (d' ln S + ln 1/delta), evaluated once with
// the worst-case quantities and once with the observed mean score and a
// caller-supplied pseudo-dimension surrogate. Informational only.
CoresetSizeBound coreset_size_bound(std::size_t n, std::size_t d, double eps, double delta,
                                    double alpha, double p, double c_cs,
                                    double observed_mean_s = 0.0,
                                    double pseudo_dimension_surrogate = 0.0);

struct CoresetEvaluation {
  double cost_core = 0.0;
  double cost_orig = 0.0;
  double rel_error = 0.0;
  bool undefined = false;  // cost_orig = 0 but cost_core != 0
};

CoresetEvaluation evaluate_coreset(const WeightedCoreset& coreset,
                                   std::span<const DiscreteDistribution> mus,
                                   const DiscreteDistribution& query, double p);

// Same evaluation from precomputed W(mu, query)^p values.
CoresetEvaluation evaluate_coreset(const WeightedCoreset& coreset, const Vector& query_costs);

}  // namespace wbdr
