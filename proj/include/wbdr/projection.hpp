#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wbdr/barycenter.hpp"
#include "wbdr/core.hpp"

namespace wbdr {

enum class MapKind { kGaussian, kSrht, kIdentity };

std::string_view to_string(MapKind kind);
MapKind parse_map_kind(std::string_view name);

// Linear map R^d -> R^m.
//
// kGaussian: dense m x d matrix with i.i.d. N(0, 1/m) entries.
// kSrht: x -> sqrt(d_pad / m) * P H D pad(x), where pad zero-extends to the
//   next power of two d_pad, D flips signs, H is the orthonormal
//   Walsh-Hadamard transform and P keeps m distinct coordinates.
// kIdentity: m = d.
//
// Both random kinds have E ||f(x)||^2 = ||x||^2.
class ProjectionMap {
 public:
  MapKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return d_; }
  std::size_t output_dim() const noexcept { return m_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Vector apply(const Eigen::Ref<const Vector>& x) const;
  // Maps each row.
  Matrix apply_rows(const Matrix& points) const;

  const Matrix& gaussian_matrix() const noexcept { return gaussian_; }
  const std::vector<double>& signs() const noexcept { return signs_; }
  const std::vector<std::size_t>& sampled_coordinates() const noexcept { return sampled_; }
  std::size_t padded_dim() const noexcept { return signs_.size(); }
  double scale() const noexcept { return scale_; }

 private:
  friend ProjectionMap make_gaussian_map(std::size_t d, std::size_t m, std::uint64_t seed);
  friend ProjectionMap make_srht_map(std::size_t d, std::size_t m, std::uint64_t seed);
  friend ProjectionMap make_identity_map(std::size_t d);

  MapKind kind_ = MapKind::kIdentity;
  std::size_t d_ = 0;
  std::size_t m_ = 0;
  std::uint64_t seed_ = 0;
  Matrix gaussian_;
  std::vector<double> signs_;
  std::vector<std::size_t> sampled_;
  double scale_ = 1.0;
};

ProjectionMap make_gaussian_map(std::size_t d, std::size_t m, std::uint64_t seed);
ProjectionMap make_srht_map(std::size_t d, std::size_t m, std::uint64_t seed);
ProjectionMap make_identity_map(std::size_t d);
ProjectionMap make_map(MapKind kind, std::size_t d, std::size_t m, std::uint64_t seed);

std::size_t next_power_of_two(std::size_t n);

// In-place Walsh-Hadamard transform scaled by 1/sqrt(len), so it is
// orthogonal. The length must be a power of two.
void fwht_normalized(std::span<double> data);

enum class DimensionPolicy {
  kP2,          // ln(nk/delta) / eps^2
  kKirszbraun,  // p^2 ln(nk/delta) / eps^2
  kOptimal,     // p^4 ln(n/(eps delta)) / eps^2
};

std::string_view to_string(DimensionPolicy policy);
DimensionPolicy parse_policy(std::string_view name);

// ceil(c_jl * f(policy)). The constant is not pinned down by the bounds, so
// it is left to the caller. k is required by kP2 and kKirszbraun.
std::size_t jl_dimension(std::size_t n, double eps, double delta, double p,
                         DimensionPolicy policy, std::optional<std::size_t> k = std::nullopt,
                         double c_jl = 1.0);

std::vector<DiscreteDistribution> project_instance(std::span<const DiscreteDistribution> mus,
                                                   const ProjectionMap& map);

struct ReductionResult {
  DiscreteDistribution low_barycenter;  // in R^m
  DiscreteDistribution barycenter;      // rebuilt in R^d from the same couplings
  Solution solution;
  CostReport low;   // cost of the solution on the projected inputs
  CostReport high;  // cost of the same solution on the original inputs
  double projection_seconds = 0.0;
  double solve_seconds = 0.0;
  double reconstruction_seconds = 0.0;
};

// Project, solve in R^m, then rebuild each atom in R^d from the column it
// received. Atom weights carry over unchanged.
ReductionResult reduce_solve_reconstruct(std::span<const DiscreteDistribution> mus,
                                         const ProjectionMap& map, const SolverOptions& opts);

struct SweepRow {
  std::size_t m = 0;
  double mean_ratio = 0.0;
  double stddev = 0.0;
  double low_seconds = 0.0;   // mean solve time in R^m
  double high_seconds = 0.0;  // mean solve time in R^d
  std::vector<double> ratios;
};

struct SweepOptions {
  std::vector<std::size_t> m_values;
  int trials = 1;
  std::uint64_t seed = 0;
  MapKind kind = MapKind::kGaussian;
  int jobs = 1;
};

// For each (m, trial): fresh map seeded by derive_seed(seed, {m, trial}),
// reduce_solve_reconstruct, and ratio = high cost / cost of the solution
// found directly in R^d with the same solver seed.
std::vector<SweepRow> cost_ratio_sweep(std::span<const DiscreteDistribution> mus,
                                       const SolverOptions& opts, const SweepOptions& sweep);

}  // namespace wbdr
