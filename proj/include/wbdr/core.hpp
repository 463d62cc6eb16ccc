#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbdr/error.hpp"

namespace wbdr {

// Points are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kMarginalTol = 1e-9;
inline constexpr double kNormalizationTol = 1e-6;

// A weighted finite point set in R^d whose weights sum to one.
// Immutable once built; use make_distribution to construct.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;

  std::size_t size() const noexcept { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(atoms_.cols()); }
  const Matrix& atoms() const noexcept { return atoms_; }
  const Vector& weights() const noexcept { return weights_; }
  double weight(std::size_t t) const { return weights_(static_cast<Eigen::Index>(t)); }
  auto atom(std::size_t t) const { return atoms_.row(static_cast<Eigen::Index>(t)); }

 private:
  friend DiscreteDistribution make_distribution(Matrix atoms, Vector weights);
  friend DiscreteDistribution make_distribution_unchecked(Matrix atoms, Vector weights);

  Matrix atoms_;
  Vector weights_;
};

// Validates and normalizes. Weights must be nonnegative and sum to one within
// kNormalizationTol; they are then rescaled to sum to exactly one.
DiscreteDistribution make_distribution(Matrix atoms, Vector weights);
DiscreteDistribution make_distribution(const std::vector<std::vector<double>>& atoms,
                                       const std::vector<double>& weights);

// Skips the normalization check. Barycenters with zero-mass atoms and
// projected copies of validated inputs go through here.
DiscreteDistribution make_distribution_unchecked(Matrix atoms, Vector weights);

DiscreteDistribution uniform_distribution(Matrix atoms);
DiscreteDistribution dirac(const Vector& point);

// Every distribution must share one dimension; throws DimensionMismatch
// otherwise and EmptyInput for an empty list.
std::size_t common_dimension(std::span<const DiscreteDistribution> distributions);

struct PooledAtoms {
  Matrix points;
  Vector weights;                    // not renormalized: sums to k
  std::vector<std::size_t> origins;  // source distribution index per row
  std::vector<std::size_t> offsets;  // first pooled row of each distribution
};

PooledAtoms pooled_atoms(std::span<const DiscreteDistribution> distributions);

// Per-distribution couplings to n barycenter atoms. plans[i] is T_i x n and
// plans[i](t, j) is the mass of atom t of distribution i sent to atom j.
struct Solution {
  std::vector<Matrix> plans;
  Vector barycenter_weights;

  std::size_t support_size() const noexcept {
    return static_cast<std::size_t>(barycenter_weights.size());
  }
  // Total mass sent to atom j over all distributions (k * b_j when valid).
  Vector column_mass() const;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  explicit operator bool() const noexcept { return ok; }
};

ValidationReport validate_solution(const Solution& solution,
                                   std::span<const DiscreteDistribution> distributions,
                                   double tol = kMarginalTol);

struct CostReport {
  double total_cost = 0.0;
  Vector per_atom_costs;
  int iterations = 0;
  bool converged = false;
};

}  // namespace wbdr
