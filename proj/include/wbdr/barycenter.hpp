#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wbdr/core.hpp"

namespace wbdr {

enum class InitMethod {
  kWeightedSample,  // n pooled atoms, weighted sampling without replacement
  kFarthestPoint,   // one weighted draw, then greedy farthest-point traversal
};

struct SolverOptions {
  std::size_t support_size = 1;
  double p = 2.0;
  int max_outer_iters = 200;
  double rel_tol = 1e-7;
  std::uint64_t seed = 0;
  int inner_max_iters = 1000;
  double inner_tol = 1e-10;
  InitMethod init = InitMethod::kWeightedSample;
  // Re-estimate the barycenter weights from nearest-atom mass after each
  // support update (kept only when it does not raise the objective).
  bool reestimate_weights = false;
  int restarts = 1;
};

void validate_options(const SolverOptions& opts);

// Value of sum_x w(x) ||x - center||^p.
double support_objective(const Matrix& points, const Vector& weights,
                         const Eigen::Ref<const Vector>& center, double p);

// Minimizer of sum_x w(x) ||x - c||^p over c. Exact weighted mean for p = 2,
// Weiszfeld iteration (Vardi-Zhang variant) for p = 1, backtracking gradient
// descent otherwise.
Vector update_support_atom(const Matrix& points, const Vector& weights, double p,
                           int max_iters = 1000, double tol = 1e-10);

struct ReconstructedBarycenter {
  DiscreteDistribution distribution;
  // Atoms whose column carried no mass; they sit at the origin with weight 0.
  std::vector<bool> degenerate;
};

ReconstructedBarycenter reconstruct_barycenter(const Solution& sol,
                                               std::span<const DiscreteDistribution> mus,
                                               double p, int inner_max_iters = 1000,
                                               double inner_tol = 1e-10);

// (1/k) sum_j sum_{i,t} plan_i(t, j) ||x_{i,t} - nu_j||^p with nu reconstructed
// from the solution's own columns.
CostReport solution_cost(const Solution& sol, std::span<const DiscreteDistribution> mus,
                         double p, int inner_max_iters = 1000, double inner_tol = 1e-10);

// The p = 2 cost written through pairwise distances inside each column:
// (1/k) sum_j 1/(2 k b_j) sum_{x,y in S_j} w(x) w(y) ||x - y||^2.
double pairwise_cost_p2(const Solution& sol, std::span<const DiscreteDistribution> mus);

struct BarycenterResult {
  DiscreteDistribution barycenter;
  Solution solution;  // optimal couplings from each input to `barycenter`
  CostReport report;
  std::vector<double> trace;  // objective after each transport step
};

// Free-support alternating minimization with a fixed number of atoms:
// transport step (k exact OT problems) followed by per-atom support updates,
// until the relative decrease drops below rel_tol. The objective trace is
// non-increasing; the best restart is returned.
BarycenterResult solve_barycenter(std::span<const DiscreteDistribution> mus,
                                  const SolverOptions& opts);

}  // namespace wbdr
