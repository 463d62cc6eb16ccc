#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wbdr/core.hpp"

namespace wbdr {

// A coupling between two distributions and its cost sum(flow .* C).
struct TransportPlan {
  Matrix flow;
  double cost = 0.0;
};

// Throws BadExponent unless p >= 1.
void check_exponent(double p);

// C(s, t) = ||x_s - y_t||^p.
Matrix cost_matrix(const Matrix& x, const Matrix& y, double p);
Matrix cost_matrix(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p);

double cost_of_plan(const Matrix& plan, const Matrix& cost);

// Exact solution of min <flow, C> subject to flow 1 = supply, flow^T 1 = demand,
// flow >= 0. The result is a basic feasible solution. Atoms lighter than
// 1e-15 are removed before solving and come back as zero rows / columns.
//
// Uniform marginals of equal length are dispatched to the assignment solver
// (a permutation is an optimal vertex there); everything else runs the
// transportation simplex.
TransportPlan solve_transport(const Vector& supply, const Vector& demand, const Matrix& cost);

// Always uses the transportation simplex, regardless of marginals.
TransportPlan solve_transport_simplex(const Vector& supply, const Vector& demand,
                                      const Matrix& cost);

TransportPlan solve_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p);

// W_p, the p-th root of solve_ot(...).cost.
double wasserstein_p(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p);

// sum_i lambda_i W_p(mu_i, nu)^p. Empty lambdas means 1/k each.
double barycenter_objective(const DiscreteDistribution& nu,
                            std::span<const DiscreteDistribution> mus, double p,
                            std::span<const double> lambdas = {});

// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
// paths). Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

}  // namespace wbdr
