#include "wbdr/core.hpp"

#include <cmath>
#include <sstream>

namespace wbdr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBadExponent: return "BadExponent";
    case ErrorCode::kBadLambdas: return "BadLambdas";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kZeroWeight: return "ZeroWeight";
    case ErrorCode::kZeroAtomWeight: return "ZeroAtomWeight";
    case ErrorCode::kInvalidSolution: return "InvalidSolution";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBadParams: return "BadParams";
    case ErrorCode::kBadSize: return "BadSize";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kRaggedRows: return "RaggedRows";
    case ErrorCode::kNotMultipleOfN: return "NotMultipleOfN";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

DiscreteDistribution make_distribution_unchecked(Matrix atoms, Vector weights) {
  DiscreteDistribution out;
  out.atoms_ = std::move(atoms);
  out.weights_ = std::move(weights);
  return out;
}

DiscreteDistribution make_distribution(Matrix atoms, Vector weights) {
  if (atoms.rows() == 0 || weights.size() == 0) {
    throw Error(ErrorCode::kEmpty, "a distribution needs at least one atom");
  }
  if (atoms.rows() != weights.size()) {
    throw Error(ErrorCode::kShapeMismatch, "atom and weight counts differ");
  }
  if (!atoms.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "atom coordinates must be finite");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw Error(ErrorCode::kBadWeights, "weights must be finite and nonnegative");
  }
  const double total = weights.sum();
  if (std::abs(total - 1.0) > kNormalizationTol) {
    std::ostringstream msg;
    msg << "weights sum to " << total << ", expected 1";
    throw Error(ErrorCode::kBadWeights, msg.str());
  }
  weights /= total;
  return make_distribution_unchecked(std::move(atoms), std::move(weights));
}

DiscreteDistribution make_distribution(const std::vector<std::vector<double>>& atoms,
                                       const std::vector<double>& weights) {
  if (atoms.empty()) throw Error(ErrorCode::kEmpty, "a distribution needs at least one atom");
  const std::size_t d = atoms.front().size();
  Matrix m(static_cast<Eigen::Index>(atoms.size()), static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < atoms.size(); ++t) {
    if (atoms[t].size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "atoms have differing dimensions");
    }
    for (std::size_t c = 0; c < d; ++c) m(t, c) = atoms[t][c];
  }
  Vector w = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return make_distribution(std::move(m), std::move(w));
}

DiscreteDistribution uniform_distribution(Matrix atoms) {
  const auto n = atoms.rows();
  if (n == 0) throw Error(ErrorCode::kEmpty, "a distribution needs at least one atom");
  Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return make_distribution(std::move(atoms), std::move(w));
}

DiscreteDistribution dirac(const Vector& point) {
  Matrix atoms = point.transpose();
  return make_distribution(std::move(atoms), Vector::Ones(1));
}

std::size_t common_dimension(std::span<const DiscreteDistribution> distributions) {
  if (distributions.empty()) throw Error(ErrorCode::kEmptyInput, "no distributions given");
  const std::size_t d = distributions.front().dim();
  for (const auto& mu : distributions) {
    if (mu.dim() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "distributions live in different dimensions");
    }
  }
  return d;
}

PooledAtoms pooled_atoms(std::span<const DiscreteDistribution> distributions) {
  const std::size_t d = common_dimension(distributions);
  Eigen::Index total = 0;
  for (const auto& mu : distributions) total += static_cast<Eigen::Index>(mu.size());

  PooledAtoms out;
  out.points.resize(total, static_cast<Eigen::Index>(d));
  out.weights.resize(total);
  out.origins.reserve(static_cast<std::size_t>(total));
  out.offsets.reserve(distributions.size());
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < distributions.size(); ++i) {
    const auto& mu = distributions[i];
    const auto t = static_cast<Eigen::Index>(mu.size());
    out.offsets.push_back(static_cast<std::size_t>(row));
    out.points.middleRows(row, t) = mu.atoms();
    out.weights.segment(row, t) = mu.weights();
    out.origins.insert(out.origins.end(), mu.size(), i);
    row += t;
  }
  return out;
}

Vector Solution::column_mass() const {
  Vector mass = Vector::Zero(barycenter_weights.size());
  for (const auto& plan : plans) mass += plan.colwise().sum().transpose();
  return mass;
}

ValidationReport validate_solution(const Solution& solution,
                                   std::span<const DiscreteDistribution> distributions,
                                   double tol) {
  ValidationReport report;
  auto fail = [&report](std::string why) {
    report.ok = false;
    report.violations.push_back(std::move(why));
  };

  if (solution.plans.size() != distributions.size()) {
    fail("expected " + std::to_string(distributions.size()) + " plans, got " +
         std::to_string(solution.plans.size()));
    return report;
  }
  const Eigen::Index n = solution.barycenter_weights.size();
  if (n == 0) {
    fail("barycenter has no atoms");
    return report;
  }
  if ((solution.barycenter_weights.array() < -tol).any()) fail("negative barycenter weight");

  for (std::size_t i = 0; i < distributions.size(); ++i) {
    const auto& plan = solution.plans[i];
    const auto& mu = distributions[i];
    const std::string tag = "plan " + std::to_string(i);
    if (plan.rows() != static_cast<Eigen::Index>(mu.size()) || plan.cols() != n) {
      fail(tag + ": shape mismatch");
      continue;
    }
    if (!plan.allFinite()) {
      fail(tag + ": non-finite entry");
      continue;
    }
    if (plan.minCoeff() < -tol) fail(tag + ": negative flow");
    const Vector rows = plan.rowwise().sum();
    for (Eigen::Index t = 0; t < rows.size(); ++t) {
      if (std::abs(rows(t) - mu.weights()(t)) > tol) {
        fail(tag + ": row " + std::to_string(t) + " does not sum to its atom weight");
      }
    }
    const Vector cols = plan.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(cols(j) - solution.barycenter_weights(j)) > tol) {
        fail(tag + ": column " + std::to_string(j) + " does not sum to b_j");
      }
    }
  }
  return report;
}

}  // namespace wbdr
