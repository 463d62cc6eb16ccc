#include "wbdr/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wbdr/barycenter.hpp"
#include "wbdr/rng.hpp"
#include "wbdr/transport.hpp"

namespace wbdr {

LowerBoundInstance gen_lb_barycenter(std::size_t t, double N, double C, double eps, double p) {
  if (t < 2 || !(N >= 2.0) || !(C > 0.0) || !(eps > 0.0) || !(C * eps < 1.0)) {
    throw Error(ErrorCode::kBadParams, "need t >= 2, N >= 2 and 0 < C eps < 1");
  }
  check_exponent(p);
  const auto tt = static_cast<Eigen::Index>(t);
  LowerBoundInstance out;
  out.points = Matrix::Zero(2 * tt, tt);
  for (Eigen::Index i = 0; i < tt; ++i) {
    out.points(i, i) = N;
    out.points(tt + i, i) = N + 1.0;
  }
  out.points(2 * tt - 1, tt - 1) = N + 1.0 - C * eps;

  const double w = 1.0 / static_cast<double>(2 * t - 1);
  for (Eigen::Index skip = 0; skip < 2 * tt; ++skip) {
    Matrix atoms(2 * tt - 1, tt);
    Eigen::Index row = 0;
    for (Eigen::Index s = 0; s < 2 * tt; ++s) {
      if (s != skip) atoms.row(row++) = out.points.row(s);
    }
    out.distributions.push_back(make_distribution(std::move(atoms), Vector::Constant(2 * tt - 1, w)));
  }
  out.masses = Vector::Constant(2 * tt, w * static_cast<double>(2 * t - 1));
  out.support_size = 2 * t - 1;
  out.expected_opt_cost = std::pow(1.0 - C * eps, p);
  return out;
}

double point_center_cost(const Matrix& points, const Vector& masses,
                         std::span<const std::size_t> center_of, double p) {
  check_exponent(p);
  if (center_of.size() != static_cast<std::size_t>(points.rows()) ||
      masses.size() != points.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "one center and mass per point expected");
  }
  double total = 0.0;
  for (Eigen::Index s = 0; s < points.rows(); ++s) {
    const auto c = static_cast<Eigen::Index>(center_of[static_cast<std::size_t>(s)]);
    if (c >= points.rows()) throw Error(ErrorCode::kShapeMismatch, "center index out of range");
    total += masses(s) * std::pow((points.row(s) - points.row(c)).norm(), p);
  }
  return total;
}

std::vector<std::size_t> lb_explicit_assignment(const LowerBoundInstance& instance) {
  const auto count = static_cast<std::size_t>(instance.points.rows());
  std::vector<std::size_t> center(count);
  for (std::size_t s = 0; s < count; ++s) center[s] = s;
  const std::size_t t = count / 2;
  center[count - 1] = t - 1;  // q_t -> p_t
  return center;
}

std::vector<std::size_t> best_merge_assignment(const Matrix& points, const Vector& masses,
                                               double p) {
  check_exponent(p);
  const Eigen::Index count = points.rows();
  if (count < 2) throw Error(ErrorCode::kBadParams, "need at least two points to merge");
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index mover = 0;
  Eigen::Index target = 1;
  for (Eigen::Index s = 0; s < count; ++s) {
    for (Eigen::Index c = 0; c < count; ++c) {
      if (c == s) continue;
      const double cost = masses(s) * std::pow((points.row(s) - points.row(c)).norm(), p);
      if (cost < best) {
        best = cost;
        mover = s;
        target = c;
      }
    }
  }
  std::vector<std::size_t> center(static_cast<std::size_t>(count));
  for (Eigen::Index s = 0; s < count; ++s) center[static_cast<std::size_t>(s)] = static_cast<std::size_t>(s);
  center[static_cast<std::size_t>(mover)] = static_cast<std::size_t>(target);
  return center;
}

MatchingInstance gen_ot_pair(std::size_t d) {
  if (d < 2 || d % 2 != 0) throw Error(ErrorCode::kBadParams, "d must be even and >= 2");
  const auto dd = static_cast<Eigen::Index>(d);
  MatchingInstance out;
  out.a = Matrix::Zero(dd, dd);
  out.b = Matrix::Zero(dd, dd);
  for (Eigen::Index i = 0; i < dd; ++i) {
    // i is 0-based here, so even i is an odd axis in 1-based terms.
    const bool full_in_a = (i % 2 == 0);
    out.a(i, i) = full_in_a ? 1.0 : 0.5;
    out.b(i, i) = full_in_a ? 0.5 : 1.0;
  }
  out.reference_cost = static_cast<double>(d) / 2.0;
  return out;
}

MatchingInstance gen_pullback(std::size_t d, std::size_t C) {
  if (d < 2 || d % 2 != 0 || C < 2 || C % 2 != 0) {
    throw Error(ErrorCode::kBadParams, "d and C must be even and >= 2");
  }
  const auto half = static_cast<Eigen::Index>(d * C / 2);
  MatchingInstance out;
  out.a = Matrix::Zero(half, static_cast<Eigen::Index>(d));
  out.b = Matrix::Zero(half, static_cast<Eigen::Index>(d));
  Eigen::Index na = 0;
  Eigen::Index nb = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t level = 1; level <= C; ++level) {
      const bool in_a = ((level + i) % 2 == 1);
      const double coord = static_cast<double>(level) / static_cast<double>(C);
      if (in_a) {
        out.a(na++, static_cast<Eigen::Index>(i)) = coord;
      } else {
        out.b(nb++, static_cast<Eigen::Index>(i)) = coord;
      }
    }
  }
  out.reference_cost = static_cast<double>(d) / 2.0;
  return out;
}

std::vector<DiscreteDistribution> gen_coreset_synthetic(std::size_t k) {
  if (k < 2) throw Error(ErrorCode::kBadParams, "k must be >= 2");
  std::vector<DiscreteDistribution> out;
  out.reserve(k);
  for (std::size_t i = 0; i + 1 < k; ++i) out.push_back(dirac(Vector::Zero(1)));
  out.push_back(dirac(Vector::Constant(1, static_cast<double>(k))));
  return out;
}

LabelledPoints gen_synthetic_digits(std::size_t classes, std::size_t per_class,
                                    std::size_t side, std::uint64_t seed) {
  if (classes < 1 || per_class < 1 || side < 2) {
    throw Error(ErrorCode::kBadParams, "need classes >= 1, per_class >= 1, side >= 2");
  }
  constexpr int kPrototypes = 3;
  constexpr int kBlobs = 4;
  const auto dim = static_cast<Eigen::Index>(side * side);
  const double extent = static_cast<double>(side);

  LabelledPoints out;
  out.points.resize(static_cast<Eigen::Index>(classes * per_class), dim);
  out.labels.reserve(classes * per_class);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    Rng rng = make_rng(derive_seed(seed, {c}));
    std::uniform_real_distribution<double> where(0.2 * extent, 0.8 * extent);
    std::vector<Vector> protos;
    for (int k = 0; k < kPrototypes; ++k) {
      Vector img = Vector::Zero(dim);
      for (int b = 0; b < kBlobs; ++b) {
        const double cy = where(rng);
        const double cx = where(rng);
        const double sigma = 0.08 * extent;
        for (std::size_t y = 0; y < side; ++y) {
          for (std::size_t x = 0; x < side; ++x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            img(static_cast<Eigen::Index>(y * side + x)) +=
                std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          }
        }
      }
      protos.push_back(img / img.maxCoeff());
    }
    std::uniform_int_distribution<int> pick(0, kPrototypes - 1);
    std::uniform_real_distribution<double> gain(0.7, 1.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (std::size_t s = 0; s < per_class; ++s) {
      const double g = gain(rng);
      const Vector& proto = protos[static_cast<std::size_t>(pick(rng))];
      for (Eigen::Index j = 0; j < dim; ++j) {
        out.points(row, j) = std::clamp(g * proto(j) + noise(rng), 0.0, 1.0);
      }
      out.labels.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return out;
}

std::vector<std::size_t> optimal_matching(const Matrix& a, const Matrix& b, double p) {
  if (a.rows() != b.rows() || a.rows() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "matching needs two nonempty sets of equal size");
  }
  const auto n = static_cast<std::size_t>(a.rows());
  const Vector uniform = Vector::Constant(a.rows(), 1.0 / static_cast<double>(n));
  const TransportPlan plan = solve_transport(uniform, uniform, cost_matrix(a, b, p));
  std::vector<std::size_t> match(n);
  const double unit = 1.0 / static_cast<double>(n);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::Index c = 0;
    const double top = plan.flow.row(r).maxCoeff(&c);
    if (std::abs(top - unit) > kMarginalTol) {
      throw Error(ErrorCode::kNumericalFailure, "matching plan is not a permutation");
    }
    match[static_cast<std::size_t>(r)] = static_cast<std::size_t>(c);
  }
  return match;
}

double matching_cost(const Matrix& a, const Matrix& b, std::span<const std::size_t> match,
                     double p) {
  if (match.size() != static_cast<std::size_t>(a.rows()) || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "matching does not fit the point sets");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < match.size(); ++r) {
    total += std::pow((a.row(static_cast<Eigen::Index>(r)) - b.row(static_cast<Eigen::Index>(match[r]))).norm(), p);
  }
  return total;
}

MatchingDistortion empirical_matching_distortion(const Matrix& a, const Matrix& b,
                                                 const ProjectionMap& map, double p,
                                                 std::optional<double> known_high) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::kShapeMismatch, "|A| must equal |B|");
  const Matrix pa = map.apply_rows(a);
  const Matrix pb = map.apply_rows(b);
  const auto low_match = optimal_matching(pa, pb, p);
  MatchingDistortion out;
  out.low = matching_cost(pa, pb, low_match, p);
  out.pullback = matching_cost(a, b, low_match, p);
  if (known_high) {
    out.high = *known_high;
  } else {
    const auto high_match = optimal_matching(a, b, p);
    out.high = matching_cost(a, b, high_match, p);
  }
  return out;
}

LowRankCheck verify_low_rank_equivalence(std::span<const DiscreteDistribution> mus,
                                         const Solution& sol, std::size_t N) {
  if (N < 1) throw Error(ErrorCode::kBadParams, "N must be >= 1");
  const auto report = validate_solution(sol, mus);
  if (!report) throw Error(ErrorCode::kInvalidSolution, "solution fails validation");

  const double scale = static_cast<double>(N);
  const auto n = sol.barycenter_weights.size();
  const auto d = static_cast<Eigen::Index>(mus.front().dim());

  std::vector<std::pair<Eigen::Index, Eigen::Index>> owner;  // (pooled atom, cluster)
  Eigen::Index base = 0;
  Eigen::Index rows = 0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const Matrix& plan = sol.plans[i];
    for (Eigen::Index t = 0; t < plan.rows(); ++t) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double units = plan(t, j) * scale;
        const double rounded = std::round(units);
        if (std::abs(units - rounded) > kMarginalTol * scale) {
          throw Error(ErrorCode::kNotMultipleOfN, "plan entry is not a multiple of 1/N");
        }
        for (long r = 0; r < static_cast<long>(rounded); ++r) owner.emplace_back(base + t, j);
        rows += static_cast<Eigen::Index>(rounded);
      }
    }
    base += plan.rows();
  }

  const PooledAtoms pooled = pooled_atoms(mus);
  Matrix B(rows, d);
  Matrix X = Matrix::Zero(rows, n);
  Vector cluster_size = Vector::Zero(n);
  for (const auto& [atom, j] : owner) cluster_size(j) += 1.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto [atom, j] = owner[static_cast<std::size_t>(r)];
    B.row(r) = pooled.points.row(atom);
    X(r, j) = 1.0 / std::sqrt(cluster_size(j));
  }
  const Matrix residual = B - X * (X.transpose() * B);

  LowRankCheck out;
  out.frobenius_cost = residual.squaredNorm() / scale;
  out.barycenter_cost = static_cast<double>(mus.size()) * solution_cost(sol, mus, 2.0).total_cost;
  out.match = std::abs(out.frobenius_cost - out.barycenter_cost) <=
              1e-9 * std::max(1.0, std::abs(out.barycenter_cost));
  return out;
}

}  // namespace wbdr
