#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wbdr/transport.hpp"

using namespace wbdr;
using wbdr::testing::on_line;
using wbdr::testing::point_mass;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::kIoError;
}

void check_feasible(const TransportPlan& plan, const Vector& a, const Vector& b) {
  CHECK(plan.flow.minCoeff() >= 0.0);
  CHECK((plan.flow.rowwise().sum() - a).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((plan.flow.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() < 1e-9);
}

}  // namespace

TEST_CASE("cost_matrix examples") {
  CHECK(cost_matrix(point_mass({0.0, 0.0}), point_mass({3.0, 4.0}), 2.0)(0, 0) == doctest::Approx(25.0));
  for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(cost_matrix(point_mass({0.0}), point_mass({0.0}), p)(0, 0) == 0.0);
  const Matrix c = cost_matrix(on_line({0.0, 1.0}, {0.5, 0.5}), on_line({0.0, 2.0}, {0.5, 0.5}), 1.0);
  Matrix expected(2, 2);
  expected << 0.0, 2.0, 1.0, 1.0;
  CHECK((c - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("cost_matrix errors") {
  CHECK(code_of([] { cost_matrix(point_mass({0.0}), point_mass({0.0, 1.0}), 2.0); }) ==
        ErrorCode::kDimensionMismatch);
  CHECK(code_of([] { cost_matrix(point_mass({0.0}), point_mass({1.0}), 0.5); }) == ErrorCode::kBadExponent);
}

TEST_CASE("cost_matrix large inputs agree with the direct formula") {
  Rng rng = make_rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(300, 700);
  Matrix y(300, 700);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = g(rng);
      y(r, c) = g(rng);
    }
  }
  const Matrix fast = cost_matrix(x, y, 2.0);
  for (Eigen::Index r = 0; r < 300; r += 37) {
    for (Eigen::Index c = 0; c < 300; c += 41) {
      CHECK(fast(r, c) == doctest::Approx((x.row(r) - y.row(c)).squaredNorm()).epsilon(1e-9));
    }
  }
}

TEST_CASE("solve_ot examples") {
  const auto one = solve_ot(point_mass({0.0, 0.0}), point_mass({3.0, 4.0}), 1.0);
  CHECK(one.cost == doctest::Approx(5.0));
  CHECK(one.flow(0, 0) == doctest::Approx(1.0));

  const auto same = on_line({0.0, 1.0}, {0.5, 0.5});
  const auto ident = solve_ot(same, same, 2.0);
  CHECK(ident.cost == doctest::Approx(0.0));
  CHECK(ident.flow(0, 0) == doctest::Approx(0.5));
  CHECK(ident.flow(1, 1) == doctest::Approx(0.5));

  const auto mu = on_line({0.0, 1.0}, {0.7, 0.3});
  const auto nu = on_line({0.0, 2.0}, {0.4, 0.6});
  CHECK(solve_ot(mu, nu, 1.0).cost == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("the oracle reproduces the hand-derived examples") {
  const auto mu = on_line({0.0, 1.0}, {0.7, 0.3});
  const auto nu = on_line({0.0, 2.0}, {0.4, 0.6});
  CHECK(wbdr::testing::solve_ot_oracle(mu, nu, 1.0).cost == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(wbdr::testing::solve_ot_oracle(mu, mu, 1.0).cost == doctest::Approx(0.0));
  const auto single = wbdr::testing::solve_ot_oracle(point_mass({1.0}), point_mass({4.0}), 2.0);
  CHECK(single.cost == doctest::Approx(9.0));
  CHECK(single.flow(0, 0) == doctest::Approx(1.0));
  CHECK(code_of([] {
          const auto five = on_line({0, 1, 2, 3, 4}, {0.2, 0.2, 0.2, 0.2, 0.2});
          wbdr::testing::solve_ot_oracle(five, five, 1.0);
        }) == ErrorCode::kTooLarge);
}

TEST_CASE("2x2 example by one-parameter scan of the polytope") {
  // flow(0,0) = f determines the plan; scan f over its feasible range.
  const Matrix c = cost_matrix(on_line({0.0, 1.0}, {0.7, 0.3}), on_line({0.0, 2.0}, {0.4, 0.6}), 1.0);
  double best = INFINITY;
  for (int s = 0; s <= 4000; ++s) {
    const double f = 0.1 + 0.3 * s / 4000.0;  // f in [0.1, 0.4]
    const double cost = f * c(0, 0) + (0.7 - f) * c(0, 1) + (0.4 - f) * c(1, 0) + (f - 0.1) * c(1, 1);
    best = std::min(best, cost);
  }
  CHECK(best == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("wasserstein_p examples") {
  for (double p : {1.0, 2.0, 3.5}) {
    CHECK(wasserstein_p(point_mass({0.0, 0.0}), point_mass({3.0, 4.0}), p) == doctest::Approx(5.0));
  }
  const auto mu = on_line({0.0, 1.0}, {0.7, 0.3});
  CHECK(wasserstein_p(mu, mu, 2.0) == doctest::Approx(0.0));
  CHECK(wasserstein_p(mu, on_line({0.0, 2.0}, {0.4, 0.6}), 1.0) == doctest::Approx(0.9));
}

TEST_CASE("barycenter_objective examples") {
  const std::vector<DiscreteDistribution> ends{point_mass({0.0}), point_mass({2.0})};
  CHECK(barycenter_objective(point_mass({1.0}), ends, 2.0) == doctest::Approx(1.0));

  const auto mu = on_line({0.0, 1.0}, {0.7, 0.3});
  const std::vector<DiscreteDistribution> copies{mu, mu, mu};
  CHECK(barycenter_objective(mu, copies, 1.0) == doctest::Approx(0.0));

  const auto nu = on_line({0.0, 2.0}, {0.4, 0.6});
  const std::vector<DiscreteDistribution> twice{mu, mu};
  CHECK(barycenter_objective(nu, twice, 1.0) == doctest::Approx(0.9));

  const std::vector<double> lambdas{0.25, 0.75};
  CHECK(barycenter_objective(point_mass({0.0}), ends, 2.0, lambdas) == doctest::Approx(3.0));
  const std::vector<double> bad{0.5, 0.6};
  CHECK(code_of([&] { barycenter_objective(point_mass({0.0}), ends, 2.0, bad); }) == ErrorCode::kBadLambdas);
  const std::vector<double> negative{1.5, -0.5};
  CHECK(code_of([&] { barycenter_objective(point_mass({0.0}), ends, 2.0, negative); }) ==
        ErrorCode::kBadLambdas);
  const std::vector<DiscreteDistribution> mixed{point_mass({0.0}), point_mass({0.0, 1.0})};
  CHECK(code_of([&] { barycenter_objective(point_mass({0.0}), mixed, 2.0); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("cost_of_plan examples") {
  CHECK(cost_of_plan(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 4.0)) == 4.0);
  CHECK(cost_of_plan(Matrix::Zero(2, 2), Matrix::Ones(2, 2)) == 0.0);
  const auto mu = on_line({0.0, 1.0}, {0.7, 0.3});
  const auto nu = on_line({0.0, 2.0}, {0.4, 0.6});
  const auto oracle = wbdr::testing::solve_ot_oracle(mu, nu, 1.0);
  CHECK(cost_of_plan(oracle.flow, cost_matrix(mu, nu, 1.0)) == doctest::Approx(0.9));
  CHECK(code_of([] { cost_of_plan(Matrix::Zero(2, 2), Matrix::Zero(2, 3)); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("simplex matches the oracle on random small instances") {
  Rng rng = make_rng(11);
  std::uniform_int_distribution<int> size(1, 4);
  std::uniform_int_distribution<int> dim(1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim(rng);
    const auto mu = wbdr::testing::random_distribution(static_cast<std::size_t>(size(rng)), static_cast<std::size_t>(d), rng);
    const auto nu = wbdr::testing::random_distribution(static_cast<std::size_t>(size(rng)), static_cast<std::size_t>(d), rng);
    const double p = (trial % 3 == 0) ? 1.0 : (trial % 3 == 1 ? 2.0 : 1.5);
    const auto got = solve_ot(mu, nu, p);
    const auto want = wbdr::testing::solve_ot_oracle(mu, nu, p);
    CHECK(std::abs(got.cost - want.cost) <= 1e-9 * (1.0 + want.cost));
    check_feasible(got, mu.weights(), nu.weights());
    CHECK((got.flow.array() > 0.0).count() <= static_cast<Eigen::Index>(mu.size() + nu.size() - 1));
  }
}

TEST_CASE("degenerate marginals and zero-weight atoms") {
  // Equal partial sums force degenerate pivots.
  Vector a(4);
  a << 0.25, 0.25, 0.25, 0.25;
  Vector b(4);
  b << 0.5, 0.0, 0.25, 0.25;
  Matrix c(4, 4);
  c << 4, 1, 3, 2, 1, 5, 2, 3, 2, 2, 1, 4, 3, 3, 4, 1;
  const auto plan = solve_transport(a, b, c);
  check_feasible(plan, a, b);
  CHECK(plan.flow.col(1).sum() == 0.0);
  const auto oracle = wbdr::testing::solve_transport_oracle(a, b, c);
  CHECK(plan.cost == doctest::Approx(oracle.cost).epsilon(1e-12));
}

TEST_CASE("assignment path agrees with the simplex") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 12;
    Matrix c(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index col = 0; col < n; ++col) c(r, col) = u(rng);
    }
    const Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    const auto fast = solve_transport(w, w, c);
    const auto simplex = solve_transport_simplex(w, w, c);
    CHECK(fast.cost == doctest::Approx(simplex.cost).epsilon(1e-12));
    check_feasible(fast, w, w);
    const auto perm = solve_assignment(c);
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) total += c(r, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)])) / static_cast<double>(n);
    CHECK(total == doctest::Approx(simplex.cost).epsilon(1e-12));
  }
}

TEST_CASE("triangle inequality for W_p") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const double p = 1.0 + (trial % 4) * 0.5;
    const auto a = wbdr::testing::random_distribution(3, 2, rng);
    const auto b = wbdr::testing::random_distribution(4, 2, rng);
    const auto c = wbdr::testing::random_distribution(2, 2, rng);
    CHECK(wasserstein_p(a, c, p) <= wasserstein_p(a, b, p) + wasserstein_p(b, c, p) + 1e-7);
  }
}

TEST_CASE("scaling the points scales the cost by c^p") {
  Rng rng = make_rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const double p = 1.0 + (trial % 3) * 0.75;
    const double scale = 0.3 + trial * 0.1;
    const auto a = wbdr::testing::random_distribution(4, 3, rng);
    const auto b = wbdr::testing::random_distribution(3, 3, rng);
    const auto as = make_distribution(Matrix(a.atoms() * scale), a.weights());
    const auto bs = make_distribution(Matrix(b.atoms() * scale), b.weights());
    const double base = solve_ot(a, b, p).cost;
    CHECK(solve_ot(as, bs, p).cost == doctest::Approx(std::pow(scale, p) * base).epsilon(1e-9));
  }
}

TEST_CASE("larger random instances stay feasible and basic") {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = wbdr::testing::random_distribution(20 + trial, 3, rng);
    const auto nu = wbdr::testing::random_distribution(35 - trial, 3, rng);
    const auto plan = solve_ot(mu, nu, 2.0);
    check_feasible(plan, mu.weights(), nu.weights());
    CHECK((plan.flow.array() > 0.0).count() <= static_cast<Eigen::Index>(mu.size() + nu.size() - 1));
    CHECK(plan.cost == doctest::Approx(cost_of_plan(plan.flow, cost_matrix(mu, nu, 2.0))));
  }
}

TEST_CASE("solve_transport rejects inconsistent marginals") {
  Vector a(2);
  a << 0.5, 0.5;
  Vector b(2);
  b << 0.5, 0.6;
  CHECK_THROWS_AS(solve_transport(a, b, Matrix::Ones(2, 2)), Error);
  CHECK_THROWS_AS(solve_transport(a, a, Matrix::Ones(3, 2)), Error);
}
