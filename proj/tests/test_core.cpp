#include <doctest.h>

#include "oracles.hpp"
#include "wbdr/core.hpp"

using namespace wbdr;
using wbdr::testing::on_line;
using wbdr::testing::point_mass;
using Atoms = std::vector<std::vector<double>>;
using Weights = std::vector<double>;

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

}  // namespace

TEST_CASE("make_distribution accepts valid inputs") {
  const auto delta = make_distribution(Atoms{{0.0, 0.0}}, Weights{1.0});
  CHECK(delta.size() == 1);
  CHECK(delta.dim() == 2);
  const auto two = make_distribution(Atoms{{0.0}, {1.0}}, Weights{0.5, 0.5});
  CHECK(two.weight(1) == doctest::Approx(0.5));
}

TEST_CASE("make_distribution renormalizes within tolerance") {
  const auto mu = make_distribution(Atoms{{0.0}, {1.0}}, Weights{0.5, 0.5 + 5e-7});
  CHECK(mu.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("make_distribution rejects bad inputs") {
  CHECK(code_of([] { make_distribution(Atoms{{0.0}, {1.0}}, Weights{0.5, 0.6}); }) == ErrorCode::kBadWeights);
  CHECK(code_of([] { make_distribution(Atoms{{0.0}, {1.0}}, Weights{1.5, -0.5}); }) == ErrorCode::kBadWeights);
  CHECK(code_of([] { make_distribution(Atoms{{0.0}, {1.0, 2.0}}, Weights{0.5, 0.5}); }) ==
        ErrorCode::kDimensionMismatch);
  CHECK(code_of([] { make_distribution(Atoms{}, Weights{}); }) == ErrorCode::kEmpty);
  CHECK(code_of([] { make_distribution(Atoms{{NAN}}, Weights{1.0}); }) == ErrorCode::kNonFinite);
  CHECK(code_of([] { make_distribution(Atoms{{0.0}}, Weights{0.5, 0.5}); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("pooled_atoms concatenates in order") {
  const std::vector<DiscreteDistribution> two{point_mass({0.0}), point_mass({1.0})};
  const auto pooled = pooled_atoms(two);
  CHECK(pooled.points(0, 0) == 0.0);
  CHECK(pooled.points(1, 0) == 1.0);
  CHECK(pooled.weights(0) == 1.0);
  CHECK(pooled.weights(1) == 1.0);
  CHECK(pooled.origins == std::vector<std::size_t>{0, 1});

  const std::vector<DiscreteDistribution> one{on_line({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5})};
  const auto copy = pooled_atoms(one);
  CHECK(copy.points == one[0].atoms());
  CHECK(copy.weights == one[0].weights());
  CHECK(copy.origins == std::vector<std::size_t>{0, 0, 0});

  const std::vector<DiscreteDistribution> pairs{on_line({1.0, 2.0}, {0.5, 0.5}),
                                                on_line({3.0, 4.0}, {0.25, 0.75})};
  const auto four = pooled_atoms(pairs);
  CHECK(four.points.rows() == 4);
  CHECK(four.points(2, 0) == 3.0);
  CHECK(four.origins == std::vector<std::size_t>{0, 0, 1, 1});
  CHECK(four.offsets == std::vector<std::size_t>{0, 2});
  CHECK(four.weights.sum() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pooled_atoms rejects mixed dimensions") {
  const std::vector<DiscreteDistribution> mixed{point_mass({0.0}), point_mass({0.0, 1.0})};
  CHECK(code_of([&] { pooled_atoms(mixed); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("validate_solution examples") {
  const std::vector<DiscreteDistribution> one{point_mass({0.0})};
  Solution sol;
  sol.plans = {Matrix::Constant(1, 1, 1.0)};
  sol.barycenter_weights = Vector::Ones(1);
  CHECK(validate_solution(sol, one).ok);

  sol.plans = {Matrix::Constant(1, 1, 0.9)};
  const auto bad = validate_solution(sol, one);
  CHECK_FALSE(bad.ok);
  CHECK_FALSE(bad.violations.empty());

  const std::vector<DiscreteDistribution> two{point_mass({0.0}), point_mass({2.0})};
  Solution pair;
  pair.plans = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  pair.barycenter_weights = Vector::Ones(1);
  CHECK(validate_solution(pair, two).ok);
  CHECK(pair.column_mass()(0) == doctest::Approx(2.0));
}

TEST_CASE("validate_solution flags column and shape problems") {
  const std::vector<DiscreteDistribution> mus{on_line({0.0, 1.0}, {0.5, 0.5})};
  Solution sol;
  sol.barycenter_weights = Vector::Constant(2, 0.5);
  Matrix plan(2, 2);
  plan << 0.5, 0.0, 0.5, 0.0;
  sol.plans = {plan};
  CHECK_FALSE(validate_solution(sol, mus).ok);

  sol.plans = {Matrix::Constant(3, 2, 1.0 / 6.0)};
  CHECK_FALSE(validate_solution(sol, mus).ok);

  sol.plans = {};
  CHECK_FALSE(validate_solution(sol, mus).ok);
}

TEST_CASE("random couplings are valid solutions") {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DiscreteDistribution> mus;
    for (int i = 0; i < 3; ++i) mus.push_back(wbdr::testing::random_distribution(1 + trial % 4, 2, rng));
    const Solution sol = wbdr::testing::random_solution(mus, 1 + trial % 3, rng);
    const auto report = validate_solution(sol, mus);
    CHECK(report.ok);
    CHECK((sol.column_mass() - 3.0 * sol.barycenter_weights).cwiseAbs().maxCoeff() < 1e-9);
  }
}
