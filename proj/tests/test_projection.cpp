#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "wbdr/projection.hpp"

using namespace wbdr;
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

Vector random_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  return v;
}

}  // namespace

TEST_CASE("jl_dimension examples") {
  CHECK(jl_dimension(16, 0.5, 0.1, 2.0, DimensionPolicy::kOptimal) == 370);
  CHECK(jl_dimension(8, 0.25, 0.1, 2.0, DimensionPolicy::kOptimal) ==
        static_cast<std::size_t>(std::ceil(16.0 * std::log(320.0) / 0.0625)));
  // ln(n k / delta) >= ln(n / (eps delta)) needs k >= 1 / eps.
  for (std::size_t n : {4, 5, 40}) {
    CHECK(jl_dimension(n, 0.3, 0.1, 1.0, DimensionPolicy::kOptimal) <=
          jl_dimension(n, 0.3, 0.1, 1.0, DimensionPolicy::kKirszbraun, n));
  }
  CHECK(jl_dimension(2, 0.3, 0.1, 1.0, DimensionPolicy::kOptimal) >
        jl_dimension(2, 0.3, 0.1, 1.0, DimensionPolicy::kKirszbraun, 2));
  // Halving eps quadruples the bound when the log term does not move.
  const double a = std::log(10.0 * 7.0 / 0.2) / (0.4 * 0.4);
  CHECK(jl_dimension(10, 0.4, 0.2, 1.0, DimensionPolicy::kP2, 7, 100.0) == static_cast<std::size_t>(std::ceil(100.0 * a)));
  CHECK(jl_dimension(10, 0.2, 0.2, 1.0, DimensionPolicy::kP2, 7, 100.0) == static_cast<std::size_t>(std::ceil(400.0 * a)));
  CHECK(jl_dimension(10, 0.2, 0.2, 3.0, DimensionPolicy::kKirszbraun, 7) ==
        static_cast<std::size_t>(std::ceil(9.0 * std::log(350.0) / 0.04)));
}

TEST_CASE("jl_dimension errors") {
  CHECK(code_of([] { jl_dimension(8, 0.0, 0.1, 2.0, DimensionPolicy::kOptimal); }) == ErrorCode::kBadParams);
  CHECK(code_of([] { jl_dimension(8, 0.5, 1.0, 2.0, DimensionPolicy::kOptimal); }) == ErrorCode::kBadParams);
  CHECK(code_of([] { jl_dimension(1, 0.5, 0.1, 2.0, DimensionPolicy::kOptimal); }) == ErrorCode::kBadParams);
  CHECK(code_of([] { jl_dimension(8, 0.5, 0.1, 2.0, DimensionPolicy::kP2); }) == ErrorCode::kBadParams);
  CHECK(code_of([] { parse_policy("bogus"); }) == ErrorCode::kBadParams);
  CHECK(parse_policy("kirszbraun") == DimensionPolicy::kKirszbraun);
  CHECK(parse_map_kind("srht") == MapKind::kSrht);
  CHECK(code_of([] { parse_map_kind("sparse"); }) == ErrorCode::kBadParams);
}

TEST_CASE("gaussian map basics") {
  const auto map = make_gaussian_map(20, 7, 99);
  CHECK(map.output_dim() == 7);
  CHECK(map.apply(Vector::Zero(20)).norm() == 0.0);
  const auto again = make_gaussian_map(20, 7, 99);
  CHECK(map.gaussian_matrix() == again.gaussian_matrix());
  CHECK(make_gaussian_map(20, 7, 100).gaussian_matrix() != map.gaussian_matrix());
  CHECK(code_of([] { make_gaussian_map(0, 3, 1); }) == ErrorCode::kBadParams);
  CHECK(code_of([] { make_gaussian_map(3, 0, 1); }) == ErrorCode::kBadParams);
  CHECK(code_of([&] { map.apply(Vector::Zero(3)); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("gaussian map concentrates squared norms") {
  Vector u = Vector::Zero(50);
  u(3) = 1.0;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double sq = make_gaussian_map(50, 1000, seed).apply(u).squaredNorm();
    inside += (sq >= 0.8 && sq <= 1.2) ? 1 : 0;
  }
  CHECK(inside >= 990);
}

TEST_CASE("normalized Walsh-Hadamard transform") {
  std::vector<double> e1{1.0, 0.0};
  fwht_normalized(e1);
  CHECK(e1[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(e1[1] == doctest::Approx(1.0 / std::sqrt(2.0)));

  Rng rng = make_rng(47);
  for (std::size_t len : {1, 2, 8, 64, 1024}) {
    Vector v = random_vector(len, rng);
    const double before = v.norm();
    fwht_normalized(std::span<double>(v.data(), len));
    CHECK(v.norm() == doctest::Approx(before).epsilon(1e-12));
    // Applying twice is the identity.
    Vector w = v;
    fwht_normalized(std::span<double>(w.data(), len));
    fwht_normalized(std::span<double>(w.data(), len));
    CHECK((w - v).norm() <= 1e-9 * (1.0 + v.norm()));
  }
  std::vector<double> three(3, 1.0);
  CHECK(code_of([&] { fwht_normalized(three); }) == ErrorCode::kBadParams);
  CHECK(next_power_of_two(1) == 1);
  CHECK(next_power_of_two(5) == 8);
  CHECK(next_power_of_two(64) == 64);
}

TEST_CASE("srht map structure") {
  const auto map = make_srht_map(100, 10, 5);
  CHECK(map.padded_dim() == 128);
  CHECK(map.output_dim() == 10);
  auto idx = map.sampled_coordinates();
  std::sort(idx.begin(), idx.end());
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  CHECK(idx.back() < 128);
  CHECK(map.scale() == doctest::Approx(std::sqrt(128.0 / 10.0)));
  CHECK(code_of([] { make_srht_map(100, 129, 1); }) == ErrorCode::kBadParams);

  // Against an explicit dense construction.
  Matrix H = Matrix::Ones(1, 1);
  while (H.rows() < 128) {
    Matrix next(2 * H.rows(), 2 * H.cols());
    next << H, H, H, -H;
    H = next;
  }
  H /= std::sqrt(128.0);
  Rng rng = make_rng(53);
  const Vector x = random_vector(100, rng);
  Vector padded = Vector::Zero(128);
  for (Eigen::Index i = 0; i < 100; ++i) padded(i) = map.signs()[static_cast<std::size_t>(i)] * x(i);
  const Vector hx = H * padded;
  const Vector got = map.apply(x);
  for (std::size_t r = 0; r < 10; ++r) {
    CHECK(got(static_cast<Eigen::Index>(r)) ==
          doctest::Approx(map.scale() * hx(static_cast<Eigen::Index>(map.sampled_coordinates()[r]))).epsilon(1e-12));
  }
}

TEST_CASE("srht map is an isometry in expectation") {
  Rng rng = make_rng(59);
  Vector u = random_vector(48, rng).normalized();
  double total = 0.0;
  const int seeds = 10000;
  for (int seed = 0; seed < seeds; ++seed) {
    total += make_srht_map(48, 8, static_cast<std::uint64_t>(seed)).apply(u).squaredNorm();
  }
  CHECK(total / seeds == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("maps are linear and deterministic") {
  Rng rng = make_rng(61);
  for (MapKind kind : {MapKind::kGaussian, MapKind::kSrht}) {
    const auto map = make_map(kind, 30, 6, 123);
    const auto same = make_map(kind, 30, 6, 123);
    const Vector x = random_vector(30, rng);
    const Vector y = random_vector(30, rng);
    const Vector lhs = map.apply(2.5 * x - 0.5 * y);
    const Vector rhs = 2.5 * map.apply(x) - 0.5 * map.apply(y);
    CHECK((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    CHECK(map.apply(x) == same.apply(x));
    Matrix rows(2, 30);
    rows.row(0) = x.transpose();
    rows.row(1) = y.transpose();
    const Matrix mapped = map.apply_rows(rows);
    CHECK((mapped.row(1).transpose() - map.apply(y)).norm() <= 1e-12 * (1.0 + mapped.norm()));
  }
  const auto ident = make_identity_map(4);
  const Vector v = random_vector(4, rng);
  CHECK(ident.apply(v) == v);
  CHECK(code_of([] { make_map(MapKind::kIdentity, 4, 3, 0); }) == ErrorCode::kBadParams);
}

TEST_CASE("project_instance examples") {
  Rng rng = make_rng(67);
  std::vector<DiscreteDistribution> mus;
  for (int i = 0; i < 3; ++i) mus.push_back(wbdr::testing::random_distribution(4, 5, rng));
  const auto same = project_instance(mus, make_identity_map(5));
  for (std::size_t i = 0; i < mus.size(); ++i) {
    CHECK(same[i].atoms() == mus[i].atoms());
    CHECK(same[i].weights() == mus[i].weights());
  }
  const auto map = make_gaussian_map(5, 2, 3);
  const Vector x = random_vector(5, rng);
  const std::vector<DiscreteDistribution> delta{dirac(x)};
  const auto image = project_instance(delta, map);
  CHECK((image[0].atom(0).transpose() - map.apply(x)).norm() < 1e-12);
  const auto projected = project_instance(mus, map);
  for (std::size_t i = 0; i < mus.size(); ++i) CHECK(projected[i].weights() == mus[i].weights());
  const std::vector<DiscreteDistribution> wrong{point_mass({1.0})};
  CHECK(code_of([&] { project_instance(wrong, map); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("reduce_solve_reconstruct examples") {
  Rng rng = make_rng(71);
  std::vector<DiscreteDistribution> mus;
  for (int i = 0; i < 4; ++i) mus.push_back(wbdr::testing::random_distribution(5, 6, rng));
  SolverOptions opts;
  opts.support_size = 3;
  opts.seed = 9;
  const auto direct = solve_barycenter(mus, opts);
  const auto ident = reduce_solve_reconstruct(mus, make_identity_map(6), opts);
  CHECK((ident.barycenter.atoms() - direct.barycenter.atoms()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(ident.low.total_cost == doctest::Approx(ident.high.total_cost).epsilon(1e-9));

  const std::vector<DiscreteDistribution> ends{point_mass({0.0}), point_mass({2.0})};
  SolverOptions one;
  const auto r = reduce_solve_reconstruct(ends, make_gaussian_map(1, 3, 4), one);
  CHECK(r.high.total_cost == doctest::Approx(1.0));

  // Plans are dimension-free; weights carry over.
  const auto low = reduce_solve_reconstruct(mus, make_gaussian_map(6, 2, 8), opts);
  CHECK(validate_solution(low.solution, mus).ok);
  CHECK(low.barycenter.weights() == low.low_barycenter.weights());
  CHECK(low.barycenter.dim() == 6);
  CHECK(low.low_barycenter.dim() == 2);
  const auto low_again = reduce_solve_reconstruct(mus, make_gaussian_map(6, 2, 8), opts);
  CHECK(low_again.high.total_cost == low.high.total_cost);
}

TEST_CASE("cost_ratio_sweep examples") {
  Rng rng = make_rng(73);
  std::vector<DiscreteDistribution> mus;
  for (int i = 0; i < 4; ++i) mus.push_back(wbdr::testing::random_distribution(5, 6, rng));
  SolverOptions opts;
  opts.support_size = 2;
  opts.restarts = 3;
  SweepOptions sweep;
  sweep.m_values = {6};
  sweep.trials = 3;
  sweep.kind = MapKind::kIdentity;
  const auto rows = cost_ratio_sweep(mus, opts, sweep);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_ratio == doctest::Approx(1.0).epsilon(1e-9));

  sweep.kind = MapKind::kGaussian;
  sweep.m_values = {2, 4, 6};
  sweep.trials = 4;
  const auto gauss = cost_ratio_sweep(mus, opts, sweep);
  for (const auto& row : gauss) {
    CHECK(row.ratios.size() == 4);
    CHECK(row.mean_ratio >= 0.95);
  }
  sweep.jobs = 3;
  const auto threaded = cost_ratio_sweep(mus, opts, sweep);
  for (std::size_t i = 0; i < gauss.size(); ++i) CHECK(threaded[i].ratios == gauss[i].ratios);

  sweep.trials = 0;
  CHECK(code_of([&] { cost_ratio_sweep(mus, opts, sweep); }) == ErrorCode::kBadParams);
}
