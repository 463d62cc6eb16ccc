#include "wbdr/projection.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "wbdr/rng.hpp"

namespace wbdr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(0..count-1) on up to `jobs` threads. Each index writes its own slot,
// so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kGaussian: return "gaussian";
    case MapKind::kSrht: return "srht";
    case MapKind::kIdentity: return "identity";
  }
  return "unknown";
}

MapKind parse_map_kind(std::string_view name) {
  if (name == "gaussian") return MapKind::kGaussian;
  if (name == "srht") return MapKind::kSrht;
  if (name == "identity") return MapKind::kIdentity;
  throw Error(ErrorCode::kBadParams, "unknown map kind '" + std::string(name) + "'");
}

std::string_view to_string(DimensionPolicy policy) {
  switch (policy) {
    case DimensionPolicy::kP2: return "p2";
    case DimensionPolicy::kKirszbraun: return "kirszbraun";
    case DimensionPolicy::kOptimal: return "optimal";
  }
  return "unknown";
}

DimensionPolicy parse_policy(std::string_view name) {
  if (name == "p2") return DimensionPolicy::kP2;
  if (name == "kirszbraun") return DimensionPolicy::kKirszbraun;
  if (name == "optimal") return DimensionPolicy::kOptimal;
  throw Error(ErrorCode::kBadParams, "unknown dimension policy '" + std::string(name) + "'");
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t out = 1;
  while (out < n) out <<= 1;
  return out;
}

void fwht_normalized(std::span<double> data) {
  const std::size_t len = data.size();
  if (len == 0 || (len & (len - 1)) != 0) {
    throw Error(ErrorCode::kBadParams, "Walsh-Hadamard length must be a power of two");
  }
  for (std::size_t h = 1; h < len; h <<= 1) {
    for (std::size_t i = 0; i < len; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = data[j];
        const double b = data[j + h];
        data[j] = a + b;
        data[j + h] = a - b;
      }
    }
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(len));
  for (double& v : data) v *= norm;
}

ProjectionMap make_gaussian_map(std::size_t d, std::size_t m, std::uint64_t seed) {
  if (d < 1 || m < 1) throw Error(ErrorCode::kBadParams, "map dimensions must be >= 1");
  ProjectionMap map;
  map.kind_ = MapKind::kGaussian;
  map.d_ = d;
  map.m_ = m;
  map.seed_ = seed;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  map.gaussian_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < map.gaussian_.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.gaussian_.cols(); ++c) map.gaussian_(r, c) = normal(rng);
  }
  return map;
}

ProjectionMap make_srht_map(std::size_t d, std::size_t m, std::uint64_t seed) {
  if (d < 1 || m < 1) throw Error(ErrorCode::kBadParams, "map dimensions must be >= 1");
  const std::size_t padded = next_power_of_two(d);
  if (m > padded) {
    throw Error(ErrorCode::kBadParams, "SRHT output dimension exceeds the padded input dimension");
  }
  ProjectionMap map;
  map.kind_ = MapKind::kSrht;
  map.d_ = d;
  map.m_ = m;
  map.seed_ = seed;
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  map.signs_.resize(padded);
  for (double& s : map.signs_) s = coin(rng) ? 1.0 : -1.0;
  std::vector<std::size_t> all(padded);
  std::iota(all.begin(), all.end(), std::size_t{0});
  map.sampled_.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(map.sampled_), m, rng);
  map.scale_ = std::sqrt(static_cast<double>(padded) / static_cast<double>(m));
  return map;
}

ProjectionMap make_identity_map(std::size_t d) {
  if (d < 1) throw Error(ErrorCode::kBadParams, "map dimensions must be >= 1");
  ProjectionMap map;
  map.kind_ = MapKind::kIdentity;
  map.d_ = d;
  map.m_ = d;
  return map;
}

ProjectionMap make_map(MapKind kind, std::size_t d, std::size_t m, std::uint64_t seed) {
  switch (kind) {
    case MapKind::kGaussian: return make_gaussian_map(d, m, seed);
    case MapKind::kSrht: return make_srht_map(d, m, seed);
    case MapKind::kIdentity:
      if (m != d) throw Error(ErrorCode::kBadParams, "identity map requires m = d");
      return make_identity_map(d);
  }
  throw Error(ErrorCode::kBadParams, "unknown map kind");
}

Vector ProjectionMap::apply(const Eigen::Ref<const Vector>& x) const {
  if (static_cast<std::size_t>(x.size()) != d_) {
    throw Error(ErrorCode::kDimensionMismatch, "vector does not match the map input dimension");
  }
  switch (kind_) {
    case MapKind::kIdentity: return x;
    case MapKind::kGaussian: return gaussian_ * x;
    case MapKind::kSrht: {
      std::vector<double> buf(signs_.size(), 0.0);
      for (std::size_t i = 0; i < d_; ++i) buf[i] = signs_[i] * x(static_cast<Eigen::Index>(i));
      fwht_normalized(buf);
      Vector out(static_cast<Eigen::Index>(m_));
      for (std::size_t r = 0; r < m_; ++r) out(static_cast<Eigen::Index>(r)) = scale_ * buf[sampled_[r]];
      return out;
    }
  }
  return x;
}

Matrix ProjectionMap::apply_rows(const Matrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != d_) {
    throw Error(ErrorCode::kDimensionMismatch, "points do not match the map input dimension");
  }
  switch (kind_) {
    case MapKind::kIdentity: return points;
    case MapKind::kGaussian: return points * gaussian_.transpose();
    case MapKind::kSrht: {
      Matrix out(points.rows(), static_cast<Eigen::Index>(m_));
      for (Eigen::Index r = 0; r < points.rows(); ++r) {
        out.row(r) = apply(points.row(r).transpose()).transpose();
      }
      return out;
    }
  }
  return points;
}

std::size_t jl_dimension(std::size_t n, double eps, double delta, double p,
                         DimensionPolicy policy, std::optional<std::size_t> k, double c_jl) {
  if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) || n < 2 || !(c_jl > 0.0) ||
      !(p >= 1.0)) {
    throw Error(ErrorCode::kBadParams, "need 0 < eps < 1, 0 < delta < 1, n >= 2, p >= 1, c > 0");
  }
  const double nn = static_cast<double>(n);
  double f = 0.0;
  switch (policy) {
    case DimensionPolicy::kP2:
    case DimensionPolicy::kKirszbraun: {
      if (!k || *k < 1) throw Error(ErrorCode::kBadParams, "this policy needs k >= 1");
      f = std::log(nn * static_cast<double>(*k) / delta) / (eps * eps);
      if (policy == DimensionPolicy::kKirszbraun) f *= p * p;
      break;
    }
    case DimensionPolicy::kOptimal:
      f = std::pow(p, 4.0) * std::log(nn / (eps * delta)) / (eps * eps);
      break;
  }
  return static_cast<std::size_t>(std::ceil(c_jl * f));
}

std::vector<DiscreteDistribution> project_instance(std::span<const DiscreteDistribution> mus,
                                                   const ProjectionMap& map) {
  std::vector<DiscreteDistribution> out;
  out.reserve(mus.size());
  for (const auto& mu : mus) {
    if (mu.dim() != map.input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "distribution does not match the map input dimension");
    }
    out.push_back(make_distribution_unchecked(map.apply_rows(mu.atoms()), mu.weights()));
  }
  return out;
}

ReductionResult reduce_solve_reconstruct(std::span<const DiscreteDistribution> mus,
                                         const ProjectionMap& map, const SolverOptions& opts) {
  ReductionResult out;
  auto start = Clock::now();
  const auto projected = project_instance(mus, map);
  out.projection_seconds = seconds_since(start);

  start = Clock::now();
  BarycenterResult low = solve_barycenter(projected, opts);
  out.solve_seconds = seconds_since(start);

  start = Clock::now();
  auto rebuilt = reconstruct_barycenter(low.solution, mus, opts.p, opts.inner_max_iters, opts.inner_tol);
  out.high = solution_cost(low.solution, mus, opts.p, opts.inner_max_iters, opts.inner_tol);
  out.reconstruction_seconds = seconds_since(start);

  out.low = solution_cost(low.solution, projected, opts.p, opts.inner_max_iters, opts.inner_tol);
  out.low.iterations = out.high.iterations = low.report.iterations;
  out.low.converged = out.high.converged = low.report.converged;
  out.low_barycenter = std::move(low.barycenter);
  out.barycenter = std::move(rebuilt.distribution);
  out.solution = std::move(low.solution);
  return out;
}

std::vector<SweepRow> cost_ratio_sweep(std::span<const DiscreteDistribution> mus,
                                       const SolverOptions& opts, const SweepOptions& sweep) {
  if (sweep.trials < 1) throw Error(ErrorCode::kBadParams, "trials must be >= 1");
  if (sweep.m_values.empty()) throw Error(ErrorCode::kBadParams, "no target dimensions given");
  const std::size_t d = common_dimension(mus);
  const auto trials = static_cast<std::size_t>(sweep.trials);

  auto trial_options = [&](std::size_t trial) {
    SolverOptions o = opts;
    o.seed = derive_seed(sweep.seed, {static_cast<std::uint64_t>(trial)});
    return o;
  };

  std::vector<double> reference_cost(trials);
  std::vector<double> reference_seconds(trials);
  parallel_for(trials, sweep.jobs, [&](std::size_t trial) {
    const SolverOptions o = trial_options(trial);
    const auto start = Clock::now();
    const BarycenterResult full = solve_barycenter(mus, o);
    reference_seconds[trial] = seconds_since(start);
    reference_cost[trial] = solution_cost(full.solution, mus, o.p, o.inner_max_iters, o.inner_tol).total_cost;
  });

  const std::size_t cells = sweep.m_values.size() * trials;
  std::vector<double> ratio(cells);
  std::vector<double> low_seconds(cells);
  parallel_for(cells, sweep.jobs, [&](std::size_t cell) {
    const std::size_t mi = cell / trials;
    const std::size_t trial = cell % trials;
    const std::size_t m = sweep.m_values[mi];
    const auto map = sweep.kind == MapKind::kIdentity
                         ? make_map(MapKind::kIdentity, d, m, 0)
                         : make_map(sweep.kind, d, m,
                                    derive_seed(sweep.seed, {static_cast<std::uint64_t>(m),
                                                             static_cast<std::uint64_t>(trial)}));
    const ReductionResult r = reduce_solve_reconstruct(mus, map, trial_options(trial));
    low_seconds[cell] = r.solve_seconds;
    const double ref = reference_cost[trial];
    ratio[cell] = ref > 0.0 ? r.high.total_cost / ref : (r.high.total_cost > 0.0 ? INFINITY : 1.0);
  });

  double mean_high = 0.0;
  for (double s : reference_seconds) mean_high += s / static_cast<double>(trials);

  std::vector<SweepRow> rows;
  for (std::size_t mi = 0; mi < sweep.m_values.size(); ++mi) {
    SweepRow row;
    row.m = sweep.m_values[mi];
    row.high_seconds = mean_high;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const std::size_t cell = mi * trials + trial;
      row.ratios.push_back(ratio[cell]);
      row.mean_ratio += ratio[cell] / static_cast<double>(trials);
      row.low_seconds += low_seconds[cell] / static_cast<double>(trials);
    }
    double var = 0.0;
    for (double r : row.ratios) var += (r - row.mean_ratio) * (r - row.mean_ratio);
    row.stddev = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wbdr
