#include "wbdr/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace wbdr {

namespace {

constexpr double kDropWeight = 1e-15;

double pow_distance(double squared, double p) {
  if (p == 2.0) return squared;
  const double dist = std::sqrt(squared);
  if (p == 1.0) return dist;
  return std::pow(dist, p);
}

// Transportation simplex over a dense R x C cost matrix. Nodes 0..R-1 are
// rows (sources) and R..R+C-1 are columns (sinks); the basis is a spanning
// tree of R+C-1 cells.
//
// Pricing is Dantzig (most negative reduced cost, lowest index on ties).
// A run of more than R+C consecutive degenerate pivots switches to Bland's
// rule until the next pivot that moves mass, which rules out cycling.
class TransportSimplex {
 public:
  TransportSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
      : rows_(cost.rows()),
        cols_(cost.cols()),
        supply_(supply),
        demand_(demand),
        cost_(cost),
        adjacency_(static_cast<std::size_t>(rows_ + cols_)),
        is_basic_(static_cast<std::size_t>(rows_ * cols_), 0),
        potential_(static_cast<std::size_t>(rows_ + cols_), 0.0),
        parent_cell_(static_cast<std::size_t>(rows_ + cols_), -1),
        parent_node_(static_cast<std::size_t>(rows_ + cols_), -1),
        depth_(static_cast<std::size_t>(rows_ + cols_), -1) {
    const double scale = 1.0 + cost_.cwiseAbs().maxCoeff();
    tol_ = 1e-11 * scale;
  }

  Matrix solve() {
    northwest_corner();
    const long long nodes = rows_ + cols_;
    const long long cap = 10 * nodes * nodes;
    int degenerate_run = 0;
    bool bland = false;
    for (long long iter = 0; iter < cap; ++iter) {
      build_tree();
      const long long entering = price(bland);
      if (entering < 0) return extract();
      const double theta = pivot(entering);
      if (theta > 0.0) {
        degenerate_run = 0;
        bland = false;
      } else if (++degenerate_run > nodes) {
        bland = true;
      }
    }
    std::ostringstream msg;
    msg << "transportation simplex exceeded " << cap << " pivots on a " << rows_ << "x"
        << cols_ << " problem";
    throw Error(ErrorCode::kNumericalFailure, msg.str());
  }

 private:
  struct Cell {
    Eigen::Index row;
    Eigen::Index col;
    double flow;
  };

  long long cell_index(Eigen::Index r, Eigen::Index c) const { return r * cols_ + c; }
  int col_node(Eigen::Index c) const { return static_cast<int>(rows_ + c); }

  void add_basic(Eigen::Index r, Eigen::Index c, double flow) {
    const int id = static_cast<int>(basis_.size());
    basis_.push_back({r, c, flow});
    adjacency_[static_cast<std::size_t>(r)].push_back(id);
    adjacency_[static_cast<std::size_t>(col_node(c))].push_back(id);
    is_basic_[static_cast<std::size_t>(cell_index(r, c))] = 1;
  }

  void northwest_corner() {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double s = supply_(0);
    double d = demand_(0);
    basis_.reserve(static_cast<std::size_t>(rows_ + cols_ - 1));
    for (;;) {
      const double x = std::min(s, d);
      add_basic(i, j, x);
      s -= x;
      d -= x;
      if (i == rows_ - 1 && j == cols_ - 1) break;
      if (i < rows_ - 1 && (j == cols_ - 1 || s <= d)) {
        s = supply_(++i);
      } else {
        d = demand_(++j);
      }
    }
  }

  // Potentials u_r + v_c = C(r, c) on basic cells, rooted at row 0 with u_0 = 0.
  void build_tree() {
    std::fill(depth_.begin(), depth_.end(), -1);
    std::vector<int> queue;
    queue.reserve(adjacency_.size());
    queue.push_back(0);
    depth_[0] = 0;
    potential_[0] = 0.0;
    parent_cell_[0] = -1;
    parent_node_[0] = -1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      for (int id : adjacency_[static_cast<std::size_t>(node)]) {
        const Cell& cell = basis_[static_cast<std::size_t>(id)];
        const bool from_row = node < rows_;
        const int other = from_row ? col_node(cell.col) : static_cast<int>(cell.row);
        if (depth_[static_cast<std::size_t>(other)] >= 0) continue;
        depth_[static_cast<std::size_t>(other)] = depth_[static_cast<std::size_t>(node)] + 1;
        parent_cell_[static_cast<std::size_t>(other)] = id;
        parent_node_[static_cast<std::size_t>(other)] = node;
        potential_[static_cast<std::size_t>(other)] =
            cost_(cell.row, cell.col) - potential_[static_cast<std::size_t>(node)];
        queue.push_back(other);
      }
    }
    if (queue.size() != adjacency_.size()) {
      throw Error(ErrorCode::kNumericalFailure, "transportation basis is not a spanning tree");
    }
  }

  long long price(bool bland) const {
    long long best = -1;
    double best_value = -tol_;
    for (Eigen::Index r = 0; r < rows_; ++r) {
      const double u = potential_[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < cols_; ++c) {
        const long long idx = cell_index(r, c);
        if (is_basic_[static_cast<std::size_t>(idx)]) continue;
        const double reduced = cost_(r, c) - u - potential_[static_cast<std::size_t>(col_node(c))];
        if (reduced < best_value) {
          if (bland) return idx;
          best_value = reduced;
          best = idx;
        }
      }
    }
    return best;
  }

  // Tree path from the entering column back to the entering row; the first
  // cell on it loses flow and signs alternate from there.
  std::vector<int> cycle_path(Eigen::Index r, Eigen::Index c) const {
    std::vector<int> from_col;
    std::vector<int> from_row;
    int a = col_node(c);
    int b = static_cast<int>(r);
    while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
      from_col.push_back(parent_cell_[static_cast<std::size_t>(a)]);
      a = parent_node_[static_cast<std::size_t>(a)];
    }
    while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
      from_row.push_back(parent_cell_[static_cast<std::size_t>(b)]);
      b = parent_node_[static_cast<std::size_t>(b)];
    }
    while (a != b) {
      from_col.push_back(parent_cell_[static_cast<std::size_t>(a)]);
      a = parent_node_[static_cast<std::size_t>(a)];
      from_row.push_back(parent_cell_[static_cast<std::size_t>(b)]);
      b = parent_node_[static_cast<std::size_t>(b)];
    }
    from_col.insert(from_col.end(), from_row.rbegin(), from_row.rend());
    return from_col;
  }

  double pivot(long long entering) {
    const Eigen::Index r = entering / cols_;
    const Eigen::Index c = entering % cols_;
    const std::vector<int> path = cycle_path(r, c);

    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    long long leaving_index = std::numeric_limits<long long>::max();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& cell = basis_[static_cast<std::size_t>(path[k])];
      const long long idx = cell_index(cell.row, cell.col);
      if (cell.flow < theta || (cell.flow == theta && idx < leaving_index)) {
        theta = cell.flow;
        leaving = path[k];
        leaving_index = idx;
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      Cell& cell = basis_[static_cast<std::size_t>(path[k])];
      cell.flow = (k % 2 == 0) ? std::max(cell.flow - theta, 0.0) : cell.flow + theta;
    }

    Cell& out = basis_[static_cast<std::size_t>(leaving)];
    is_basic_[static_cast<std::size_t>(cell_index(out.row, out.col))] = 0;
    detach(static_cast<int>(out.row), leaving);
    detach(col_node(out.col), leaving);
    out = Cell{r, c, theta};
    is_basic_[static_cast<std::size_t>(entering)] = 1;
    adjacency_[static_cast<std::size_t>(r)].push_back(leaving);
    adjacency_[static_cast<std::size_t>(col_node(c))].push_back(leaving);
    return theta;
  }

  void detach(int node, int id) {
    auto& adj = adjacency_[static_cast<std::size_t>(node)];
    auto it = std::find(adj.begin(), adj.end(), id);
    *it = adj.back();
    adj.pop_back();
  }

  Matrix extract() const {
    Matrix flow = Matrix::Zero(rows_, cols_);
    for (const Cell& cell : basis_) flow(cell.row, cell.col) = cell.flow;
    return flow;
  }

  Eigen::Index rows_;
  Eigen::Index cols_;
  const Vector& supply_;
  const Vector& demand_;
  const Matrix& cost_;
  double tol_ = 0.0;

  std::vector<Cell> basis_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<char> is_basic_;
  std::vector<double> potential_;
  std::vector<int> parent_cell_;
  std::vector<int> parent_node_;
  std::vector<int> depth_;
};

std::vector<Eigen::Index> support_indices(const Vector& w) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) >= kDropWeight) keep.push_back(i);
  }
  return keep;
}

bool is_uniform(const Vector& w) {
  const double target = 1.0 / static_cast<double>(w.size());
  return ((w.array() - target).abs() <= 1e-12 * target).all();
}

void check_marginals(const Vector& supply, const Vector& demand, const Matrix& cost) {
  if (supply.size() != cost.rows() || demand.size() != cost.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "marginals do not match the cost matrix");
  }
  if (supply.size() == 0 || demand.size() == 0) {
    throw Error(ErrorCode::kEmpty, "transport problem with an empty side");
  }
  if ((supply.array() < 0.0).any() || (demand.array() < 0.0).any()) {
    throw Error(ErrorCode::kBadWeights, "negative marginal");
  }
  const double a = supply.sum();
  const double b = demand.sum();
  if (std::abs(a - b) > kNormalizationTol * std::max(1.0, std::max(a, b))) {
    throw Error(ErrorCode::kBadWeights, "marginals carry different total mass");
  }
  if (!cost.allFinite()) throw Error(ErrorCode::kNonFinite, "cost matrix has non-finite entries");
}

template <typename Solver>
TransportPlan solve_reduced(const Vector& supply, const Vector& demand, const Matrix& cost,
                            Solver&& solver) {
  check_marginals(supply, demand, cost);
  const auto rows = support_indices(supply);
  const auto cols = support_indices(demand);
  if (rows.empty() || cols.empty()) {
    throw Error(ErrorCode::kBadWeights, "marginal has no mass");
  }

  Vector a(static_cast<Eigen::Index>(rows.size()));
  Vector b(static_cast<Eigen::Index>(cols.size()));
  Matrix c(a.size(), b.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    a(static_cast<Eigen::Index>(i)) = supply(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cost(rows[i], cols[j]);
    }
  }
  for (std::size_t j = 0; j < cols.size(); ++j) b(static_cast<Eigen::Index>(j)) = demand(cols[j]);

  const Matrix reduced = solver(a, b, c);

  TransportPlan plan;
  plan.flow = Matrix::Zero(supply.size(), demand.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      plan.flow(rows[i], cols[j]) = reduced(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  plan.cost = cost_of_plan(plan.flow, cost);
  return plan;
}

Matrix simplex_flow(const Vector& a, const Vector& b, const Matrix& c) {
  return TransportSimplex(a, b, c).solve();
}

}  // namespace

void check_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    std::ostringstream msg;
    msg << "exponent p must be a finite real >= 1, got " << p;
    throw Error(ErrorCode::kBadExponent, msg.str());
  }
}

Matrix cost_matrix(const Matrix& x, const Matrix& y, double p) {
  check_exponent(p);
  if (x.cols() != y.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "point sets live in different dimensions");
  }
  Matrix out(x.rows(), y.rows());
  const double work = static_cast<double>(x.rows()) * static_cast<double>(y.rows()) *
                      static_cast<double>(x.cols());
  if (x.cols() >= 32 && work > 5e7) {
    // Large high-dimensional blocks go through a matrix product. Squared
    // distances lose absolute precision around 1e-16 * ||x||^2 this way.
    const Vector xn = x.rowwise().squaredNorm();
    const Vector yn = y.rowwise().squaredNorm();
    out.noalias() = -2.0 * x * y.transpose();
    out.colwise() += xn;
    out.rowwise() += yn.transpose();
    out = out.unaryExpr([p](double sq) { return pow_distance(std::max(sq, 0.0), p); });
    return out;
  }
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const auto xs = x.row(s);
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
      out(s, t) = pow_distance((y.row(t) - xs).squaredNorm(), p);
    }
  }
  return out;
}

Matrix cost_matrix(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p) {
  return cost_matrix(mu.atoms(), nu.atoms(), p);
}

double cost_of_plan(const Matrix& plan, const Matrix& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "plan and cost matrix shapes differ");
  }
  return plan.cwiseProduct(cost).sum();
}

TransportPlan solve_transport_simplex(const Vector& supply, const Vector& demand,
                                      const Matrix& cost) {
  return solve_reduced(supply, demand, cost, simplex_flow);
}

TransportPlan solve_transport(const Vector& supply, const Vector& demand, const Matrix& cost) {
  return solve_reduced(supply, demand, cost, [](const Vector& a, const Vector& b, const Matrix& c) {
    if (a.size() == b.size() && a.size() > 1 && is_uniform(a) && is_uniform(b)) {
      const auto match = solve_assignment(c);
      Matrix flow = Matrix::Zero(a.size(), b.size());
      for (std::size_t i = 0; i < match.size(); ++i) {
        flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(match[i])) =
            a(static_cast<Eigen::Index>(i));
      }
      return flow;
    }
    return simplex_flow(a, b, c);
  });
}

TransportPlan solve_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p) {
  if (mu.dim() != nu.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "distributions live in different dimensions");
  }
  return solve_transport(mu.weights(), nu.weights(), cost_matrix(mu, nu, p));
}

double wasserstein_p(const DiscreteDistribution& mu, const DiscreteDistribution& nu, double p) {
  const double cost = solve_ot(mu, nu, p).cost;
  return std::pow(std::max(cost, 0.0), 1.0 / p);
}

double barycenter_objective(const DiscreteDistribution& nu,
                            std::span<const DiscreteDistribution> mus, double p,
                            std::span<const double> lambdas) {
  if (mus.empty()) throw Error(ErrorCode::kEmptyInput, "no distributions given");
  const double k = static_cast<double>(mus.size());
  if (!lambdas.empty()) {
    if (lambdas.size() != mus.size()) {
      throw Error(ErrorCode::kBadLambdas, "need one lambda per distribution");
    }
    double total = 0.0;
    for (double l : lambdas) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw Error(ErrorCode::kBadLambdas, "negative lambda");
      total += l;
    }
    if (std::abs(total - 1.0) > kNormalizationTol) {
      throw Error(ErrorCode::kBadLambdas, "lambdas must sum to 1");
    }
  }
  double value = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const double lambda = lambdas.empty() ? 1.0 / k : lambdas[i];
    value += lambda * solve_ot(mus[i], nu, p).cost;
  }
  return value;
}

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw Error(ErrorCode::kShapeMismatch, "assignment needs a square matrix");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr long kFree = -1;

  const auto un = static_cast<std::size_t>(n);
  std::vector<double> u(un, 0.0);
  std::vector<double> v(un, 0.0);
  std::vector<double> shortest(un);
  std::vector<long> path(un, kFree);
  std::vector<long> col_for_row(un, kFree);
  std::vector<long> row_for_col(un, kFree);
  std::vector<char> seen_row(un);
  std::vector<char> seen_col(un);
  std::vector<long> remaining(un);

  for (long current = 0; current < n; ++current) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(seen_row.begin(), seen_row.end(), 0);
    std::fill(seen_col.begin(), seen_col.end(), 0);
    for (std::size_t it = 0; it < un; ++it) remaining[it] = n - 1 - static_cast<long>(it);
    std::size_t num_remaining = un;

    double min_value = 0.0;
    long sink = kFree;
    long i = current;
    while (sink == kFree) {
      seen_row[static_cast<std::size_t>(i)] = 1;
      std::size_t index = un;
      double lowest = kInf;
      const double ui = u[static_cast<std::size_t>(i)];
      for (std::size_t it = 0; it < num_remaining; ++it) {
        const auto j = static_cast<std::size_t>(remaining[it]);
        const double r = min_value + cost(i, static_cast<Eigen::Index>(j)) - ui - v[j];
        if (r < shortest[j]) {
          path[j] = i;
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row_for_col[j] == kFree)) {
          lowest = shortest[j];
          index = it;
        }
      }
      if (index == un || lowest == kInf) {
        throw Error(ErrorCode::kNumericalFailure, "assignment problem is infeasible");
      }
      min_value = lowest;
      const auto j = static_cast<std::size_t>(remaining[index]);
      if (row_for_col[j] == kFree) {
        sink = static_cast<long>(j);
      } else {
        i = row_for_col[j];
      }
      seen_col[j] = 1;
      remaining[index] = remaining[--num_remaining];
    }

    u[static_cast<std::size_t>(current)] += min_value;
    for (std::size_t r = 0; r < un; ++r) {
      if (seen_row[r] && static_cast<long>(r) != current) {
        u[r] += min_value - shortest[static_cast<std::size_t>(col_for_row[r])];
      }
    }
    for (std::size_t c = 0; c < un; ++c) {
      if (seen_col[c]) v[c] -= min_value - shortest[c];
    }

    long j = sink;
    for (;;) {
      const long r = path[static_cast<std::size_t>(j)];
      row_for_col[static_cast<std::size_t>(j)] = r;
      std::swap(col_for_row[static_cast<std::size_t>(r)], j);
      if (r == current) break;
    }
  }

  std::vector<std::size_t> out(un);
  for (std::size_t r = 0; r < un; ++r) out[r] = static_cast<std::size_t>(col_for_row[r]);
  return out;
}

}  // namespace wbdr
