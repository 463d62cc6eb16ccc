#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbdr/core.hpp"
#include "wbdr/projection.hpp"

namespace wbdr {

// ---------------------------------------------------------------------------
// Lower-bound constructions
// ---------------------------------------------------------------------------

// 2t points in R^t: p_i = N e_i, q_i = (N + 1) e_i for i < t, and
// q_t = (N + 1 - C eps) e_t. Distribution i (i < t) is uniform over every
// point except p_i, distribution t + i over every point except q_i. Each
// point carries total mass 1 across the collection.
struct LowerBoundInstance {
  std::vector<DiscreteDistribution> distributions;
  Matrix points;  // rows p_1..p_t then q_1..q_t
  Vector masses;  // pooled mass per row of `points`
  std::size_t support_size = 0;
  double expected_opt_cost = 0.0;  // (1 - C eps)^p
};

LowerBoundInstance gen_lb_barycenter(std::size_t t, double N, double C, double eps,
                                     double p = 2.0);

// Clustering of a pooled point set where every point sends its whole mass to
// a center that is itself one of the points: sum_x mass(x) ||x - center(x)||^p.
double point_center_cost(const Matrix& points, const Vector& masses,
                         std::span<const std::size_t> center_of, double p);

// Keep every point as its own center except q_t, which joins p_t.
std::vector<std::size_t> lb_explicit_assignment(const LowerBoundInstance& instance);

// Optimal point-center clustering with |points| - 1 centers: the point whose
// nearest neighbour is cheapest to reach joins it.
std::vector<std::size_t> best_merge_assignment(const Matrix& points, const Vector& masses,
                                               double p);

// Two equal-size point sets in R^d and the cost of their optimal matching.
struct MatchingInstance {
  Matrix a;
  Matrix b;
  double reference_cost = 0.0;
};

// A and B partition {e_i} U {e_i / 2}; e_i and e_i / 2 are always on opposite
// sides, with e_i in A for odd i (1-based). Optimal matching cost d / 2.
MatchingInstance gen_ot_pair(std::size_t d);

// Level points e_i * l / C, l = 1..C, alternating sides along each axis, with
// half of the axes starting in A. Optimal matching pairs adjacent levels,
// cost d / 2.
MatchingInstance gen_pullback(std::size_t d, std::size_t C);

// k - 1 copies of delta_0 and one delta_k, all in R^1.
std::vector<DiscreteDistribution> gen_coreset_synthetic(std::size_t k);

// MNIST-like stand-in: side x side images with pixels in [0, 1]. Each class
// owns a few prototypes made of Gaussian blobs; a sample is a scaled
// prototype plus pixel noise, clipped to [0, 1].
struct LabelledPoints {
  Matrix points;
  std::vector<int> labels;
};

LabelledPoints gen_synthetic_digits(std::size_t classes, std::size_t per_class,
                                    std::size_t side, std::uint64_t seed);

struct MatchingDistortion {
  double low = 0.0;       // optimal matching cost after projection
  double pullback = 0.0;  // that matching, evaluated in the original space
  double high = 0.0;      // optimal matching cost in the original space
};

// Matching problems are solved as OT between uniform distributions; the
// optimal plan is a scaled permutation and costs are reported unscaled.
std::vector<std::size_t> optimal_matching(const Matrix& a, const Matrix& b, double p);
double matching_cost(const Matrix& a, const Matrix& b, std::span<const std::size_t> match,
                     double p);

MatchingDistortion empirical_matching_distortion(const Matrix& a, const Matrix& b,
                                                 const ProjectionMap& map, double p = 1.0,
                                                 std::optional<double> known_high = std::nullopt);

// ---------------------------------------------------------------------------
// Data ingestion
// ---------------------------------------------------------------------------

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels_raw(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels);

// One point per image in R^{rows*cols}, pixels scaled to [0, 1].
Matrix load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Uniform distribution per distinct label (ascending). subsample = 0 keeps
// every point; otherwise larger classes are subsampled without replacement.
std::vector<DiscreteDistribution> group_by_label(const Matrix& points, std::span<const int> labels,
                                                 std::size_t subsample, std::uint64_t seed);

// Rows "dist_id,w,x_1,...,x_d"; header optional; grouped by ascending id.
// An empty file yields an empty list.
std::vector<DiscreteDistribution> load_csv_distributions(const std::string& path);
std::vector<DiscreteDistribution> parse_csv_distributions(std::istream& in);
void write_csv_distributions(std::ostream& out, std::span<const DiscreteDistribution> mus);

// ---------------------------------------------------------------------------
// Low-rank form of the p = 2 objective
// ---------------------------------------------------------------------------

struct LowRankCheck {
  double frobenius_cost = 0.0;
  double barycenter_cost = 0.0;
  bool match = false;
};

// Expands every plan entry into w N unit rows, builds the normalized cluster
// indicator X and compares (1/N) ||B - X X^T B||_F^2 with k * cost_2(S).
LowRankCheck verify_low_rank_equivalence(std::span<const DiscreteDistribution> mus,
                                         const Solution& sol, std::size_t N);

}  // namespace wbdr
