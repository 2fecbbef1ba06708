#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pccnmf/dataset.hpp"
#include "pccnmf/nmf.hpp"

namespace pccnmf {

/// 1 - <a, b> / (|a| |b|), clamped to [0, 2]; 1 when either vector is zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);
double cosine_distance(const Vector& a, const Vector& b);

/// D(a_k, b_l) for every column pair; result is cols(a) x cols(b).
Matrix cosine_distance_matrix(const Matrix& a, const Matrix& b);

/// Largest cosine distance between two columns of m.
double max_pairwise_distance(const Matrix& m);

/// Exact minimum-cost perfect matching on a square cost matrix
/// (Kuhn-Munkres with potentials). Among optimal assignments the
/// lexicographically smallest row -> column vector is returned.
std::vector<int> solve_assignment(const Matrix& cost);

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
};

DistanceStats summarize(std::span<const double> values);

struct Matching {
  std::vector<int> assignment;  // a -> a^(a)
  std::vector<double> distances;
  double total = 0.0;
  DistanceStats stats;
};

Matching match_bases(const Matrix& b1, const Matrix& b2);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double pct = 0.0;
};

/// 20 uniform bins on [0, 1] plus one overflow bin for (1, 2].
std::vector<HistogramBin> distance_histogram(std::span<const double> distances);
std::string histogram_csv(const std::vector<HistogramBin>& bins);

enum class StabilityMode { noise_split, seed_pair };

struct StabilityOptions {
  int rank = 0;
  StabilityMode mode = StabilityMode::seed_pair;
  double xi = 0.0;
  /// noise_split: factorization seed for both halves. seed_pair: first run.
  std::uint64_t seed_a = 0;
  /// noise_split: seed of the flip noise on the second half.
  /// seed_pair: second run.
  std::uint64_t seed_b = 1;
  Loss loss = Loss::frobenius;
  SolverOptions solver;
};

struct StabilityResult {
  Matching matching;
  /// Largest cosine distance between images of the input, for context.
  double max_image_distance = 0.0;
  nlohmann::ordered_json report;
};

/// noise_split factorizes the first M/2 columns and the flip-noised last M/2
/// columns at the same rank and seed; seed_pair factorizes the whole matrix
/// twice. Either way the two basis sets are matched on cosine distance.
StabilityResult stability_experiment(const DataMatrix& m,
                                     const StabilityOptions& opts);

nlohmann::ordered_json to_json(const Matching& matching);

}  // namespace pccnmf
