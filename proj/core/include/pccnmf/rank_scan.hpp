#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pccnmf/dataset.hpp"
#include "pccnmf/nmf.hpp"
#include "pccnmf/prob_model.hpp"

namespace pccnmf {

/// primal compares p(pi|i) against {p(pi|b)}_b; dual compares p(i|pi)
/// against {p(i|b)}_b.
enum class Direction { primal, dual };

std::string_view to_string(Direction d) noexcept;

/// Relative slack for the non-strict comparisons, so that ties broken only
/// by rounding still count as ties.
inline constexpr double kTieTolerance = 1e-10;

struct PredictabilityCount {
  std::size_t invalid = 0;
  std::size_t total = 0;

  double invalid_fraction() const noexcept {
    return total == 0 ? 0.0 : static_cast<double>(invalid) / total;
  }
  double valid_fraction() const noexcept { return 1.0 - invalid_fraction(); }
};

/// A pair (pi, i) is valid when some basis predicts pi no better than image i
/// does and some basis predicts it no worse:
///   min_b p(pi|b) <= p(pi|i) <= max_b p(pi|b).
/// Pairs with p(pi|i) = 0 are valid.
PredictabilityCount predictability_check(const PccModel& pcc,
                                         Direction direction = Direction::primal);
double predictability_fraction(const PccModel& pcc,
                               Direction direction = Direction::primal);

/// Mean cosine distance over all pairs of basis columns. Needs R >= 2.
double mean_internal_distance(const Matrix& basis);
double mean_internal_distance(const Factorization& f);

/// sqrt(sum (P - P^)^2) / sqrt(sum P^2).
double rrssq(const Matrix& p, const Matrix& p_hat);
double rrssq(const DataMatrix& m, const Factorization& f);

enum class BicVariant { bic1, bic2, bic3 };

/// Information criteria of the Bai-Ng family scaled by NM, with
/// C = min(N, M) and RSS the residual sum of squares:
///   fit  = NM ln(RSS / NM)
///   bic1 = fit + R (N + M) ln(NM / (N + M))
///   bic2 = fit + R (N + M) ln(C)
///   bic3 = fit + R NM ln(C) / C
double bic_score(Eigen::Index n, Eigen::Index m, int rank, double rss,
                 BicVariant variant);
double bic_score(const DataMatrix& data, const Factorization& f,
                 BicVariant variant);

struct RankScanOptions {
  int r_min = 1;
  int r_max = 1;
  /// Accepted share of invalid pairs.
  double tau = 0.0;
  std::vector<std::uint64_t> seeds;
  Loss loss = Loss::frobenius;
  SolverOptions solver;
  int threads = 1;
};

inline double tau_single_pixel(Eigen::Index n, Eigen::Index m) {
  return 1.0 / (static_cast<double>(n) * static_cast<double>(m));
}
inline double tau_single_pixel_per_image(Eigen::Index m) {
  return 1.0 / static_cast<double>(m);
}

struct RankScanEntry {
  int rank = 0;
  std::uint64_t seed = 0;
  double valid_fraction = 0.0;
  std::size_t invalid_pairs = 0;
  std::optional<double> dbar;
  double frobenius_error = 0.0;
  double rrssq = 0.0;
  std::array<double, 3> bic{};
  int iterations = 0;
  bool converged = false;
};

struct RankSummary {
  int rank = 0;
  double median_invalid_fraction = 0.0;
  std::optional<double> mean_dbar;
  /// Smallest residual over seeds and the criteria evaluated at it.
  double best_error = 0.0;
  double best_rrssq = 0.0;
  std::array<double, 3> bic{};
};

struct RankScanReport {
  Direction direction = Direction::primal;
  std::vector<int> ranks;
  std::vector<std::uint64_t> seeds;
  double tau = 0.0;
  Loss loss = Loss::frobenius;
  std::vector<RankScanEntry> entries;  // ordered by (rank, seed)
  std::vector<RankSummary> summaries;  // one per rank
  std::optional<int> r_c;
  double best_invalid_fraction = 1.0;

  const RankSummary* summary(int rank) const;
  nlohmann::ordered_json to_json() const;
  /// R,seed,valid_fraction,dbar,error,rrssq,bic1,bic2,bic3
  std::string to_csv() const;
};

/// Factorizes at every rank in [r_min, r_max] for every seed. R_c is the
/// smallest rank whose median (over seeds) invalid-pair fraction is <= tau;
/// the full curve is kept because the fraction need not be monotone in R.
RankScanReport estimate_rc(const DataMatrix& m, const RankScanOptions& opts);
RankScanReport estimate_rc_dual(const DataMatrix& m, const RankScanOptions& opts);
RankScanReport scan_ranks(const DataMatrix& m, const RankScanOptions& opts,
                          Direction direction);

/// Ranks R in the interior of the summaries with bic(R) strictly below both
/// neighbours.
std::vector<int> bic_local_minima(const RankScanReport& report,
                                  BicVariant variant);

}  // namespace pccnmf
