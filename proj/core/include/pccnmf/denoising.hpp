#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pccnmf/dataset.hpp"
#include "pccnmf/nmf.hpp"

namespace pccnmf {

/// Per image: D(P_i, P_i^noisy) - D(P_i, P^_i^noisy). Positive means the
/// reconstruction of the noisy image is closer to the clean one than the
/// noisy image itself.
Vector denoise_margins(const Matrix& clean, const Matrix& noisy,
                       const Matrix& recon_noisy);
Vector denoise_margins(const DataMatrix& clean, const DataMatrix& noisy,
                       const Factorization& f_noisy);

/// Fraction of images i whose clean image is the unique cosine-nearest clean
/// image to the reconstruction column i. Ties count as misses.
double accuracy(const Matrix& clean, const Matrix& recon);

/// Centered moving average; the window shrinks at the ends.
std::vector<double> moving_average(const std::vector<double>& values, int window);

struct DenoiseOptions {
  std::vector<int> ranks;
  /// Images allowed to violate the margin condition at a qualifying rank.
  int exclusions = 2;
  std::vector<std::uint64_t> seeds{0};
  Loss loss = Loss::frobenius;
  SolverOptions solver;
  bool svd_baseline = true;
  int smoothing_window = 5;
  int threads = 1;
};

struct DenoiseRow {
  int rank = 0;
  /// Fewest violating images over seeds, and the seed that achieved it.
  int violations = 0;
  std::uint64_t best_seed = 0;
  bool qualifies = false;
  Vector margins;  // of the best seed
  double ac_nmf = 0.0;  // mean over seeds
  std::optional<double> ac_svd;
  double ac_nmf_smoothed = 0.0;
  std::optional<double> ac_svd_smoothed;
};

struct DenoiseReport {
  std::vector<DenoiseRow> rows;
  int exclusions = 0;
  std::optional<double> xi;
  /// Smallest qualifying rank.
  std::optional<int> r1;
  /// Last rank of the unbroken qualifying run that starts at r1.
  std::optional<int> r2;
  /// Largest qualifying rank anywhere in the scan.
  std::optional<int> r_last;
  /// Noisy input identical to the clean one: margins reduce to -D(P_i, P^_i).
  bool degenerate = false;

  nlohmann::ordered_json to_json() const;
  /// R,ac_nmf,ac_svd,ac_nmf_smoothed,ac_svd_smoothed,violations
  std::string to_csv() const;
};

/// Factorizes the noisy matrix at every rank and seed, counts margin
/// violations and computes AC for NMF and (optionally) truncated SVD.
DenoiseReport denoise_sweep(const DataMatrix& clean, const DataMatrix& noisy,
                            const DenoiseOptions& opts);

DenoiseReport find_r_range(const DataMatrix& clean, const DataMatrix& noisy,
                           int r_lo, int r_hi, int exclusions,
                           const std::vector<std::uint64_t>& seeds,
                           const SolverOptions& solver = {}, int threads = 1);

DenoiseReport compare_with_svd(const DataMatrix& clean,
                               const DataMatrix& distorted,
                               const std::vector<int>& ranks,
                               const std::vector<std::uint64_t>& seeds,
                               const SolverOptions& solver = {}, int threads = 1);

}  // namespace pccnmf
