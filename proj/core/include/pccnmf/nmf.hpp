#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "pccnmf/dataset.hpp"

namespace pccnmf {

enum class Loss { frobenius, kl };

std::string_view to_string(Loss loss) noexcept;
Loss parse_loss(std::string_view name);

enum class Init { uniform_random };

struct SolverOptions {
  int max_iters = 2000;
  /// Stop once |loss_t - loss_{t-1}| / max(loss_{t-1}, 1e-30) < rel_tol.
  double rel_tol = 1e-6;
  Init init = Init::uniform_random;
};

struct TracePoint {
  int iteration = 0;
  double loss = 0.0;
};

/// P ~ B * W with B (N x R) and W (R x M) nonnegative.
struct Factorization {
  Matrix basis;    // B, column b is basis image b
  Matrix weights;  // W
  Loss loss = Loss::frobenius;
  std::uint64_t seed = 0;
  std::vector<TracePoint> trace;
  bool converged = false;

  Eigen::Index rank() const noexcept { return basis.cols(); }
  int iterations() const noexcept {
    return trace.empty() ? 0 : trace.back().iteration;
  }
  double final_loss() const noexcept {
    return trace.empty() ? 0.0 : trace.back().loss;
  }
  Matrix reconstruct() const { return basis * weights; }
};

/// Entries below this are clamped after every multiplicative step so that no
/// factor entry locks at zero.
inline constexpr double kFactorFloor = 1e-12;

/// Lee-Seung multiplicative updates (W then B per iteration) for the chosen
/// loss. Initial entries are uniform on (0, 1] scaled by sqrt(mean(P) / R),
/// drawn from mt19937_64(seed): B row-major first, then W row-major.
///
/// Throws ParameterError for rank outside [1, min(N, M)] and
/// DegenerateInputError for an all-zero matrix.
Factorization factorize(const DataMatrix& m, int rank, Loss loss,
                        std::uint64_t seed, const SolverOptions& opts = {});
Factorization factorize(const Matrix& p, int rank, Loss loss,
                        std::uint64_t seed, const SolverOptions& opts = {});

/// Sum of squared differences.
double frobenius_error(const Matrix& p, const Matrix& p_hat);
double frobenius_error(const DataMatrix& m, const Factorization& f);

/// Generalized KL divergence sum P ln(P / P^) - P + P^ with 0 ln 0 = 0.
/// Returns +infinity if some P > 0 meets P^ = 0.
double kl_divergence(const Matrix& p, const Matrix& p_hat);
double kl_divergence(const DataMatrix& m, const Factorization& f);

/// ||P - P^||_F / ||P||_F.
double relative_error(const Matrix& p, const Matrix& p_hat);

/// Best rank-R approximation in Frobenius norm (entries may be negative).
Matrix truncated_svd(const Matrix& p, int rank);
Matrix truncated_svd(const DataMatrix& m, int rank);

/// B -> B diag(kappa), W -> diag(kappa)^-1 W. Every kappa_b must be > 0.
Factorization gauge_transform(const Factorization& f, const Vector& kappa);

/// B.csv, W.csv and meta.json {rank, loss, seed, iters, final_loss, converged}.
void save_factorization(const std::filesystem::path& dir, const Factorization& f);
Factorization load_factorization(const std::filesystem::path& dir);

}  // namespace pccnmf
