#include "pccnmf/nmf.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pccnmf/error.hpp"

namespace pccnmf {

namespace fs = std::filesystem;

std::string_view to_string(Loss loss) noexcept {
  return loss == Loss::kl ? "kl" : "frobenius";
}

Loss parse_loss(std::string_view name) {
  if (name == "frobenius" || name == "fro") return Loss::frobenius;
  if (name == "kl") return Loss::kl;
  throw ParameterError("unknown loss '" + std::string(name) +
                       "' (expected frobenius or kl)");
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "shape mismatch: " << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols();
    throw ParameterError(os.str());
  }
}

double unit_interval_open_left(std::mt19937_64& gen) {
  return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
}

// Quotient P / P^ with 0/x = 0 so zero entries of P contribute nothing.
Matrix kl_ratio(const Matrix& p, const Matrix& p_hat) {
  return (p.array() > 0.0)
      .select(p.array() / p_hat.array().max(std::numeric_limits<double>::min()),
              0.0)
      .matrix();
}

double loss_value(Loss loss, const Matrix& p, const Matrix& p_hat) {
  return loss == Loss::kl ? kl_divergence(p, p_hat) : frobenius_error(p, p_hat);
}

}  // namespace

Factorization factorize(const DataMatrix& m, int rank, Loss loss,
                        std::uint64_t seed, const SolverOptions& opts) {
  return factorize(m.values(), rank, loss, seed, opts);
}

Factorization factorize(const Matrix& p, int rank, Loss loss,
                        std::uint64_t seed, const SolverOptions& opts) {
  const Eigen::Index n = p.rows();
  const Eigen::Index m = p.cols();
  if (rank < 1 || rank > std::min(n, m)) {
    std::ostringstream os;
    os << "rank " << rank << " outside [1, " << std::min(n, m) << "]";
    throw ParameterError(os.str());
  }
  if (opts.max_iters < 1 || !(opts.rel_tol > 0.0)) {
    throw ParameterError("solver options require max_iters >= 1 and rel_tol > 0");
  }
  if ((p.array() < 0.0).any()) {
    throw ParameterError("factorize requires a nonnegative matrix");
  }
  const double mean = p.mean();
  if (!(mean > 0.0)) {
    throw DegenerateInputError("cannot factorize an all-zero matrix");
  }

  Factorization f;
  f.loss = loss;
  f.seed = seed;
  f.basis.resize(n, rank);
  f.weights.resize(rank, m);

  std::mt19937_64 gen(seed);
  const double scale = std::sqrt(mean / rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index b = 0; b < rank; ++b) {
      f.basis(i, b) = unit_interval_open_left(gen) * scale;
    }
  }
  for (Eigen::Index b = 0; b < rank; ++b) {
    for (Eigen::Index j = 0; j < m; ++j) {
      f.weights(b, j) = unit_interval_open_left(gen) * scale;
    }
  }

  Matrix& B = f.basis;
  Matrix& W = f.weights;
  Matrix p_hat = B * W;
  double prev = loss_value(loss, p, p_hat);
  f.trace.push_back({0, prev});

  for (int it = 1; it <= opts.max_iters; ++it) {
    if (loss == Loss::frobenius) {
      const Matrix btp = B.transpose() * p;
      const Matrix btb = B.transpose() * B;
      const Matrix denom_w = btb * W;
      W = (W.array() * btp.array() /
           denom_w.array().max(std::numeric_limits<double>::min()))
              .max(kFactorFloor)
              .matrix();
      const Matrix pwt = p * W.transpose();
      const Matrix wwt = W * W.transpose();
      const Matrix denom_b = B * wwt;
      B = (B.array() * pwt.array() /
           denom_b.array().max(std::numeric_limits<double>::min()))
              .max(kFactorFloor)
              .matrix();
    } else {
      const Vector col_b = B.colwise().sum().transpose();
      Matrix ratio = kl_ratio(p, p_hat);
      Eigen::ArrayXXd w_num = W.array() * (B.transpose() * ratio).array();
      w_num.colwise() /= col_b.array();
      W = w_num.max(kFactorFloor).matrix();
      p_hat.noalias() = B * W;
      ratio = kl_ratio(p, p_hat);
      const Vector row_w = W.rowwise().sum();
      Eigen::ArrayXXd b_num = B.array() * (ratio * W.transpose()).array();
      b_num.rowwise() /= row_w.transpose().array();
      B = b_num.max(kFactorFloor).matrix();
    }
    p_hat.noalias() = B * W;
    const double cur = loss_value(loss, p, p_hat);
    f.trace.push_back({it, cur});
    if (std::abs(prev - cur) / std::max(prev, 1e-30) < opts.rel_tol) {
      f.converged = true;
      break;
    }
    prev = cur;
  }
  return f;
}

double frobenius_error(const Matrix& p, const Matrix& p_hat) {
  check_same_shape(p, p_hat);
  return (p - p_hat).squaredNorm();
}

double frobenius_error(const DataMatrix& m, const Factorization& f) {
  return frobenius_error(m.values(), f.reconstruct());
}

double kl_divergence(const Matrix& p, const Matrix& p_hat) {
  check_same_shape(p, p_hat);
  double total = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double x = p(i, j);
      const double y = p_hat(i, j);
      if (x > 0.0) {
        if (!(y > 0.0)) return std::numeric_limits<double>::infinity();
        total += x * std::log(x / y) - x + y;
      } else {
        total += y;
      }
    }
  }
  return total;
}

double kl_divergence(const DataMatrix& m, const Factorization& f) {
  return kl_divergence(m.values(), f.reconstruct());
}

double relative_error(const Matrix& p, const Matrix& p_hat) {
  check_same_shape(p, p_hat);
  const double norm = p.norm();
  if (!(norm > 0.0)) {
    throw DegenerateInputError("relative error of an all-zero matrix");
  }
  return (p - p_hat).norm() / norm;
}

Matrix truncated_svd(const Matrix& p, int rank) {
  if (rank < 1 || rank > std::min(p.rows(), p.cols())) {
    throw ParameterError("truncated SVD rank outside [1, min(N, M)]");
  }
  Eigen::BDCSVD<Matrix> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(rank);
  return svd.matrixU().leftCols(k) *
         svd.singularValues().head(k).asDiagonal() *
         svd.matrixV().leftCols(k).transpose();
}

Matrix truncated_svd(const DataMatrix& m, int rank) {
  return truncated_svd(m.values(), rank);
}

Factorization gauge_transform(const Factorization& f, const Vector& kappa) {
  if (kappa.size() != f.rank()) {
    throw ParameterError("gauge vector length must equal the rank");
  }
  if (!(kappa.array() > 0.0).all()) {
    throw ParameterError("gauge factors must be positive");
  }
  Factorization g = f;
  g.basis = f.basis * kappa.asDiagonal();
  g.weights = kappa.cwiseInverse().asDiagonal() * f.weights;
  return g;
}

void save_factorization(const fs::path& dir, const Factorization& f) {
  fs::create_directories(dir);
  write_csv(dir / "B.csv", f.basis);
  write_csv(dir / "W.csv", f.weights);
  nlohmann::ordered_json meta;
  meta["rank"] = f.rank();
  meta["loss"] = to_string(f.loss);
  meta["seed"] = f.seed;
  meta["iters"] = f.iterations();
  meta["final_loss"] = f.final_loss();
  meta["converged"] = f.converged;
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

Factorization load_factorization(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw IoError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("meta.json: " + std::string(e.what()));
  }
  Factorization f;
  f.basis = read_csv_values(dir / "B.csv");
  f.weights = read_csv_values(dir / "W.csv");
  if (f.basis.cols() != f.weights.rows()) {
    throw FormatError("B and W have inconsistent rank");
  }
  f.loss = parse_loss(meta.value("loss", "frobenius"));
  f.seed = meta.value("seed", std::uint64_t{0});
  f.converged = meta.value("converged", false);
  f.trace.push_back({meta.value("iters", 0), meta.value("final_loss", 0.0)});
  return f;
}

}  // namespace pccnmf
