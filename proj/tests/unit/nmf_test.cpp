#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "pccnmf/error.hpp"
#include "pccnmf/nmf.hpp"
#include "test_support.hpp"

using namespace pccnmf;
using pccnmf::testing::random_matrix;

namespace {

double frobenius_oracle(const Matrix& p, const Matrix& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double d = p(i, j) - q(i, j);
      s += d * d;
    }
  }
  return s;
}

double kl_oracle(const Matrix& p, const Matrix& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double a = p(i, j);
      const double b = q(i, j);
      s += (a > 0 ? a * std::log(a / b) : 0.0) - a + b;
    }
  }
  return s;
}

}  // namespace

TEST(Losses, FrobeniusMatchesOracle) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const Matrix p = random_matrix(5, 7, gen);
    const Matrix q = random_matrix(5, 7, gen);
    EXPECT_NEAR(frobenius_error(p, q), frobenius_oracle(p, q), 1e-12);
  }
}

TEST(Losses, KlHandExample) {
  Matrix p(1, 1), q(1, 1);
  p << 1.0;
  q << std::exp(1.0);
  EXPECT_NEAR(kl_divergence(p, q), std::exp(1.0) - 2.0, 1e-15);
}

TEST(Losses, KlMatchesOracle) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 20; ++t) {
    Matrix p = random_matrix(4, 4, gen);
    p(0, 0) = 0.0;
    const Matrix q = random_matrix(4, 4, gen, 0.1, 1.0);
    EXPECT_NEAR(kl_divergence(p, q), kl_oracle(p, q), 1e-12);
  }
}

TEST(Losses, KlInfiniteWhenModelMissesMass) {
  Matrix p(1, 2), q(1, 2);
  p << 1.0, 0.0;
  q << 0.0, 1.0;
  EXPECT_EQ(kl_divergence(p, q), std::numeric_limits<double>::infinity());
  p << 0.0, 0.0;
  EXPECT_EQ(kl_divergence(p, q), 1.0);
}

TEST(Factorize, RankOneOuterProduct) {
  Vector u(3), v(4);
  u << 1, 2, 3;
  v << 1, 0.5, 2, 1;
  const Matrix p = u * v.transpose();
  SolverOptions opts;
  opts.rel_tol = 1e-14;
  opts.max_iters = 5000;
  for (Loss loss : {Loss::frobenius, Loss::kl}) {
    const Factorization f = factorize(p, 1, loss, 0, opts);
    EXPECT_LE(relative_error(p, f.reconstruct()), 1e-8) << to_string(loss);
  }
}

TEST(Factorize, ExactMixtureRecovered) {
  std::mt19937_64 gen(12);
  const auto mix = pccnmf::testing::random_mixture(4, 4, 2, gen);
  // The construction itself must be exact before the solver is judged.
  ASSERT_LE((mix.cond * mix.joint - mix.p).cwiseAbs().maxCoeff(), 1e-16);
  SolverOptions opts;
  opts.rel_tol = 1e-15;
  opts.max_iters = 20000;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Factorization f = factorize(mix.p, 2, Loss::frobenius, seed, opts);
    best = std::min(best, relative_error(mix.p, f.reconstruct()));
  }
  EXPECT_LE(best, 1e-6);
}

TEST(Factorize, LossIsNonIncreasing) {
  std::mt19937_64 gen(3);
  for (Loss loss : {Loss::frobenius, Loss::kl}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Matrix p = random_matrix(8, 10, gen);
      const Factorization f = factorize(p, 3, loss, seed);
      for (std::size_t k = 1; k < f.trace.size(); ++k) {
        EXPECT_LE(f.trace[k].loss, f.trace[k - 1].loss * (1 + 1e-12))
            << to_string(loss) << " seed " << seed << " step " << k;
      }
    }
  }
}

TEST(Factorize, FactorsStayAboveFloor) {
  std::mt19937_64 gen(4);
  const Matrix p = random_matrix(6, 6, gen);
  const Factorization f = factorize(p, 4, Loss::kl, 1);
  EXPECT_GE(f.basis.minCoeff(), kFactorFloor);
  EXPECT_GE(f.weights.minCoeff(), kFactorFloor);
}

TEST(Factorize, SameSeedSameBits) {
  const DataMatrix s = generate_swimmer();
  SolverOptions opts;
  opts.max_iters = 50;
  const Factorization a = factorize(s, 10, Loss::frobenius, 42, opts);
  const Factorization b = factorize(s, 10, Loss::frobenius, 42, opts);
  EXPECT_EQ(content_digest(a.basis), content_digest(b.basis));
  EXPECT_EQ(content_digest(a.weights), content_digest(b.weights));
}

TEST(Factorize, RejectsBadArguments) {
  const Matrix p = Matrix::Ones(3, 4);
  EXPECT_THROW(factorize(p, 0, Loss::frobenius, 0), ParameterError);
  EXPECT_THROW(factorize(p, 4, Loss::frobenius, 0), ParameterError);
  EXPECT_THROW(factorize(Matrix::Zero(3, 4), 1, Loss::frobenius, 0),
               DegenerateInputError);
  SolverOptions bad;
  bad.max_iters = 0;
  EXPECT_THROW(factorize(p, 1, Loss::frobenius, 0, bad), ParameterError);
  EXPECT_THROW(parse_loss("l1"), ParameterError);
  EXPECT_EQ(parse_loss("kl"), Loss::kl);
}

TEST(Svd, FullRankIsExact) {
  std::mt19937_64 gen(5);
  const Matrix p = random_matrix(5, 6, gen);
  EXPECT_LE(relative_error(p, truncated_svd(p, 5)), 1e-12);
}

TEST(Svd, RankOneOfOuterProduct) {
  Vector u(4), v(3);
  u << 1, 2, 0, 1;
  v << 3, 1, 2;
  const Matrix p = u * v.transpose();
  EXPECT_LE((truncated_svd(p, 1) - p).norm(), 1e-12);
}

TEST(Svd, BeatsRandomRankThreeCandidates) {
  std::mt19937_64 gen(6);
  const Matrix p = random_matrix(6, 6, gen);
  const double svd_err = frobenius_error(p, truncated_svd(p, 3));
  std::normal_distribution<double> normal;
  for (int t = 0; t < 1000; ++t) {
    Matrix a(6, 3), b(3, 6);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = normal(gen);
    for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = normal(gen);
    // Least-squares optimal coefficients for the random column space.
    const Matrix q = a * (a.transpose() * a).ldlt().solve(a.transpose() * p);
    ASSERT_GE(frobenius_oracle(p, q), svd_err - 1e-12);
  }
  // Eckart-Young: the residual equals the sum of the trailing squared
  // singular values, here computed by an independent eigen-decomposition.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.transpose() * p);
  const Vector ev = eig.eigenvalues();  // ascending
  EXPECT_NEAR(svd_err, ev(0) + ev(1) + ev(2), 1e-10);
}

TEST(Gauge, ReconstructionUnchanged) {
  std::mt19937_64 gen(7);
  const Matrix p = random_matrix(6, 5, gen);
  const Factorization f = factorize(p, 3, Loss::frobenius, 0);
  Vector kappa(3);
  kappa << 7.0, 0.01, 2.5;
  const Factorization g = gauge_transform(f, kappa);
  EXPECT_LE((g.reconstruct() - f.reconstruct()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(gauge_transform(f, Vector::Zero(3)), ParameterError);
}

TEST(Persist, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pccnmf_nmf_persist";
  std::filesystem::remove_all(dir);
  std::mt19937_64 gen(8);
  const Matrix p = random_matrix(6, 5, gen, 0.0, 200.0);
  const Factorization f = factorize(p, 2, Loss::kl, 9);
  save_factorization(dir, f);
  const Factorization g = load_factorization(dir);
  EXPECT_EQ(content_digest(g.basis), content_digest(f.basis));
  EXPECT_EQ(content_digest(g.weights), content_digest(f.weights));
  EXPECT_EQ(g.loss, Loss::kl);
  EXPECT_EQ(g.seed, 9u);
}
