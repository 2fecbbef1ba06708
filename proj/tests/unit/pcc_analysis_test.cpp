#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pccnmf/error.hpp"
#include "pccnmf/pcc_analysis.hpp"
#include "test_support.hpp"

using namespace pccnmf;
using pccnmf::testing::random_matrix;
using pccnmf::testing::random_mixture;

namespace {

// Pearson from the covariance formula.
double pearson_oracle(const Vector& x, const Vector& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    sx += x(k);
    sy += y(k);
  }
  const double mx = sx / n, my = sy / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    cxy += (x(k) - mx) * (y(k) - my);
    cxx += (x(k) - mx) * (x(k) - mx);
    cyy += (y(k) - my) * (y(k) - my);
  }
  return cxy / std::sqrt(cxx * cyy);
}

double entropy_oracle(const Vector& p) {
  double s = 0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) > 0) s += -p(k) * std::log(p(k));
  }
  return s;
}

PccModel approximate_model(std::uint64_t seed, int n = 6, int m = 5, int r = 2) {
  std::mt19937_64 gen(seed);
  const Matrix p = random_matrix(n, m, gen);
  const Factorization f = factorize(p, r, Loss::frobenius, seed);
  return derive_pcc(p, f.basis, f.weights);
}

}  // namespace

TEST(Pearson, MatchesCovarianceFormula) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_matrix(30, 1, gen);
    const Vector y = random_matrix(30, 1, gen);
    EXPECT_NEAR(pearson(x, y), pearson_oracle(x, y), 1e-12);
  }
}

TEST(Pearson, Extremes) {
  Vector x(4);
  x << 1, 2, 3, 5;
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, Vector(-x)), -1.0, 1e-15);
  EXPECT_THROW(pearson(x, Vector::Ones(4)), UndefinedCorrelationError);
  EXPECT_THROW(pearson(x, Vector::Ones(3)), ParameterError);
}

TEST(ErrorSequences, MatchDirectFormulas) {
  const PccModel pcc = approximate_model(2);
  const ErrorSequences seq = error_sequences(pcc);
  const Matrix& p = pcc.data.joint;
  const Eigen::Index n = p.rows(), m = p.cols();
  ASSERT_EQ(seq.eps.size(), n * m);
  for (Eigen::Index px = 0; px < n; ++px) {
    double row = 0;
    for (Eigen::Index i = 0; i < m; ++i) row += p(px, i);
    for (Eigen::Index i = 0; i < m; ++i) {
      double col = 0, approx_col = 0;
      for (Eigen::Index q = 0; q < n; ++q) {
        col += p(q, i);
        approx_col += pcc.approx_joint(q, i);
      }
      const double c = p(px, i) / col;
      const double a = pcc.approx_joint(px, i) / approx_col;
      const Eigen::Index k = px * m + i;
      EXPECT_NEAR(seq.w(k), c, 1e-14);
      EXPECT_NEAR(seq.eps(k), std::abs(c - a) / c, 1e-12);
      EXPECT_NEAR(seq.v(k), c - row, 1e-14);
    }
  }
}

TEST(ErrorSequences, ExactModelHasZeroError) {
  std::mt19937_64 gen(3);
  const auto mix = random_mixture(5, 5, 2, gen);
  const PccModel pcc = derive_pcc(mix.p, mix.cond, mix.joint);
  EXPECT_LE(error_sequences(pcc).eps.maxCoeff(), 1e-12);
}

TEST(ErrorSequences, ZeroEntryGivesZeroError) {
  Matrix p(2, 2);
  p << 1, 0, 1, 1;
  Matrix b = Matrix::Ones(2, 1);
  Matrix w = Matrix::Ones(1, 2);
  const ErrorSequences seq = error_sequences(derive_pcc(p, b, w));
  EXPECT_EQ(seq.eps(1), 0.0);  // pixel 0, image 1
  EXPECT_GT(seq.eps(3), 0.0);
}

TEST(Anticorrelation, MatchesOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PccModel pcc = approximate_model(10 + s, 8, 7, 2);
    const ErrorSequences seq = error_sequences(pcc);
    const AnticorrelationReport r = anticorrelation_report(pcc);
    EXPECT_NEAR(r.r_w, pearson_oracle(seq.eps, seq.w), 1e-10);
    // r_v leaves v uncentered.
    const double me = seq.eps.mean();
    double num = 0, ee = 0, vv = 0;
    for (Eigen::Index k = 0; k < seq.v.size(); ++k) {
      num += (seq.eps(k) - me) * seq.v(k);
      ee += (seq.eps(k) - me) * (seq.eps(k) - me);
      vv += seq.v(k) * seq.v(k);
    }
    EXPECT_NEAR(r.r_v, num / std::sqrt(ee * vv), 1e-10);
    EXPECT_EQ(r.length, 56u);
  }
}

TEST(Anticorrelation, ExactModelIsUndefined) {
  std::mt19937_64 gen(4);
  const auto mix = random_mixture(4, 4, 4, gen);
  Matrix p = mix.p;
  const PccModel pcc = derive_pcc(p, mix.cond, mix.joint);
  // eps is identically zero (up to rounding) so the correlation is undefined
  // or meaningless; analysis_json must still be produced.
  const auto j = analysis_json(pcc);
  EXPECT_TRUE(j.contains("r_w"));
  EXPECT_TRUE(j.contains("entropy_violations"));
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(Vector::Constant(8, 1.0 / 8)), std::log(8.0), 1e-15);
  Vector one_hot = Vector::Zero(5);
  one_hot(2) = 1.0;
  EXPECT_EQ(entropy(one_hot), 0.0);
  std::mt19937_64 gen(5);
  Vector p = random_matrix(9, 1, gen);
  p /= p.sum();
  EXPECT_NEAR(entropy(p), entropy_oracle(p), 1e-14);
}

TEST(Entropy, ImageEntropiesMatchOracle) {
  const PccModel pcc = approximate_model(6);
  const ImageEntropies e = image_entropies(pcc);
  std::size_t violations = 0;
  for (Eigen::Index i = 0; i < pcc.cond_pixel_given_image.cols(); ++i) {
    const double s = entropy_oracle(pcc.cond_pixel_given_image.col(i));
    const double sh = entropy_oracle(pcc.approx_cond.col(i));
    EXPECT_NEAR(e.s(i), s, 1e-12);
    EXPECT_NEAR(e.s_hat(i), sh, 1e-12);
    violations += s > sh + 1e-12;
  }
  EXPECT_EQ(e.violations, violations);
}

TEST(Entropy, RankOneMixtureIsMoreSpread) {
  // p^(pi|i) = p(pi|b) is a mixture of the p(pi|i) under the KL optimum.
  std::mt19937_64 gen(7);
  const Matrix p = random_matrix(6, 6, gen, 0.1, 1.0);
  SolverOptions opts;
  opts.rel_tol = 1e-14;
  const Factorization f = factorize(p, 1, Loss::kl, 0, opts);
  const PccModel pcc = derive_pcc(p, f.basis, f.weights);
  const ImageEntropies e = image_entropies(pcc);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(e.s_hat(i), e.s_hat(0), 1e-12);
  }
  EXPECT_GE(e.s_hat(0) + 1e-12, (e.s.array() * pcc.data.marg_image.array()).sum());
}

TEST(Hoyer, Endpoints) {
  Vector one_hot = Vector::Zero(4);
  one_hot(1) = 3.0;
  EXPECT_NEAR(hoyer_sparsity(one_hot), 1.0, 1e-15);
  EXPECT_NEAR(hoyer_sparsity(Vector::Ones(4)), 0.0, 1e-15);
  EXPECT_THROW(hoyer_sparsity(Vector::Zero(4)), ParameterError);
  EXPECT_THROW(hoyer_sparsity(Vector::Ones(1)), ParameterError);
}

TEST(Sparsity, SingleBasisSingleImage) {
  Matrix p(3, 1);
  p << 1, 2, 3;
  const PccModel pcc = derive_pcc(p, p, Matrix::Ones(1, 1));
  const SparsityComparison s = sparsity_comparison(pcc);
  EXPECT_NEAR(s.lhs, s.rhs, 1e-15);
  EXPECT_NEAR(s.hoyer_images, s.hoyer_bases, 1e-15);
}

TEST(Sparsity, WeightedSumsMatchOracle) {
  const PccModel pcc = approximate_model(8);
  const SparsityComparison s = sparsity_comparison(pcc);
  double lhs = 0, rhs = 0;
  for (Eigen::Index i = 0; i < pcc.data.marg_image.size(); ++i) {
    lhs += pcc.data.marg_image(i) * entropy_oracle(pcc.cond_pixel_given_image.col(i));
  }
  for (Eigen::Index b = 0; b < pcc.rank(); ++b) {
    rhs += pcc.basis_prior(b) * entropy_oracle(pcc.cond_pixel_given_basis.col(b));
  }
  EXPECT_NEAR(s.lhs, lhs, 1e-12);
  EXPECT_NEAR(s.rhs, rhs, 1e-12);
}
