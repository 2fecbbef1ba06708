#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pccnmf/error.hpp"
#include "pccnmf/prob_model.hpp"
#include "test_support.hpp"

using namespace pccnmf;
using pccnmf::testing::random_matrix;
using pccnmf::testing::random_mixture;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Joint, HandExample) {
  Matrix p(2, 2);
  p << 1, 0, 1, 2;
  const JointModel jm = to_joint(p);
  EXPECT_DOUBLE_EQ(jm.total, 4.0);
  EXPECT_DOUBLE_EQ(jm.joint(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(jm.marg_pixel(0), 0.25);
  EXPECT_DOUBLE_EQ(jm.marg_image(0), 0.5);
  const Matrix c = jm.cond_pixel_given_image();
  EXPECT_DOUBLE_EQ(c(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(c(1, 1), 1.0);
  const Matrix r = jm.cond_image_given_pixel();
  EXPECT_DOUBLE_EQ(r(1, 0), 1.0 / 3.0);
}

TEST(Joint, ScaleInvariant) {
  std::mt19937_64 gen(1);
  const Matrix p = random_matrix(5, 4, gen);
  EXPECT_LE(max_abs_diff(to_joint(p).joint, to_joint(p * 37.0).joint), 1e-15);
}

TEST(Joint, SwimmerBackboneIsMostProbablePixel) {
  const JointModel jm = to_joint(generate_swimmer());
  const SwimmerParts parts = swimmer_parts();
  const double top = jm.marg_pixel.maxCoeff();
  for (int px : parts.pixels[0]) EXPECT_DOUBLE_EQ(jm.marg_pixel(px), top);
  for (int b = 1; b < 17; ++b) {
    for (int px : parts.pixels[b]) EXPECT_LT(jm.marg_pixel(px), top);
  }
}

TEST(Joint, DegenerateInputs) {
  EXPECT_THROW(to_joint(Matrix::Zero(2, 2)), DegenerateInputError);
  Matrix p(2, 2);
  p << 1, 0, 1, 0;
  try {
    to_joint(p);
    FAIL();
  } catch (const DegenerateInputError& e) {
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(Pcc, DistributionsNormalize) {
  std::mt19937_64 gen(2);
  const Matrix p = random_matrix(7, 6, gen);
  const Factorization f = factorize(p, 3, Loss::kl, 0);
  const PccModel pcc = derive_pcc(p, f.basis, f.weights);
  EXPECT_NEAR(pcc.joint_basis_image.sum(), 1.0, 1e-12);
  for (Eigen::Index b = 0; b < 3; ++b) {
    EXPECT_NEAR(pcc.cond_pixel_given_basis.col(b).sum(), 1.0, 1e-12);
    EXPECT_NEAR(pcc.cond_image_given_basis.row(b).sum(), 1.0, 1e-12);
  }
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_NEAR(pcc.approx_cond.col(i).sum(), 1.0, 1e-12);
    EXPECT_NEAR(pcc.cond_pixel_given_image.col(i).sum(), 1.0, 1e-12);
  }
  // p^(pi, i) is the normalized reconstruction.
  const Matrix recon = f.reconstruct();
  EXPECT_LE(max_abs_diff(pcc.approx_joint, recon / recon.sum()), 1e-14);
}

TEST(Pcc, GaugeInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> logk(-3.0, 3.0);
  const Matrix p = random_matrix(8, 9, gen);
  const Factorization f = factorize(p, 4, Loss::frobenius, 1);
  const PccModel a = derive_pcc(p, f.basis, f.weights);
  for (int t = 0; t < 10; ++t) {
    Vector kappa(4);
    for (Eigen::Index b = 0; b < 4; ++b) kappa(b) = std::pow(10.0, logk(gen));
    const Factorization g = gauge_transform(f, kappa);
    const PccModel c = derive_pcc(p, g.basis, g.weights);
    EXPECT_LE(max_abs_diff(a.cond_pixel_given_basis, c.cond_pixel_given_basis), 1e-12);
    EXPECT_LE(max_abs_diff(a.joint_basis_image, c.joint_basis_image), 1e-12);
    EXPECT_LE(max_abs_diff(a.approx_cond, c.approx_cond), 1e-12);
    EXPECT_LE(max_abs_diff(a.cond_image_given_basis, c.cond_image_given_basis), 1e-12);
  }
}

TEST(Pcc, RecoversExactMixture) {
  std::mt19937_64 gen(4);
  const auto mix = random_mixture(3, 3, 2, gen);
  // Scale the joint into a "data" matrix; the model is scale free.
  const Matrix b = mix.cond * 3.0;
  const Matrix w = mix.joint / 3.0;
  const PccModel pcc = derive_pcc(mix.p * 100.0, b, w);
  EXPECT_LE(max_abs_diff(pcc.cond_pixel_given_basis, mix.cond), 1e-14);
  EXPECT_LE(max_abs_diff(pcc.joint_basis_image, mix.joint), 1e-14);
  EXPECT_LE(max_abs_diff(pcc.approx_joint, mix.p), 1e-14);
}

TEST(Pcc, RankOneKlGivesIndependence) {
  std::mt19937_64 gen(5);
  const Matrix p = random_matrix(6, 5, gen, 0.1, 1.0);
  SolverOptions opts;
  opts.rel_tol = 1e-14;
  opts.max_iters = 5000;
  const Factorization f = factorize(p, 1, Loss::kl, 0, opts);
  const PccModel pcc = derive_pcc(p, f.basis, f.weights);
  const Matrix indep = pcc.data.marg_pixel * pcc.data.marg_image.transpose();
  EXPECT_LE(max_abs_diff(pcc.approx_joint, indep), 1e-8);
}

TEST(Pcc, ZeroMassBasisDroppedWithWarning) {
  Matrix p = Matrix::Ones(3, 3);
  Matrix b(3, 2), w(2, 3);
  b << 1, 0, 1, 0, 1, 0;
  w << 1, 1, 1, 1, 1, 1;
  int warnings = 0;
  auto prev = set_warning_handler([&](std::string_view) { ++warnings; });
  const PccModel pcc = derive_pcc(p, b, w);
  set_warning_handler(prev);
  EXPECT_EQ(warnings, 1);
  EXPECT_EQ(pcc.rank(), 1);
  EXPECT_EQ(pcc.kept_bases, std::vector<int>{0});
}

TEST(Pcc, ShapeMismatch) {
  EXPECT_THROW(derive_pcc(Matrix::Ones(3, 3), Matrix::Ones(2, 1), Matrix::Ones(1, 3)),
               ParameterError);
}

TEST(Marginals, ExactReconstructionHasZeroResidual) {
  std::mt19937_64 gen(6);
  const auto mix = random_mixture(5, 6, 2, gen);
  const MarginalResiduals r = marginal_residuals(mix.p, mix.p);
  EXPECT_EQ(r.row, 0.0);
  EXPECT_EQ(r.col, 0.0);
}

TEST(Marginals, HandExample) {
  Matrix p(2, 2), q(2, 2);
  p << 1, 1, 1, 1;
  q << 1, 1, 1, 2;  // row 2 sum 3 vs 2; column 2 sum 3 vs 2
  const MarginalResiduals r = marginal_residuals(p, q);
  EXPECT_DOUBLE_EQ(r.row, 0.5);
  EXPECT_DOUBLE_EQ(r.col, 0.5);
}

TEST(Marginals, KlConservesSumsOnSmallMatrix) {
  std::mt19937_64 gen(7);
  const Matrix p = random_matrix(8, 8, gen);
  SolverOptions opts;
  opts.rel_tol = 1e-12;
  opts.max_iters = 20000;
  const Factorization f = factorize(p, 3, Loss::kl, 0, opts);
  const MarginalResiduals r = marginal_residuals(p, f.reconstruct());
  EXPECT_LE(r.row, 1e-4);
  EXPECT_LE(r.col, 1e-4);
}
