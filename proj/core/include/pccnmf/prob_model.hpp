#pragma once

#include <vector>

#include "pccnmf/dataset.hpp"
#include "pccnmf/nmf.hpp"

namespace pccnmf {

/// p(pi, i) = P / total with its marginals.
struct JointModel {
  Matrix joint;        // N x M
  Vector marg_pixel;   // p(pi)
  Vector marg_image;   // p(i)
  double total = 0.0;  // sum of P

  /// p(pi | i); columns sum to 1.
  Matrix cond_pixel_given_image() const;
  /// p(i | pi); rows with p(pi) = 0 are left at zero.
  Matrix cond_image_given_pixel() const;
};

/// Throws DegenerateInputError for an all-zero matrix or an all-zero image
/// column (p(pi | i) would be undefined).
JointModel to_joint(const Matrix& p);
JointModel to_joint(const DataMatrix& m);

/// Probability family induced by a factorization P ~ B W:
///   p(pi|b)  = B_pib / sum_rho B_rhob
///   p(b,i)   = W_bi sum_rho B_rhob / sum(B W)
///   p^(pi,i) = sum_b p(pi|b) p(b,i)
/// The p(b,i) normalizer is the reconstruction mass rather than the data
/// mass so that p(b,i) is a distribution for any loss; the two coincide when
/// the row/column sums are conserved. Everything here is invariant under
/// gauge_transform.
struct PccModel {
  JointModel data;
  Matrix cond_pixel_given_basis;   // N x R, p(pi|b)
  Matrix joint_basis_image;        // R x M, p(b,i)
  Vector basis_prior;              // p(b)
  Matrix cond_image_given_basis;   // R x M, p(i|b)
  Matrix cond_pixel_given_image;   // N x M, p(pi|i)
  Matrix approx_cond;              // N x M, p^(pi|i)
  Matrix approx_joint;             // N x M, p^(pi,i)
  /// Original indices of the basis columns that were kept.
  std::vector<int> kept_bases;

  Eigen::Index rank() const noexcept { return cond_pixel_given_basis.cols(); }
};

/// Zero-sum basis columns are dropped with a warning.
PccModel derive_pcc(const Matrix& p, const Matrix& basis, const Matrix& weights);
PccModel derive_pcc(const DataMatrix& m, const Factorization& f);

struct MarginalResiduals {
  double row = 0.0;
  double col = 0.0;
};

/// Max relative deviation between the row (resp. column) sums of P and P^.
/// A row or column whose data sum is zero is measured against the mean data
/// sum over rows (resp. columns).
MarginalResiduals marginal_residuals(const Matrix& p, const Matrix& p_hat);
MarginalResiduals marginal_residuals(const DataMatrix& m, const Factorization& f);

}  // namespace pccnmf
