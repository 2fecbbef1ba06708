#include "pccnmf/prob_model.hpp"

#include <cmath>
#include <sstream>

#include "pccnmf/error.hpp"

namespace pccnmf {

Matrix JointModel::cond_pixel_given_image() const {
  return joint * marg_image.cwiseInverse().asDiagonal();
}

Matrix JointModel::cond_image_given_pixel() const {
  Matrix out = Matrix::Zero(joint.rows(), joint.cols());
  for (Eigen::Index r = 0; r < joint.rows(); ++r) {
    if (marg_pixel(r) > 0.0) out.row(r) = joint.row(r) / marg_pixel(r);
  }
  return out;
}

JointModel to_joint(const Matrix& p) {
  if ((p.array() < 0.0).any()) {
    throw ParameterError("probability mapping requires a nonnegative matrix");
  }
  JointModel jm;
  jm.total = p.sum();
  if (!(jm.total > 0.0)) {
    throw DegenerateInputError("matrix has no positive entry");
  }
  const Vector col = p.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (!(col(i) > 0.0)) {
      std::ostringstream os;
      os << "image column " << i + 1 << " is all zero; p(pi|i) is undefined";
      throw DegenerateInputError(os.str());
    }
  }
  jm.joint = p / jm.total;
  jm.marg_pixel = jm.joint.rowwise().sum();
  jm.marg_image = jm.joint.colwise().sum().transpose();
  return jm;
}

JointModel to_joint(const DataMatrix& m) { return to_joint(m.values()); }

PccModel derive_pcc(const Matrix& p, const Matrix& basis, const Matrix& weights) {
  if (basis.rows() != p.rows() || weights.cols() != p.cols() ||
      basis.cols() != weights.rows()) {
    throw ParameterError("factorization shape does not match the data matrix");
  }
  PccModel pcc;
  pcc.data = to_joint(p);

  const Vector mass = basis.colwise().sum().transpose();
  for (Eigen::Index b = 0; b < mass.size(); ++b) {
    if (mass(b) > 0.0) {
      pcc.kept_bases.push_back(static_cast<int>(b));
    } else {
      std::ostringstream os;
      os << "basis column " << b + 1 << " has zero mass; dropped";
      warn(os.str());
    }
  }
  if (pcc.kept_bases.empty()) {
    throw DegenerateInputError("every basis column has zero mass");
  }
  const auto r = static_cast<Eigen::Index>(pcc.kept_bases.size());
  const Eigen::Index n = p.rows();
  const Eigen::Index m = p.cols();

  pcc.cond_pixel_given_basis.resize(n, r);
  Matrix scaled_weights(r, m);
  for (Eigen::Index k = 0; k < r; ++k) {
    const int b = pcc.kept_bases[k];
    pcc.cond_pixel_given_basis.col(k) = basis.col(b) / mass(b);
    scaled_weights.row(k) = weights.row(b) * mass(b);
  }
  const double recon_mass = scaled_weights.sum();
  if (!(recon_mass > 0.0)) {
    throw DegenerateInputError("reconstruction has zero mass");
  }
  pcc.joint_basis_image = scaled_weights / recon_mass;
  pcc.basis_prior = pcc.joint_basis_image.rowwise().sum();

  pcc.cond_image_given_basis = Matrix::Zero(r, m);
  for (Eigen::Index k = 0; k < r; ++k) {
    if (pcc.basis_prior(k) > 0.0) {
      pcc.cond_image_given_basis.row(k) =
          pcc.joint_basis_image.row(k) / pcc.basis_prior(k);
    }
  }

  pcc.cond_pixel_given_image = pcc.data.cond_pixel_given_image();
  pcc.approx_joint = pcc.cond_pixel_given_basis * pcc.joint_basis_image;
  pcc.approx_cond.resize(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = pcc.approx_joint.col(i).sum();
    pcc.approx_cond.col(i) =
        s > 0.0 ? Vector(pcc.approx_joint.col(i) / s) : Vector::Zero(n);
  }
  return pcc;
}

PccModel derive_pcc(const DataMatrix& m, const Factorization& f) {
  return derive_pcc(m.values(), f.basis, f.weights);
}

namespace {

double max_relative_deviation(const Vector& data, const Vector& model) {
  const double mean = data.mean();
  double worst = 0.0;
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    const double denom = data(k) > 0.0 ? data(k) : mean;
    if (!(denom > 0.0)) continue;
    worst = std::max(worst, std::abs(data(k) - model(k)) / denom);
  }
  return worst;
}

}  // namespace

MarginalResiduals marginal_residuals(const Matrix& p, const Matrix& p_hat) {
  if (p.rows() != p_hat.rows() || p.cols() != p_hat.cols()) {
    throw ParameterError("marginal residuals: shape mismatch");
  }
  return {max_relative_deviation(p.rowwise().sum(), p_hat.rowwise().sum()),
          max_relative_deviation(p.colwise().sum().transpose(),
                                 p_hat.colwise().sum().transpose())};
}

MarginalResiduals marginal_residuals(const DataMatrix& m, const Factorization& f) {
  return marginal_residuals(m.values(), f.reconstruct());
}

}  // namespace pccnmf
