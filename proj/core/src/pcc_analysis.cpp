#include "pccnmf/pcc_analysis.hpp"

#include <cmath>

#include "pccnmf/error.hpp"
#include "pccnmf/stability.hpp"

namespace pccnmf {

ErrorSequences error_sequences(const PccModel& pcc) {
  const Matrix& cond = pcc.cond_pixel_given_image;
  const Matrix& approx = pcc.approx_cond;
  const Eigen::Index n = cond.rows();
  const Eigen::Index m = cond.cols();
  ErrorSequences seq;
  seq.eps.resize(n * m);
  seq.w.resize(n * m);
  seq.v.resize(n * m);
  for (Eigen::Index px = 0; px < n; ++px) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index k = px * m + i;
      const double c = cond(px, i);
      seq.eps(k) = c > 0.0 ? std::abs(c - approx(px, i)) / c : 0.0;
      seq.w(k) = c;
      seq.v(k) = c - pcc.data.marg_pixel(px);
    }
  }
  return seq;
}

namespace {

bool has_variance(const Vector& x) {
  return x.size() >= 2 && x.maxCoeff() > x.minCoeff();
}

}  // namespace

double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("pearson needs two vectors of equal length >= 2");
  }
  if (!has_variance(x) || !has_variance(y)) {
    throw UndefinedCorrelationError("correlation undefined: zero variance");
  }
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  return 1.0 - cosine_distance(xc, yc);
}

AnticorrelationReport anticorrelation_report(const PccModel& pcc) {
  const ErrorSequences seq = error_sequences(pcc);
  AnticorrelationReport r;
  r.length = static_cast<std::size_t>(seq.eps.size());
  r.r_w = pearson(seq.eps, seq.w);
  if (!has_variance(seq.v)) {
    throw UndefinedCorrelationError("correlation undefined: v is constant");
  }
  const Vector eps_c = seq.eps.array() - seq.eps.mean();
  r.r_v = 1.0 - cosine_distance(eps_c, seq.v);
  return r;
}

double entropy(const Eigen::Ref<const Vector>& p) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) > 0.0) s -= p(k) * std::log(p(k));
  }
  return s;
}

ImageEntropies image_entropies(const PccModel& pcc) {
  const Eigen::Index m = pcc.cond_pixel_given_image.cols();
  ImageEntropies e;
  e.s.resize(m);
  e.s_hat.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    e.s(i) = entropy(pcc.cond_pixel_given_image.col(i));
    e.s_hat(i) = entropy(pcc.approx_cond.col(i));
    if (e.s(i) > e.s_hat(i) + 1e-12) ++e.violations;
  }
  return e;
}

double hoyer_sparsity(const Eigen::Ref<const Vector>& x) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) throw ParameterError("Hoyer sparsity needs length >= 2");
  const double l2 = x.norm();
  if (!(l2 > 0.0)) throw ParameterError("Hoyer sparsity of a zero vector");
  const double l1 = x.cwiseAbs().sum();
  return (std::sqrt(n) - l1 / l2) / (std::sqrt(n) - 1.0);
}

namespace {

double mean_hoyer(const Matrix& columns) {
  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    if (!(columns.col(c).norm() > 0.0)) continue;
    sum += hoyer_sparsity(columns.col(c));
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

SparsityComparison sparsity_comparison(const PccModel& pcc) {
  SparsityComparison out;
  const Matrix& cond = pcc.cond_pixel_given_image;
  for (Eigen::Index i = 0; i < cond.cols(); ++i) {
    out.lhs += pcc.data.marg_image(i) * entropy(cond.col(i));
  }
  for (Eigen::Index b = 0; b < pcc.rank(); ++b) {
    out.rhs += pcc.basis_prior(b) * entropy(pcc.cond_pixel_given_basis.col(b));
  }
  if (cond.rows() >= 2) {
    out.hoyer_images = mean_hoyer(cond);
    out.hoyer_bases = mean_hoyer(pcc.cond_pixel_given_basis);
  }
  return out;
}

nlohmann::ordered_json analysis_json(const PccModel& pcc) {
  nlohmann::ordered_json j;
  try {
    const AnticorrelationReport a = anticorrelation_report(pcc);
    j["r_w"] = a.r_w;
    j["r_v"] = a.r_v;
  } catch (const UndefinedCorrelationError& e) {
    j["r_w"] = nullptr;
    j["r_v"] = nullptr;
    j["correlation_error"] = e.what();
  }
  j["length"] = pcc.cond_pixel_given_image.size();
  const ImageEntropies ent = image_entropies(pcc);
  j["entropy_violations"] = ent.violations;
  const SparsityComparison sp = sparsity_comparison(pcc);
  j["lhs"] = sp.lhs;
  j["rhs"] = sp.rhs;
  j["hoyer_images"] = sp.hoyer_images;
  j["hoyer_bases"] = sp.hoyer_bases;
  return j;
}

}  // namespace pccnmf
