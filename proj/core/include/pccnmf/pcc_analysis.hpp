#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "pccnmf/prob_model.hpp"

namespace pccnmf {

/// Length-NM sequences flattened row-major (pixel outer, image inner).
struct ErrorSequences {
  Vector eps;  // |p(pi|i) - p^(pi|i)| / p(pi|i), 0 where p(pi|i) = 0
  Vector w;    // p(pi|i)
  Vector v;    // p(pi|i) - p(pi)
};

ErrorSequences error_sequences(const PccModel& pcc);

/// Pearson r computed as 1 - D(x - mean x, y - mean y). Throws
/// UndefinedCorrelationError when either input has zero variance.
double pearson(const Vector& x, const Vector& y);

struct AnticorrelationReport {
  double r_w = 0.0;  // Pearson(eps, w)
  /// 1 - D(eps - mean eps, v): v is left uncentered since its mean is taken
  /// to be zero.
  double r_v = 0.0;
  std::size_t length = 0;
};

AnticorrelationReport anticorrelation_report(const PccModel& pcc);

struct ImageEntropies {
  Vector s;      // S_i from p(pi|i)
  Vector s_hat;  // from p^(pi|i)
  /// Images with S_i > S^_i + 1e-12.
  std::size_t violations = 0;
};

/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const Eigen::Ref<const Vector>& p);

ImageEntropies image_entropies(const PccModel& pcc);

/// (sqrt(n) - |x|_1 / |x|_2) / (sqrt(n) - 1): 1 for one-hot, 0 for uniform.
double hoyer_sparsity(const Eigen::Ref<const Vector>& x);

struct SparsityComparison {
  double lhs = 0.0;  // sum_i p(i) S_i
  double rhs = 0.0;  // sum_b p(b) S(Pi|b)
  double hoyer_images = 0.0;
  double hoyer_bases = 0.0;
};

SparsityComparison sparsity_comparison(const PccModel& pcc);

/// {r_w, r_v, length, entropy_violations, lhs, rhs, hoyer_images,
/// hoyer_bases}; r_w/r_v are null with an "error" note when undefined.
nlohmann::ordered_json analysis_json(const PccModel& pcc);

}  // namespace pccnmf
