#include "pccnmf/rank_scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pccnmf/error.hpp"
#include "pccnmf/parallel.hpp"
#include "pccnmf/stability.hpp"

namespace pccnmf {

std::string_view to_string(Direction d) noexcept {
  return d == Direction::dual ? "dual" : "primal";
}

namespace {

bool within_bracket(double lo, double value, double hi) {
  const double slack_lo = kTieTolerance * std::max(std::abs(lo), std::abs(value));
  const double slack_hi = kTieTolerance * std::max(std::abs(hi), std::abs(value));
  return lo <= value + slack_lo && value <= hi + slack_hi;
}

}  // namespace

PredictabilityCount predictability_check(const PccModel& pcc,
                                         Direction direction) {
  PredictabilityCount count;
  const Eigen::Index n = pcc.cond_pixel_given_image.rows();
  const Eigen::Index m = pcc.cond_pixel_given_image.cols();
  count.total = static_cast<std::size_t>(n * m);

  if (direction == Direction::primal) {
    const Vector lo = pcc.cond_pixel_given_basis.rowwise().minCoeff();
    const Vector hi = pcc.cond_pixel_given_basis.rowwise().maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index px = 0; px < n; ++px) {
        const double c = pcc.cond_pixel_given_image(px, i);
        if (c == 0.0) continue;
        if (!within_bracket(lo(px), c, hi(px))) ++count.invalid;
      }
    }
  } else {
    const Matrix cond = pcc.data.cond_image_given_pixel();
    const Vector lo = pcc.cond_image_given_basis.colwise().minCoeff().transpose();
    const Vector hi = pcc.cond_image_given_basis.colwise().maxCoeff().transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index px = 0; px < n; ++px) {
        const double c = cond(px, i);
        if (c == 0.0) continue;
        if (!within_bracket(lo(i), c, hi(i))) ++count.invalid;
      }
    }
  }
  return count;
}

double predictability_fraction(const PccModel& pcc, Direction direction) {
  return predictability_check(pcc, direction).valid_fraction();
}

double mean_internal_distance(const Matrix& basis) {
  const Eigen::Index r = basis.cols();
  if (r < 2) {
    throw ParameterError("mean internal distance needs at least two bases");
  }
  const Matrix d = cosine_distance_matrix(basis, basis);
  double sum = 0.0;
  for (Eigen::Index b = 1; b < r; ++b) {
    for (Eigen::Index a = 0; a < b; ++a) sum += d(a, b);
  }
  return 2.0 * sum / (static_cast<double>(r) * static_cast<double>(r - 1));
}

double mean_internal_distance(const Factorization& f) {
  return mean_internal_distance(f.basis);
}

double rrssq(const Matrix& p, const Matrix& p_hat) {
  if (p.rows() != p_hat.rows() || p.cols() != p_hat.cols()) {
    throw ParameterError("rrssq: shape mismatch");
  }
  const double denom = p.squaredNorm();
  if (!(denom > 0.0)) throw DegenerateInputError("rrssq of a zero matrix");
  return std::sqrt((p - p_hat).squaredNorm()) / std::sqrt(denom);
}

double rrssq(const DataMatrix& m, const Factorization& f) {
  return rrssq(m.values(), f.reconstruct());
}

double bic_score(Eigen::Index n, Eigen::Index m, int rank, double rss,
                 BicVariant variant) {
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double nm = nn * mm;
  const double c = std::min(nn, mm);
  const double fit =
      nm * std::log(std::max(rss / nm, std::numeric_limits<double>::min()));
  switch (variant) {
    case BicVariant::bic1:
      return fit + rank * (nn + mm) * std::log(nm / (nn + mm));
    case BicVariant::bic2:
      return fit + rank * (nn + mm) * std::log(c);
    case BicVariant::bic3:
      return fit + rank * nm * std::log(c) / c;
  }
  return fit;
}

double bic_score(const DataMatrix& data, const Factorization& f,
                 BicVariant variant) {
  return bic_score(data.rows(), data.cols(), static_cast<int>(f.rank()),
                   frobenius_error(data, f), variant);
}

const RankSummary* RankScanReport::summary(int rank) const {
  for (const auto& s : summaries) {
    if (s.rank == rank) return &s;
  }
  return nullptr;
}

nlohmann::ordered_json RankScanReport::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(direction);
  j["loss"] = to_string(loss);
  j["ranks"] = ranks;
  j["seeds"] = seeds;
  j["tau"] = tau;
  j["r_c"] = r_c ? nlohmann::ordered_json(*r_c) : nlohmann::ordered_json(nullptr);
  j["r_c_found"] = r_c.has_value();
  j["best_invalid_fraction"] = best_invalid_fraction;
  auto& curves = j["curves"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    curves.push_back({{"R", e.rank},
                      {"seed", e.seed},
                      {"valid_fraction", e.valid_fraction},
                      {"invalid_pairs", e.invalid_pairs},
                      {"dbar", e.dbar ? nlohmann::ordered_json(*e.dbar)
                                      : nlohmann::ordered_json(nullptr)},
                      {"error", e.frobenius_error},
                      {"rrssq", e.rrssq},
                      {"bic", e.bic},
                      {"iterations", e.iterations},
                      {"converged", e.converged}});
  }
  auto& summary = j["summary"] = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    summary.push_back({{"R", s.rank},
                       {"median_invalid_fraction", s.median_invalid_fraction},
                       {"mean_dbar", s.mean_dbar ? nlohmann::ordered_json(*s.mean_dbar)
                                                 : nlohmann::ordered_json(nullptr)},
                       {"best_error", s.best_error},
                       {"best_rrssq", s.best_rrssq},
                       {"bic", s.bic}});
  }
  return j;
}

std::string RankScanReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "R,seed,valid_fraction,dbar,error,rrssq,bic1,bic2,bic3\n";
  for (const auto& e : entries) {
    os << e.rank << ',' << e.seed << ',' << e.valid_fraction << ',';
    if (e.dbar) os << *e.dbar;
    os << ',' << e.frobenius_error << ',' << e.rrssq << ',' << e.bic[0] << ','
       << e.bic[1] << ',' << e.bic[2] << '\n';
  }
  return os.str();
}

RankScanReport scan_ranks(const DataMatrix& m, const RankScanOptions& opts,
                          Direction direction) {
  const Eigen::Index limit = std::min(m.rows(), m.cols());
  if (opts.r_min < 1 || opts.r_max < opts.r_min || opts.r_max > limit) {
    std::ostringstream os;
    os << "rank range [" << opts.r_min << ", " << opts.r_max
       << "] must lie within [1, " << limit << "]";
    throw ParameterError(os.str());
  }
  if (!(opts.tau >= 0.0 && opts.tau < 1.0)) {
    throw ParameterError("tau must lie in [0, 1)");
  }
  if (opts.seeds.empty()) throw ParameterError("at least one seed is required");

  RankScanReport report;
  report.direction = direction;
  report.seeds = opts.seeds;
  report.tau = opts.tau;
  report.loss = opts.loss;
  for (int r = opts.r_min; r <= opts.r_max; ++r) report.ranks.push_back(r);

  const std::size_t n_seeds = opts.seeds.size();
  report.entries.resize(report.ranks.size() * n_seeds);
  parallel_for(report.entries.size(), opts.threads, [&](std::size_t k) {
    RankScanEntry& e = report.entries[k];
    e.rank = report.ranks[k / n_seeds];
    e.seed = opts.seeds[k % n_seeds];
    const Factorization f = factorize(m, e.rank, opts.loss, e.seed, opts.solver);
    const Matrix p_hat = f.reconstruct();
    const PccModel pcc = derive_pcc(m.values(), f.basis, f.weights);
    const PredictabilityCount c = predictability_check(pcc, direction);
    e.invalid_pairs = c.invalid;
    e.valid_fraction = c.valid_fraction();
    if (e.rank >= 2) e.dbar = mean_internal_distance(f.basis);
    e.frobenius_error = frobenius_error(m.values(), p_hat);
    e.rrssq = rrssq(m.values(), p_hat);
    for (int v = 0; v < 3; ++v) {
      e.bic[v] = bic_score(m.rows(), m.cols(), e.rank, e.frobenius_error,
                           static_cast<BicVariant>(v));
    }
    e.iterations = f.iterations();
    e.converged = f.converged;
  });

  for (std::size_t ri = 0; ri < report.ranks.size(); ++ri) {
    RankSummary s;
    s.rank = report.ranks[ri];
    std::vector<double> invalid;
    double dbar_sum = 0.0;
    const RankScanEntry* best = nullptr;
    for (std::size_t k = 0; k < n_seeds; ++k) {
      const RankScanEntry& e = report.entries[ri * n_seeds + k];
      invalid.push_back(1.0 - e.valid_fraction);
      if (e.dbar) dbar_sum += *e.dbar;
      if (!best || e.frobenius_error < best->frobenius_error) best = &e;
    }
    s.median_invalid_fraction = summarize(invalid).median;
    if (s.rank >= 2) s.mean_dbar = dbar_sum / static_cast<double>(n_seeds);
    s.best_error = best->frobenius_error;
    s.best_rrssq = best->rrssq;
    s.bic = best->bic;
    report.best_invalid_fraction =
        std::min(report.best_invalid_fraction, s.median_invalid_fraction);
    if (!report.r_c && s.median_invalid_fraction <= opts.tau) report.r_c = s.rank;
    report.summaries.push_back(s);
  }
  return report;
}

RankScanReport estimate_rc(const DataMatrix& m, const RankScanOptions& opts) {
  return scan_ranks(m, opts, Direction::primal);
}

RankScanReport estimate_rc_dual(const DataMatrix& m, const RankScanOptions& opts) {
  return scan_ranks(m, opts, Direction::dual);
}

std::vector<int> bic_local_minima(const RankScanReport& report,
                                  BicVariant variant) {
  std::vector<int> minima;
  const auto v = static_cast<std::size_t>(variant);
  const auto& s = report.summaries;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    if (s[k].bic[v] < s[k - 1].bic[v] && s[k].bic[v] < s[k + 1].bic[v]) {
      minima.push_back(s[k].rank);
    }
  }
  return minima;
}

}  // namespace pccnmf
