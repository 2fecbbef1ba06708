#include "pccnmf/denoising.hpp"

#include <algorithm>
#include <sstream>

#include "pccnmf/error.hpp"
#include "pccnmf/parallel.hpp"
#include "pccnmf/stability.hpp"

namespace pccnmf {

namespace {

void check_shapes(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ParameterError("denoising inputs differ in shape");
  }
}

Vector columnwise_distance(const Matrix& a, const Matrix& b) {
  Vector d(a.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    d(i) = cosine_distance(Vector(a.col(i)), Vector(b.col(i)));
  }
  return d;
}

}  // namespace

Vector denoise_margins(const Matrix& clean, const Matrix& noisy,
                       const Matrix& recon_noisy) {
  check_shapes(clean, noisy);
  check_shapes(clean, recon_noisy);
  return columnwise_distance(clean, noisy) - columnwise_distance(clean, recon_noisy);
}

Vector denoise_margins(const DataMatrix& clean, const DataMatrix& noisy,
                       const Factorization& f_noisy) {
  return denoise_margins(clean.values(), noisy.values(), f_noisy.reconstruct());
}

double accuracy(const Matrix& clean, const Matrix& recon) {
  check_shapes(clean, recon);
  const Eigen::Index m = clean.cols();
  // d(j, i) = D(P_j, P^_i)
  const Matrix d = cosine_distance_matrix(clean, recon);
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double own = d(i, i);
    bool unique_nearest = true;
    for (Eigen::Index j = 0; j < m && unique_nearest; ++j) {
      if (j != i && d(j, i) <= own) unique_nearest = false;
    }
    if (unique_nearest) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(m);
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw ParameterError("smoothing window must be >= 1");
  const int n = static_cast<int>(values.size());
  const int half = window / 2;
  std::vector<double> out(values.size());
  for (int k = 0; k < n; ++k) {
    const int lo = std::max(0, k - half);
    const int hi = std::min(n - 1, k + (window - 1 - half));
    double s = 0.0;
    for (int t = lo; t <= hi; ++t) s += values[t];
    out[k] = s / (hi - lo + 1);
  }
  return out;
}

DenoiseReport denoise_sweep(const DataMatrix& clean, const DataMatrix& noisy,
                            const DenoiseOptions& opts) {
  check_shapes(clean.values(), noisy.values());
  if (opts.exclusions < 0) throw ParameterError("exclusions must be >= 0");
  if (opts.seeds.empty()) throw ParameterError("at least one seed is required");
  if (opts.ranks.empty()) throw ParameterError("no ranks to scan");
  const Eigen::Index limit = std::min(clean.rows(), clean.cols());
  for (int r : opts.ranks) {
    if (r < 1 || r > limit) {
      std::ostringstream os;
      os << "rank " << r << " outside [1, " << limit << "]";
      throw ParameterError(os.str());
    }
  }

  const Matrix& c = clean.values();
  const Matrix& p = noisy.values();
  const Vector noise_distance = columnwise_distance(c, p);

  DenoiseReport report;
  report.exclusions = opts.exclusions;
  report.xi = noisy.provenance().xi;
  report.degenerate = c == p;

  const std::size_t n_seeds = opts.seeds.size();
  const std::size_t n_ranks = opts.ranks.size();
  struct Cell {
    int violations = 0;
    Vector margins;
    double ac = 0.0;
  };
  std::vector<Cell> cells(n_ranks * n_seeds);
  parallel_for(cells.size(), opts.threads, [&](std::size_t k) {
    const int rank = opts.ranks[k / n_seeds];
    const Factorization f =
        factorize(p, rank, opts.loss, opts.seeds[k % n_seeds], opts.solver);
    const Matrix recon = f.reconstruct();
    Cell& cell = cells[k];
    cell.margins = noise_distance - columnwise_distance(c, recon);
    cell.violations = static_cast<int>((cell.margins.array() <= 0.0).count());
    cell.ac = accuracy(c, recon);
  });

  std::optional<Eigen::BDCSVD<Matrix>> svd;
  if (opts.svd_baseline) svd.emplace(p, Eigen::ComputeThinU | Eigen::ComputeThinV);

  std::vector<double> ac_nmf;
  std::vector<double> ac_svd;
  for (std::size_t ri = 0; ri < n_ranks; ++ri) {
    DenoiseRow row;
    row.rank = opts.ranks[ri];
    double ac_sum = 0.0;
    const Cell* best = nullptr;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const Cell& cell = cells[ri * n_seeds + s];
      ac_sum += cell.ac;
      if (!best || cell.violations < best->violations) {
        best = &cell;
        row.best_seed = opts.seeds[s];
      }
    }
    row.violations = best->violations;
    row.margins = best->margins;
    row.qualifies = row.violations <= opts.exclusions;
    row.ac_nmf = ac_sum / static_cast<double>(n_seeds);
    ac_nmf.push_back(row.ac_nmf);
    if (svd) {
      const auto k = static_cast<Eigen::Index>(row.rank);
      const Matrix recon = svd->matrixU().leftCols(k) *
                           svd->singularValues().head(k).asDiagonal() *
                           svd->matrixV().leftCols(k).transpose();
      row.ac_svd = accuracy(c, recon);
      ac_svd.push_back(*row.ac_svd);
    }
    report.rows.push_back(std::move(row));
  }

  const std::vector<double> nmf_smooth = moving_average(ac_nmf, opts.smoothing_window);
  const std::vector<double> svd_smooth =
      svd ? moving_average(ac_svd, opts.smoothing_window) : std::vector<double>{};
  for (std::size_t ri = 0; ri < n_ranks; ++ri) {
    report.rows[ri].ac_nmf_smoothed = nmf_smooth[ri];
    if (svd) report.rows[ri].ac_svd_smoothed = svd_smooth[ri];
  }

  for (std::size_t ri = 0; ri < n_ranks; ++ri) {
    const DenoiseRow& row = report.rows[ri];
    if (!row.qualifies) continue;
    if (!report.r1) {
      report.r1 = row.rank;
      report.r2 = row.rank;
    } else if (report.r2 && ri > 0 && report.rows[ri - 1].qualifies &&
               *report.r2 == report.rows[ri - 1].rank) {
      report.r2 = row.rank;
    }
    report.r_last = row.rank;
  }
  return report;
}

DenoiseReport find_r_range(const DataMatrix& clean, const DataMatrix& noisy,
                           int r_lo, int r_hi, int exclusions,
                           const std::vector<std::uint64_t>& seeds,
                           const SolverOptions& solver, int threads) {
  if (r_lo < 1 || r_hi < r_lo) throw ParameterError("invalid rank range");
  DenoiseOptions opts;
  for (int r = r_lo; r <= r_hi; ++r) opts.ranks.push_back(r);
  opts.exclusions = exclusions;
  opts.seeds = seeds;
  opts.solver = solver;
  opts.threads = threads;
  return denoise_sweep(clean, noisy, opts);
}

DenoiseReport compare_with_svd(const DataMatrix& clean,
                               const DataMatrix& distorted,
                               const std::vector<int>& ranks,
                               const std::vector<std::uint64_t>& seeds,
                               const SolverOptions& solver, int threads) {
  DenoiseOptions opts;
  opts.ranks = ranks;
  opts.seeds = seeds;
  opts.solver = solver;
  opts.threads = threads;
  opts.svd_baseline = true;
  return denoise_sweep(clean, distorted, opts);
}

nlohmann::ordered_json DenoiseReport::to_json() const {
  using json = nlohmann::ordered_json;
  const auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  json j;
  j["r1"] = opt(r1);
  j["r2"] = opt(r2);
  j["r_last_qualifying"] = opt(r_last);
  j["exclusions"] = exclusions;
  j["xi"] = opt(xi);
  j["degenerate"] = degenerate;
  auto& arr = j["ranks"] = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"R", r.rank},
                   {"violations", r.violations},
                   {"qualifies", r.qualifies},
                   {"best_seed", r.best_seed},
                   {"ac_nmf", r.ac_nmf},
                   {"ac_svd", opt(r.ac_svd)},
                   {"ac_nmf_smoothed", r.ac_nmf_smoothed},
                   {"ac_svd_smoothed", opt(r.ac_svd_smoothed)},
                   {"min_margin", r.margins.size() ? json(r.margins.minCoeff())
                                                   : json(nullptr)}});
  }
  return j;
}

std::string DenoiseReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "R,ac_nmf,ac_svd,ac_nmf_smoothed,ac_svd_smoothed,violations\n";
  for (const auto& r : rows) {
    os << r.rank << ',' << r.ac_nmf << ',';
    if (r.ac_svd) os << *r.ac_svd;
    os << ',' << r.ac_nmf_smoothed << ',';
    if (r.ac_svd_smoothed) os << *r.ac_svd_smoothed;
    os << ',' << r.violations << '\n';
  }
  return os.str();
}

}  // namespace pccnmf
