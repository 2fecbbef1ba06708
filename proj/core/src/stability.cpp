#include "pccnmf/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pccnmf/error.hpp"

namespace pccnmf {

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ParameterError("cosine distance: vectors differ in length");
  }
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  return std::clamp(1.0 - ab / std::sqrt(aa * bb), 0.0, 2.0);
}

double cosine_distance(const Vector& a, const Vector& b) {
  return cosine_distance(std::span<const double>(a.data(), a.size()),
                         std::span<const double>(b.data(), b.size()));
}

Matrix cosine_distance_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ParameterError("cosine distance matrix: row counts differ");
  }
  const Vector na = a.colwise().norm().transpose();
  const Vector nb = b.colwise().norm().transpose();
  const Matrix dots = a.transpose() * b;
  Matrix d(a.cols(), b.cols());
  for (Eigen::Index l = 0; l < b.cols(); ++l) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      d(k, l) = (na(k) == 0.0 || nb(l) == 0.0)
                    ? 1.0
                    : std::clamp(1.0 - dots(k, l) / (na(k) * nb(l)), 0.0, 2.0);
    }
  }
  return d;
}

double max_pairwise_distance(const Matrix& m) {
  const Matrix d = cosine_distance_matrix(m, m);
  double worst = 0.0;
  for (Eigen::Index l = 0; l < d.cols(); ++l) {
    for (Eigen::Index k = 0; k < l; ++k) worst = std::max(worst, d(k, l));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Assignment

namespace {

// Shortest augmenting path Hungarian method with row/column potentials,
// 1-based internally. Returns row -> column and the potentials.
struct HungarianSolution {
  std::vector<int> row_to_col;
  std::vector<double> u;
  std::vector<double> v;
};

HungarianSolution hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianSolution s;
  s.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) s.row_to_col[p[j] - 1] = j - 1;
  }
  s.u.assign(u.begin() + 1, u.end());
  s.v.assign(v.begin() + 1, v.end());
  return s;
}

// Finds an alternating path that frees `target_col` for row `row` inside the
// tight-edge graph, moving rows only through unlocked columns.
bool reroute(int row, int target_col, const std::vector<std::vector<char>>& tight,
             std::vector<int>& row_to_col, std::vector<int>& col_to_row,
             const std::vector<char>& locked_col, std::vector<char>& seen) {
  const int n = static_cast<int>(row_to_col.size());
  for (int c = 0; c < n; ++c) {
    if (!tight[row][c] || locked_col[c] || seen[c]) continue;
    seen[c] = 1;
    if (c == target_col ||
        reroute(col_to_row[c], target_col, tight, row_to_col, col_to_row,
                locked_col, seen)) {
      row_to_col[row] = c;
      col_to_row[c] = row;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<int> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) {
    throw ParameterError("assignment requires a square cost matrix");
  }
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};
  if (!cost.allFinite()) {
    throw ParameterError("assignment costs must be finite");
  }
  HungarianSolution sol = hungarian(cost);

  // Every optimal assignment is a perfect matching on edges with zero
  // reduced cost. Walk rows in order and pin each to its smallest tight
  // column that still admits a perfect matching of the remainder.
  const double eps = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff());
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      tight[r][c] = std::abs(cost(r, c) - sol.u[r] - sol.v[c]) <= eps;
    }
    tight[r][sol.row_to_col[r]] = 1;
  }
  std::vector<int> row_to_col = sol.row_to_col;
  std::vector<int> col_to_row(n);
  for (int r = 0; r < n; ++r) col_to_row[row_to_col[r]] = r;
  std::vector<char> locked_col(n, 0);

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!tight[r][c] || locked_col[c]) continue;
      if (row_to_col[r] == c) break;
      // Tentatively give c to r; the displaced row must reach r's old column.
      const int displaced = col_to_row[c];
      const int freed = row_to_col[r];
      std::vector<int> trial_rc = row_to_col;
      std::vector<int> trial_cr = col_to_row;
      std::vector<char> blocked = locked_col;
      blocked[c] = 1;
      std::vector<char> seen(n, 0);
      trial_rc[r] = c;
      trial_cr[c] = r;
      trial_cr[freed] = -1;
      if (reroute(displaced, freed, tight, trial_rc, trial_cr, blocked, seen)) {
        row_to_col = std::move(trial_rc);
        col_to_row = std::move(trial_cr);
        break;
      }
    }
    locked_col[row_to_col[r]] = 1;
  }
  return row_to_col;
}

DistanceStats summarize(std::span<const double> values) {
  DistanceStats s;
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
           static_cast<double>(sorted.size());
  const std::size_t h = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return s;
}

Matching match_bases(const Matrix& b1, const Matrix& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols()) {
    throw ParameterError("match_bases: basis sets differ in shape");
  }
  const Matrix cost = cosine_distance_matrix(b1, b2);
  Matching m;
  m.assignment = solve_assignment(cost);
  m.distances.reserve(m.assignment.size());
  for (std::size_t a = 0; a < m.assignment.size(); ++a) {
    const double d = cost(static_cast<Eigen::Index>(a), m.assignment[a]);
    m.distances.push_back(d);
    m.total += d;
  }
  m.stats = summarize(m.distances);
  return m;
}

std::vector<HistogramBin> distance_histogram(std::span<const double> distances) {
  constexpr int kBins = 20;
  std::vector<HistogramBin> bins(kBins + 1);
  for (int k = 0; k < kBins; ++k) {
    bins[k].lo = static_cast<double>(k) / kBins;
    bins[k].hi = static_cast<double>(k + 1) / kBins;
  }
  bins[kBins].lo = 1.0;
  bins[kBins].hi = 2.0;
  for (double d : distances) {
    int k = d > 1.0 ? kBins : std::min(kBins - 1, static_cast<int>(d * kBins));
    ++bins[std::max(k, 0)].count;
  }
  for (auto& b : bins) {
    b.pct = distances.empty() ? 0.0 : 100.0 * b.count / distances.size();
  }
  return bins;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,count,pct\n";
  for (const auto& b : bins) {
    os << b.lo << ',' << b.hi << ',' << b.count << ',' << b.pct << '\n';
  }
  return os.str();
}

nlohmann::ordered_json to_json(const Matching& matching) {
  nlohmann::ordered_json j;
  j["assignment"] = matching.assignment;
  j["distances"] = matching.distances;
  j["total"] = matching.total;
  j["stats"] = {{"mean", matching.stats.mean},
                {"median", matching.stats.median},
                {"max", matching.stats.max},
                {"min", matching.stats.min}};
  return j;
}

StabilityResult stability_experiment(const DataMatrix& m,
                                     const StabilityOptions& opts) {
  Factorization fa;
  Factorization fb;
  nlohmann::ordered_json params;
  params["rank"] = opts.rank;
  params["loss"] = to_string(opts.loss);
  params["seed_a"] = opts.seed_a;
  params["seed_b"] = opts.seed_b;

  if (opts.mode == StabilityMode::noise_split) {
    if (m.cols() % 2 != 0) {
      throw ParameterError("noise_split needs an even number of images");
    }
    const Eigen::Index half = m.cols() / 2;
    const DataMatrix first(m.values().leftCols(half), m.scale(), m.pixel_shape());
    const DataMatrix second(m.values().rightCols(half), m.scale(), m.pixel_shape());
    const DataMatrix noisy = apply_flip_noise(second, opts.xi, opts.seed_b);
    fa = factorize(first, opts.rank, opts.loss, opts.seed_a, opts.solver);
    fb = factorize(noisy, opts.rank, opts.loss, opts.seed_a, opts.solver);
    params["mode"] = "noise_split";
    params["xi"] = opts.xi;
  } else {
    fa = factorize(m, opts.rank, opts.loss, opts.seed_a, opts.solver);
    fb = factorize(m, opts.rank, opts.loss, opts.seed_b, opts.solver);
    params["mode"] = "seed_pair";
  }

  StabilityResult result;
  result.matching = match_bases(fa.basis, fb.basis);
  result.max_image_distance = max_pairwise_distance(m.values());
  result.report["parameters"] = params;
  result.report["matching"] = to_json(result.matching);
  result.report["max_image_distance"] = result.max_image_distance;
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& b : distance_histogram(result.matching.distances)) {
    hist.push_back({{"bin_lo", b.lo}, {"bin_hi", b.hi}, {"count", b.count},
                    {"pct", b.pct}});
  }
  result.report["histogram"] = hist;
  return result;
}

}  // namespace pccnmf
