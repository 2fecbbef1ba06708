#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "pccnmf/error.hpp"
#include "pccnmf/rank_scan.hpp"
#include "pccnmf/stability.hpp"
#include "test_support.hpp"

using namespace pccnmf;
using pccnmf::testing::brute_force_assignment;
using pccnmf::testing::cosine_oracle;
using pccnmf::testing::random_matrix;

TEST(Cosine, Examples) {
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  EXPECT_DOUBLE_EQ(cosine_distance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, Vector(-a)), 2.0);
  EXPECT_DOUBLE_EQ(cosine_distance(a, Vector::Zero(2)), 1.0);
  EXPECT_NEAR(cosine_distance(a, Vector(3.0 * a)), 0.0, 1e-15);
  EXPECT_THROW(cosine_distance(a, Vector::Ones(3)), ParameterError);
}

TEST(Cosine, MatrixMatchesOracle) {
  std::mt19937_64 gen(1);
  const Matrix a = random_matrix(7, 4, gen, -1, 1);
  const Matrix b = random_matrix(7, 5, gen, -1, 1);
  const Matrix d = cosine_distance_matrix(a, b);
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 5; ++l) {
      EXPECT_NEAR(d(k, l), cosine_oracle(a.col(k), b.col(l)), 1e-14);
    }
  }
}

TEST(Assignment, MatchesExhaustiveSearch) {
  std::mt19937_64 gen(2);
  for (int t = 0; t < 200; ++t) {
    const int n = 1 + t % 8;
    const Matrix cost = random_matrix(n, n, gen);
    const auto perm = solve_assignment(cost);
    double total = 0.0;
    for (int r = 0; r < n; ++r) total += cost(r, perm[r]);
    EXPECT_NEAR(total, brute_force_assignment(cost), 1e-12) << "n = " << n;
  }
}

TEST(Assignment, IntegerCostsWithTiesPickLexicographicSmallest) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> small(0, 2);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 5;
    Matrix cost(n, n);
    for (Eigen::Index k = 0; k < cost.size(); ++k) cost.data()[k] = small(gen);
    // Exhaustive search keeps the first minimum in lexicographic order.
    std::vector<int> best;
    const double opt = brute_force_assignment(cost, &best);
    const auto perm = solve_assignment(cost);
    double total = 0.0;
    for (int r = 0; r < n; ++r) total += cost(r, perm[r]);
    EXPECT_EQ(total, opt);
    EXPECT_EQ(perm, best);
  }
  EXPECT_EQ(solve_assignment(Matrix::Zero(4, 4)), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Assignment, RejectsBadInput) {
  EXPECT_THROW(solve_assignment(Matrix::Zero(2, 3)), ParameterError);
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_assignment(c), ParameterError);
  EXPECT_TRUE(solve_assignment(Matrix(0, 0)).empty());
}

TEST(Matching, RecoversPermutation) {
  std::mt19937_64 gen(4);
  const Matrix b1 = random_matrix(20, 6, gen);
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Matrix b2(20, 6);
  for (int k = 0; k < 6; ++k) b2.col(perm[k]) = b1.col(k) * (1.0 + k);
  const Matching m = match_bases(b1, b2);
  EXPECT_EQ(m.assignment, perm);
  EXPECT_LE(m.stats.max, 1e-14);
}

TEST(Matching, SymmetricTotal) {
  std::mt19937_64 gen(5);
  const Matrix b1 = random_matrix(10, 5, gen);
  const Matrix b2 = random_matrix(10, 5, gen);
  EXPECT_NEAR(match_bases(b1, b2).total, match_bases(b2, b1).total, 1e-12);
}

TEST(Matching, GaugeInvariant) {
  std::mt19937_64 gen(6);
  const Matrix b1 = random_matrix(10, 5, gen);
  const Matrix b2 = random_matrix(10, 5, gen);
  const Matching ref = match_bases(b1, b2);
  std::uniform_real_distribution<double> logk(-3, 3);
  Vector k1(5), k2(5);
  for (int k = 0; k < 5; ++k) {
    k1(k) = std::pow(10.0, logk(gen));
    k2(k) = std::pow(10.0, logk(gen));
  }
  const Matching scaled = match_bases(b1 * k1.asDiagonal(), b2 * k2.asDiagonal());
  EXPECT_EQ(scaled.assignment, ref.assignment);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(scaled.distances[k], ref.distances[k], 1e-12);
  EXPECT_NEAR(mean_internal_distance(b1 * k1.asDiagonal()), mean_internal_distance(b1),
              1e-12);
}

TEST(Summary, MedianOfEvenCount) {
  const std::vector<double> v{4, 1, 3, 2};
  const DistanceStats s = summarize(v);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
}

TEST(Histogram, BinsAndOverflow) {
  const std::vector<double> d{0.0, 0.04, 0.05, 0.99, 1.0, 1.5};
  const auto bins = distance_histogram(d);
  ASSERT_EQ(bins.size(), 21u);
  EXPECT_EQ(bins[0].count, 2);
  EXPECT_EQ(bins[1].count, 1);
  EXPECT_EQ(bins[19].count, 2);
  EXPECT_EQ(bins[20].count, 1);
  int total = 0;
  for (const auto& b : bins) total += b.count;
  EXPECT_EQ(total, 6);
  EXPECT_EQ(histogram_csv(bins).rfind("bin_lo,bin_hi,count,pct\n", 0), 0u);
}

TEST(Experiment, SeedPairWithSameSeedIsZero) {
  StabilityOptions opts;
  opts.rank = 5;
  opts.seed_a = 3;
  opts.seed_b = 3;
  opts.solver.max_iters = 100;
  const StabilityResult r = stability_experiment(generate_swimmer(), opts);
  EXPECT_LE(r.matching.total, 1e-12);
  EXPECT_NEAR(r.max_image_distance, 8.0 / 19.0, 1e-12);
}

TEST(Experiment, NoiseSplitNeedsEvenColumns) {
  StabilityOptions opts;
  opts.rank = 1;
  opts.mode = StabilityMode::noise_split;
  EXPECT_THROW(stability_experiment(DataMatrix(Matrix::Ones(3, 3), Scale::unit), opts),
               ParameterError);
  const DataMatrix m(Matrix::Ones(3, 4), Scale::unit);
  opts.xi = 0.0;
  const StabilityResult r = stability_experiment(m, opts);
  EXPECT_EQ(r.matching.assignment.size(), 1u);
  EXPECT_EQ(r.report["histogram"].size(), 21u);
}
