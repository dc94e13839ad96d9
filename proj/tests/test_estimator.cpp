#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "blockshrink/blockshrink.hpp"
#include "checks.hpp"

using namespace blockshrink;

namespace {

const WaveletBasis& haar() { return checks::cached_basis(WaveletFamily::haar); }

struct GridOracle {
  long long L;
  int j1, j2;
};

// Same formulas evaluated in long double.
GridOracle oracle_grid(std::size_t n, long double p) {
  const long double ln_n = std::log(static_cast<long double>(n));
  return {static_cast<long long>(std::floor(std::pow(ln_n, p / 2))),
          static_cast<int>(std::floor(p / 2 * std::log2(ln_n))),
          static_cast<int>(std::floor(0.5L * std::log2(static_cast<long double>(n) / ln_n)))};
}

}  // namespace

TEST(BlockGrid, WorkedExamples) {
  const auto g = block_grid(1024, 2.0, 0);
  EXPECT_EQ(g.L, 6);
  EXPECT_EQ(g.j1, 2);
  EXPECT_EQ(g.j2, 3);
  ASSERT_EQ(g.level(3).size(), 2u);
  EXPECT_EQ(g.level(3)[0].begin, 0);
  EXPECT_EQ(g.level(3)[0].end, 6);
  EXPECT_EQ(g.level(3)[1].begin, 6);
  EXPECT_EQ(g.level(3)[1].end, 8);

  const auto g4 = block_grid(1024, 4.0, 0);
  EXPECT_EQ(g4.raw_j1, 5);
  EXPECT_EQ(g4.j2, 3);
  EXPECT_EQ(g4.j1, 3);
  EXPECT_TRUE(g4.j1_clamped_to_j2);

  const auto big = block_grid(std::size_t{1} << 20, 2.0, 0);
  EXPECT_EQ(big.j2, 8);
  EXPECT_EQ(big.L, 13);
}

TEST(BlockGrid, AgreesWithLongDoubleOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(16, 5'000'000);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = pick(rng);
    for (long double p : {2.0L, 2.5L, 3.0L, 4.0L, 6.0L}) {
      const auto o = oracle_grid(n, p);
      const auto g = block_grid(n, static_cast<double>(p), 0);
      ASSERT_EQ(g.L, std::max(1LL, o.L)) << n << " " << static_cast<double>(p);
      ASSERT_EQ(g.raw_j1, o.j1) << n;
      ASSERT_EQ(g.raw_j2, o.j2) << n;
    }
  }
}

TEST(BlockGrid, ClampsAndErrors) {
  const auto g = block_grid(4096, 2.0, 3);  // raw j1 = 3 already
  EXPECT_EQ(g.j1, 3);
  const auto raised = block_grid(1024, 2.0, 3);  // raw j1 = 2 < tau = 3 = j2
  EXPECT_EQ(raised.j1, 3);
  EXPECT_TRUE(raised.j1_raised_to_tau);
  EXPECT_THROW(block_grid(15, 2.0, 0), std::invalid_argument);
  EXPECT_THROW(block_grid(1024, 1.5, 0), std::invalid_argument);
  EXPECT_THROW(block_grid(100, 2.0, 3), std::domain_error);
  EXPECT_THROW((void)g.block(3, 0), std::out_of_range);
  EXPECT_THROW((void)g.level(9), std::out_of_range);
}

TEST(EmpiricalCoefficients, SingleObservation) {
  Sample s;
  s.n = 1;
  s.x = {0.25};
  s.y = {2.0};
  const auto b = empirical_detail(s, DesignDensity::uniform(), haar(), 0, 0, 1);
  EXPECT_DOUBLE_EQ(b[0], 2.0);
}

TEST(EmpiricalCoefficients, DensityWeighting) {
  // g(0.25) = 0.75 + 0.125 under a 0.5 tilt, so the single term is 2 / 0.875
  Sample s;
  s.n = 1;
  s.x = {0.25};
  s.y = {2.0};
  const auto b = empirical_detail(s, DesignDensity::linear_tilt(0.5), haar(), 0, 0, 1);
  EXPECT_DOUBLE_EQ(b[0], 2.0 / 0.875);
}

// E[c g^{-1} psi_{j,k}(X)] = c * integral of psi = 0.
TEST(EmpiricalCoefficients, UnbiasedForConstantSignal) {
  constexpr int reps = 10000;
  constexpr std::size_t n = 256;
  const auto grid = block_grid(n, 2.0, 0);
  const int j = grid.j2;
  std::vector<std::vector<double>> draws(std::size_t{1} << j);
  for (int r = 0; r < reps; ++r) {
    const auto s = generate_sample([](double) { return 3.0; }, DesignDensity::uniform(), n,
                                   derive_seed(101, static_cast<std::uint64_t>(r)), NoiseModel::none);
    const auto emp = empirical_coefficients(s, DesignDensity::uniform(), haar(), grid);
    for (std::size_t k = 0; k < draws.size(); ++k) draws[k].push_back(emp.level(j)[k]);
  }
  for (std::size_t k = 0; k < draws.size(); ++k) {
    double m = 0, v = 0;
    for (double x : draws[k]) m += x;
    m /= reps;
    for (double x : draws[k]) v += (x - m) * (x - m);
    const double se = std::sqrt(v / (reps - 1) / reps);
    EXPECT_LE(std::fabs(m), 3 * se) << "k=" << k;
  }
}

TEST(EmpiricalCoefficients, OracleEquivalenceTiltedDesign) {
  const auto rep = checks::oracle_equivalence(DesignDensity::linear_tilt(0.5), haar(), 100000, 4, 6061);
  EXPECT_EQ(rep.outside, 0u) << "worst " << rep.worst_label << " at " << rep.worst_z << " SE";
  EXPECT_GE(rep.coefficients, 31u);
}

// z = 0 and f a finite wavelet series: RMS coefficient error decays like n^{-1/2}.
TEST(EmpiricalCoefficients, NoiselessConsistencyRate) {
  auto tree = CoefficientTree::zeros(0, 3);
  tree.alpha[0] = 0.5;
  tree.detail(1, 0) = 1.0;
  tree.detail(2, 3) = -0.7;
  tree.detail(3, 5) = 0.4;
  const auto f = [&](double x) { return series_value(haar(), tree, x); };
  std::vector<std::pair<double, double>> curve;
  for (std::size_t n : {1024u, 4096u, 16384u, 65536u}) {
    double ss = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < 40; ++r) {
      const auto s = generate_sample(f, DesignDensity::linear_tilt(-0.8), n, derive_seed(5, n, r), NoiseModel::none);
      for (int j = 0; j <= 4; ++j) {
        const auto est = empirical_detail(s, DesignDensity::linear_tilt(-0.8), haar(), j, 0, std::int64_t{1} << j);
        for (std::size_t k = 0; k < est.size(); ++k) {
          const double truth = j <= 3 ? tree.detail(j, static_cast<std::int64_t>(k)) : 0.0;
          ss += (est[k] - truth) * (est[k] - truth);
          ++count;
        }
      }
    }
    curve.emplace_back(static_cast<double>(n), std::sqrt(ss / count));
  }
  EXPECT_NEAR(fit_rate(curve).slope, -0.5, 0.1);
}

TEST(BlockStatistic, Examples) {
  const double a[] = {3.0, 4.0};
  EXPECT_NEAR(block_statistic(a, 2.0), std::sqrt(12.5), 1e-15);
  const double z[] = {0.0, 0.0, 0.0};
  EXPECT_EQ(block_statistic(z, 2.0), 0.0);
  EXPECT_EQ(block_statistic(z, 3.5), 0.0);
  for (double p : {2.0, 3.0, 7.5}) {
    const double c[] = {-1.25};
    EXPECT_NEAR(block_statistic(c, p), 1.25, 1e-15);
  }
  EXPECT_THROW(block_statistic(std::span<const double>{}, 2.0), std::invalid_argument);
}

TEST(BlockStatistic, RaggedBlockUsesOwnSize) {
  const auto g = block_grid(1024, 2.0, 0);
  std::vector<double> level(8, 0.0);
  level[6] = 1.0;
  level[7] = 1.0;
  const auto& last = g.level(3)[1];
  const auto stat = block_statistic(std::span<const double>(level).subspan(last.begin, last.size()), 2.0);
  EXPECT_DOUBLE_EQ(stat, 1.0);  // not sqrt(2/6)
}

TEST(Blockshrink, DegenerateConstants) {
  const auto s = generate_sample([](double t) { return eval_signal(NamedSignal::bumps, t); },
                                 DesignDensity::uniform(), 2048, 4);
  const auto emp = empirical_coefficients(s, DesignDensity::uniform(), haar(), block_grid(2048, 2.0, 0));
  const auto all = blockshrink::blockshrink(s, DesignDensity::uniform(), haar(), 2.0, 0.0);
  EXPECT_TRUE(checks::same_tree(all.tree, emp));
  const auto none = blockshrink::blockshrink(s, DesignDensity::uniform(), haar(), 2.0, 1e9);
  EXPECT_EQ(none.tree.alpha, emp.alpha);
  for (const auto& lv : none.tree.beta) {
    for (double v : lv) EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(blockshrink::blockshrink(s, DesignDensity::uniform(), haar(), 2.0, -1.0), std::invalid_argument);
}

// The dominant block of a narrow bump is kept every time and blocks with no
// signal are killed in at least 90% of replications.
TEST(Blockshrink, SingleBumpDetection) {
  constexpr std::size_t n = 4096;
  const auto grid = block_grid(n, 2.0, haar().tau());
  auto f = [](double t) { return eval_signal(NamedSignal::single_bump, t); };
  const auto truth = exact_coefficients(haar(), tabulate(f, std::size_t{1} << 20), grid.j1, grid.j2);
  int dom_j = grid.j1;
  std::size_t dom_b = 0;
  double dom_stat = -1.0;
  std::vector<std::pair<int, std::size_t>> empty_blocks;
  for (int j = grid.j1; j <= grid.j2; ++j) {
    for (std::size_t b = 0; b < grid.level(j).size(); ++b) {
      const auto& r = grid.level(j)[b];
      const double st = block_statistic(truth.level(j).subspan(r.begin, r.size()), 2.0);
      if (st > dom_stat) {
        dom_stat = st;
        dom_j = j;
        dom_b = b;
      }
      if (st < 1e-9) empty_blocks.emplace_back(j, b);
    }
  }
  ASSERT_FALSE(empty_blocks.empty());
  int dominant_kept = 0, noise_killed = 0, noise_total = 0;
  for (int r = 0; r < 100; ++r) {
    const auto s = generate_sample(f, DesignDensity::uniform(), n, derive_seed(77, r));
    const auto est = blockshrink::blockshrink(s, DesignDensity::uniform(), haar(), 2.0, 4.0);
    dominant_kept += est.kept_blocks[dom_j - grid.j1][dom_b];
    for (const auto& [j, b] : empty_blocks) {
      noise_killed += !est.kept_blocks[j - grid.j1][b];
      ++noise_total;
    }
  }
  EXPECT_EQ(dominant_kept, 100);
  EXPECT_GE(noise_killed, 0.9 * noise_total);
}

TEST(TermThreshold, Definitions) {
  const auto grid = block_grid(1024, 2.0, 0);
  const double t = term_threshold_level(1024, std::numbers::sqrt2);
  EXPECT_NEAR(t, std::sqrt(2 * std::log(1024.0) / 1024), 1e-15);
  auto emp = CoefficientTree::zeros(grid.j1, grid.j2);
  emp.alpha = {0.1, -0.2, 0.3, 0.4};
  emp.detail(2, 0) = t + 0.25;
  emp.detail(2, 1) = -(t + 0.5);
  emp.detail(3, 4) = 0.5 * t;
  emp.detail(3, 5) = t;

  const auto soft = apply_term_threshold(emp, grid, ThresholdRule::soft, std::numbers::sqrt2, WaveletFamily::haar);
  EXPECT_NEAR(soft.tree.detail(2, 0), 0.25, 1e-15);
  EXPECT_NEAR(soft.tree.detail(2, 1), -0.5, 1e-15);
  EXPECT_EQ(soft.tree.detail(3, 4), 0.0);
  EXPECT_EQ(soft.tree.alpha, emp.alpha);

  const auto hard = apply_term_threshold(emp, grid, ThresholdRule::hard, std::numbers::sqrt2, WaveletFamily::haar);
  EXPECT_EQ(hard.tree.detail(2, 0), emp.detail(2, 0));
  EXPECT_EQ(hard.tree.detail(3, 4), 0.0);
  EXPECT_EQ(hard.tree.detail(3, 5), t);
  EXPECT_THROW(apply_term_threshold(emp, grid, ThresholdRule::block, 1.0, WaveletFamily::haar), std::invalid_argument);
  EXPECT_THROW(apply_term_threshold(emp, grid, ThresholdRule::hard, 0.0, WaveletFamily::haar), std::invalid_argument);
}

TEST(TermThreshold, AllBelowGivesLinearProjection) {
  const auto s = generate_sample([](double) { return 0.0; }, DesignDensity::uniform(), 4096, 12, NoiseModel::none);
  const auto est = term_threshold(s, DesignDensity::uniform(), haar(), ThresholdRule::hard, 1.0);
  for (const auto& lv : est.tree.beta) {
    for (double v : lv) EXPECT_EQ(v, 0.0);
  }
}

TEST(TermThreshold, HardDominatesSoft) {
  for (int r = 0; r < 20; ++r) {
    const auto s = generate_sample([](double t) { return eval_signal(NamedSignal::blocks, t); },
                                   DesignDensity::linear_tilt(0.3), 2048, derive_seed(9, r));
    const auto h = term_threshold(s, DesignDensity::linear_tilt(0.3), haar(), ThresholdRule::hard, 1.0);
    const auto so = term_threshold(s, DesignDensity::linear_tilt(0.3), haar(), ThresholdRule::soft, 1.0);
    for (std::size_t l = 0; l < h.tree.beta.size(); ++l) {
      for (std::size_t k = 0; k < h.tree.beta[l].size(); ++k) {
        if (so.tree.beta[l][k] != 0.0) {
          EXPECT_NE(h.tree.beta[l][k], 0.0);
        }
        EXPECT_GE(std::fabs(h.tree.beta[l][k]), std::fabs(so.tree.beta[l][k]));
      }
    }
  }
}

TEST(Properties, RandomizedEstimatorInvariants) {
  const auto rep = checks::estimator_properties(200, 8128);
  EXPECT_EQ(rep.cases, 200u);
  EXPECT_EQ(rep.failed_cases, 0u);
  for (const auto& m : rep.failures) ADD_FAILURE() << m;
}
