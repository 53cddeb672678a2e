// Copyright 2026 The AuditVotes Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "auditvotes/certify.hpp"
#include "auditvotes/error.hpp"
#include "auditvotes/logging.hpp"
#include "auditvotes/rng.hpp"
#include "oracles.hpp"

namespace auditvotes {
namespace {

VoteTally Tally(std::vector<std::int64_t> counts) {
  VoteTally t;
  t.counts = std::move(counts);
  t.n_valid = std::accumulate(t.counts.begin(), t.counts.end(), std::int64_t{0});
  t.n_total = t.n_valid;
  return t;
}

TEST(PoissonBinomialTest, SumsToOneAndMatchesBinomial) {
  const std::vector<double> p(7, 0.3);
  const std::vector<double> pmf = PoissonBinomialPmf(p);
  ASSERT_EQ(pmf.size(), 8u);
  EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(pmf[2], 21 * 0.09 * std::pow(0.7, 5), 1e-15);
  EXPECT_EQ(PoissonBinomialPmf({}), std::vector<double>{1.0});
  EXPECT_THROW(PoissonBinomialPmf(std::vector<double>{1.5}), BoundsError);
}

TEST(RegionTableTest, SpecExample) {
  const RegionTable t = BuildRegionTable({0.2, 0.4, 0}, 1, 1);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_NEAR(t.r[0], 0.48, 1e-15);
  EXPECT_NEAR(t.r[1], 0.44, 1e-15);
  EXPECT_NEAR(t.r[2], 0.08, 1e-15);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.r[i], t.ratio(i) * t.r_prime[i], 1e-9);
}

TEST(RegionTableTest, MatchesExhaustiveEnumeration) {
  Rng rng(21);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  for (int ra = 0; ra <= 6; ++ra) {
    for (int rd = 0; rd + ra <= 12; ++rd) {
      if (ra + rd == 0) continue;
      const SparseNoiseConfig noise{p(rng), p(rng), 0};
      const RegionTable t = BuildRegionTable(noise, ra, rd);
      const oracles::EnumeratedRegions e = oracles::EnumerateRegions(noise.p_plus, noise.p_minus, ra, rd);
      ASSERT_EQ(t.size(), e.r.size());
      for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_NEAR(t.r[i], e.r[i], 1e-10) << ra << "," << rd << " i=" << i;
        EXPECT_NEAR(t.r_prime[i], e.r_prime[i], 1e-10);
        // Every pattern in region i shares the ratio c_i.
        EXPECT_LT(oracles::RelativeError(t.ratio(i), e.min_ratio[i], 1e-300), 1e-9);
        EXPECT_LT(oracles::RelativeError(t.ratio(i), e.max_ratio[i], 1e-300), 1e-9);
      }
    }
  }
}

TEST(RegionTableTest, InvariantsUpToLargeBudgets) {
  for (const SparseNoiseConfig noise : {SparseNoiseConfig{0.2, 0.6, 0}, SparseNoiseConfig{0.7, 0.5, 0},
                                        SparseNoiseConfig{0.001, 0.9, 0}}) {
    for (int ra : {0, 7, 25, 50}) {
      for (int rd : {0, 3, 50}) {
        if (ra + rd == 0) continue;
        const RegionTable t = BuildRegionTable(noise, ra, rd);
        EXPECT_NEAR(std::accumulate(t.r.begin(), t.r.end(), 0.0), 1.0, 1e-10);
        EXPECT_NEAR(std::accumulate(t.r_prime.begin(), t.r_prime.end(), 0.0), 1.0, 1e-10);
        const double sign = noise.p_plus + noise.p_minus < 1.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
          EXPECT_GT(sign * (t.log_ratios[i + 1] - t.log_ratios[i]), 0.0);
        }
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (t.r_prime[i] > 0.0) EXPECT_NEAR(t.r[i], t.ratio(i) * t.r_prime[i], 1e-9);
        }
      }
    }
  }
}

TEST(RegionTableTest, DegenerateProbabilities) {
  // Deletion-only noise: an added edge is never present on the clean side.
  const RegionTable t = BuildRegionTable({0.0, 0.8, 0}, 2, 1);
  EXPECT_NEAR(std::accumulate(t.r.begin(), t.r.end(), 0.0), 1.0, 1e-15);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.r[i] == 0.0) EXPECT_EQ(t.log_ratios[i], -std::numeric_limits<double>::infinity());
  }
  EXPECT_THROW(BuildRegionTable({0.0, 0.0, 0}, 1, 1), ConfigError);
  EXPECT_THROW(BuildRegionTable({0.0, 1.0, 0}, 1, 1), ConfigError);
  EXPECT_THROW(BuildRegionTable({0.2, 0.2, 0}, -1, 1), BoundsError);
}

TEST(WorstCaseMarginTest, ZeroBudgetIsPlainGap) {
  const RegionTable t = BuildRegionTable({0.2, 0.6, 0}, 0, 0);
  const MarginResult m = WorstCaseMargin(t, {0.7, 0.2, 0.0});
  EXPECT_NEAR(m.mu, 0.5, 1e-15);
  EXPECT_TRUE(m.certified);
}

TEST(WorstCaseMarginTest, CertainClassifier) {
  const MarginResult m = WorstCaseMargin(BuildRegionTable({0.2, 0.4, 0}, 1, 0), {1.0, 0.0, 0.0});
  EXPECT_NEAR(m.mu, 1.0, 1e-15);
}

TEST(WorstCaseMarginTest, UnitRatioSumIsSingleRegionCase) {
  const RegionTable t = BuildRegionTable({0.3, 0.7, 0}, 3, 2);
  const MarginResult m = WorstCaseMargin(t, {0.6, 0.3, 0.0});
  EXPECT_NEAR(m.mu, 0.3, 1e-12);
}

TEST(WorstCaseMarginTest, ZeroBoundsGiveZero) {
  EXPECT_DOUBLE_EQ(WorstCaseMargin(BuildRegionTable({0.2, 0.6, 0}, 4, 4), {0.0, 0.0, 0.0}).mu, 0.0);
}

TEST(WorstCaseMarginTest, ClampsInfeasibleBoundsWithWarning) {
  std::vector<std::string> warnings;
  const LogSink prev = SetWarningSink([&](std::string_view m) { warnings.emplace_back(m); });
  const RegionTable t = BuildRegionTable({0.2, 0.6, 0}, 2, 2);
  const MarginResult m = WorstCaseMargin(t, {0.7, 0.5, 0.0});
  SetWarningSink(prev);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NEAR(m.mu, WorstCaseMargin(t, {0.7, 0.3, 0.0}).mu, 1e-15);
  EXPECT_THROW(WorstCaseMargin(t, {1.2, 0.0, 0.0}), BoundsError);
}

TEST(WorstCaseMarginTest, MatchesExactLinearProgram) {
  Rng rng(31);
  std::uniform_int_distribution<int> budget(0, 5);
  std::uniform_int_distribution<int> grid(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double pp = 0.1 * grid(rng);
    const double pm = 0.1 * grid(rng);
    const int ra = budget(rng);
    const int rd = budget(rng);
    const double pa = u(rng);
    const double pb = (1.0 - pa) * u(rng);
    const RegionTable t = BuildRegionTable({pp, pm, 0}, ra, rd);
    const double mu = WorstCaseMargin(t, {pa, pb, 0.0}).mu;
    const oracles::RationalRegions exact = oracles::EnumerateRegionsExact(pp, pm, ra, rd);
    const double want =
        static_cast<double>(oracles::ExactMargin(exact, oracles::Rational(pa), oracles::Rational(pb)));
    EXPECT_NEAR(mu, want, 1e-9) << "p+=" << pp << " p-=" << pm << " ra=" << ra << " rd=" << rd;
    EXPECT_GE(mu, -1.0);
    EXPECT_LE(mu, 1.0);
  }
}

TEST(WorstCaseMarginTest, MonotoneInBudgetsAndBounds) {
  const SparseNoiseConfig noise{0.2, 0.6, 0};
  const ProbabilityBounds b{0.8, 0.15, 0.0};
  double last = 2.0;
  for (int ra = 0; ra <= 30; ++ra) {
    const double mu = WorstCaseMargin(BuildRegionTable(noise, ra, 3), b).mu;
    EXPECT_LE(mu, last + 1e-12);
    last = mu;
  }
  last = 2.0;
  for (int rd = 0; rd <= 30; ++rd) {
    const double mu = WorstCaseMargin(BuildRegionTable(noise, 2, rd), b).mu;
    EXPECT_LE(mu, last + 1e-12);
    last = mu;
  }
  const RegionTable t = BuildRegionTable(noise, 5, 5);
  EXPECT_LE(WorstCaseMargin(t, {0.7, 0.15, 0.0}).mu, WorstCaseMargin(t, {0.8, 0.15, 0.0}).mu);
  EXPECT_LE(WorstCaseMargin(t, {0.8, 0.2, 0.0}).mu, WorstCaseMargin(t, {0.8, 0.15, 0.0}).mu);
}

TEST(CertifyNodeTest, UnanimousTallyCertifiedAtZeroBudget) {
  const NodeCertificate c = CertifyNode(Tally({10000, 0, 0}), {0.2, 0.6, 0}, 3, 0, 0);
  EXPECT_EQ(c.status, CertStatus::kCertified);
  EXPECT_EQ(c.predicted, 0);
  EXPECT_GT(c.mu, 0.99);
}

TEST(CertifyNodeTest, EmptyOrSplitTalliesAbstain) {
  EXPECT_EQ(CertifyNode(Tally({0, 0}), {0.2, 0.6, 0}, 2, 1, 1).status, CertStatus::kAbstain);
  EXPECT_EQ(CertifyNode(Tally({0, 0}), {0.2, 0.6, 0}, 2, 1, 1).predicted, -1);
  const NodeCertificate split = CertifyNode(Tally({510, 490}), {0.2, 0.6, 0}, 2, 0, 0);
  EXPECT_EQ(split.status, CertStatus::kAbstain);
  EXPECT_EQ(split.predicted, 0);
}

TEST(CertifyNodeTest, LargeBudgetNotCertified) {
  const NodeCertificate c = CertifyNode(Tally({900, 100}), {0.2, 0.6, 0}, 2, 40, 0);
  EXPECT_EQ(c.status, CertStatus::kNotCertified);
  EXPECT_LE(c.mu, 0.0);
}

std::vector<VoteTally> RandomTallies(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::int64_t> top(400, 1000);
  std::vector<VoteTally> out;
  for (int i = 0; i < count; ++i) {
    const std::int64_t a = top(rng);
    const std::int64_t b = std::uniform_int_distribution<std::int64_t>(0, 1000 - a)(rng);
    out.push_back(Tally({a, b, 1000 - a - b}));
  }
  return out;
}

TEST(CertifyGridTest, AgreesWithPerNodeCertification) {
  const std::vector<VoteTally> tallies = RandomTallies(25, 4);
  std::vector<NodeId> nodes(tallies.size());
  std::iota(nodes.begin(), nodes.end(), 0);
  const std::vector<int> labels(tallies.size(), 0);
  const SparseNoiseConfig noise{0.2, 0.6, 0};
  const CertificateGrid grid = CertifyGrid(nodes, tallies, labels, noise, 3, 4, 6);
  for (std::size_t i = 0; i < tallies.size(); ++i) {
    for (int ra = 0; ra <= 4; ++ra) {
      for (int rd = 0; rd <= 6; ++rd) {
        EXPECT_EQ(grid.Status(i, ra, rd), CertifyNode(tallies[i], noise, 3, ra, rd).status)
            << i << " @ " << ra << "," << rd;
      }
    }
  }
}

TEST(CertifyGridTest, DownwardClosedAndMonotoneCurves) {
  const std::vector<VoteTally> tallies = RandomTallies(60, 5);
  std::vector<NodeId> nodes(tallies.size());
  std::iota(nodes.begin(), nodes.end(), 0);
  std::vector<int> labels(tallies.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const CertificateGrid grid = CertifyGrid(nodes, tallies, labels, {0.1, 0.7, 0}, 3, 8, 20);
  for (std::size_t i = 0; i < tallies.size(); ++i) {
    for (int ra = 0; ra <= 8; ++ra) {
      for (int rd = 0; rd <= 20; ++rd) {
        if (grid.Status(i, ra, rd) != CertStatus::kCertified) continue;
        if (ra > 0) EXPECT_EQ(grid.Status(i, ra - 1, rd), CertStatus::kCertified);
        if (rd > 0) EXPECT_EQ(grid.Status(i, ra, rd - 1), CertStatus::kCertified);
      }
    }
  }
  double last = grid.CertifiedAccuracy(0, 0);
  EXPECT_LE(last, grid.CleanAccuracy());
  for (int rd : {5, 10, 20}) {
    EXPECT_LE(grid.CertifiedAccuracy(0, rd), last);
    last = grid.CertifiedAccuracy(0, rd);
  }
  EXPECT_THROW(grid.Status(0, 9, 0), BoundsError);
}

TEST(CertifyGridTest, ZeroGridIsCleanClassification) {
  const std::vector<VoteTally> tallies{Tally({90, 10}), Tally({50, 50}), Tally({5, 95}), Tally({0, 0})};
  const std::vector<NodeId> nodes{0, 1, 2, 3};
  const std::vector<int> labels{0, 0, 0, 1};
  const CertificateGrid grid = CertifyGrid(nodes, tallies, labels, {0.2, 0.6, 0}, 2, 0, 0);
  EXPECT_EQ(grid.Status(0, 0, 0), CertStatus::kCertified);
  EXPECT_EQ(grid.Status(1, 0, 0), CertStatus::kAbstain);
  EXPECT_EQ(grid.Status(2, 0, 0), CertStatus::kCertified);
  EXPECT_EQ(grid.Status(3, 0, 0), CertStatus::kAbstain);
  EXPECT_DOUBLE_EQ(grid.CleanAccuracy(), 0.5);  // node 1 ties toward class 0
  EXPECT_DOUBLE_EQ(grid.AbstainRate(), 0.5);
  EXPECT_DOUBLE_EQ(grid.CertifiedAccuracy(0, 0), 0.25);
}

TEST(CertifyGridTest, CsvLayout) {
  const std::vector<VoteTally> tallies{Tally({100, 0})};
  const std::vector<NodeId> nodes{3};
  const std::vector<int> labels{0, 0, 0, 1};
  const CertificateGrid grid = CertifyGrid(nodes, tallies, labels, {0.2, 0.6, 0}, 2, 1, 0);
  EXPECT_EQ(grid.rows()[0].label, 1);
  oracles::TempDir dir;
  grid.WriteCsv(dir.File("g.csv"));
  std::ifstream in(dir.File("g.csv"));
  std::stringstream ss;
  ss << in.rdbuf();
  std::string expect = "node,ra,rd,status\n3,0,0,certified\n3,1,0,";
  EXPECT_EQ(ss.str().substr(0, expect.size()), expect);
}

TEST(GaussianRadiusTest, SpecExamples) {
  const boost::math::normal_distribution<double> n;
  const double pa = boost::math::cdf(n, 1.0);
  const double pb = boost::math::cdf(n, -1.0);
  EXPECT_NEAR(GaussianRadius({pa, pb, 0.0}, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(GaussianRadius({pa, pb, 0.0}, 0.5), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(GaussianRadius({0.6, 0.6, 0.0}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(GaussianRadius({0.3, 0.6, 0.0}, 1.0), 0.0);
  EXPECT_THROW(GaussianRadius({0.6, 0.1, 0.0}, 0.0), ConfigError);
}

TEST(GnnCertTest, SpecExamples) {
  EXPECT_EQ(GnnCertCertify(Tally({10, 4})).budget, 3);
  const GnnCertResult tie = GnnCertCertify(Tally({5, 5}));
  EXPECT_EQ(tie.predicted, 0);
  EXPECT_EQ(tie.budget, 0);
  EXPECT_EQ(GnnCertCertify(Tally({6, 5})).budget, 0);
  EXPECT_EQ(GnnCertCertify(Tally({4, 10})).budget, 2);  // ties now favor class 0
  EXPECT_EQ(GnnCertCertify(Tally({7})).budget, std::numeric_limits<std::int64_t>::max());
}

TEST(GnnCertTest, MatchesExhaustiveVoteFlips) {
  // Every composition of up to 12 votes over three classes.
  for (std::int64_t total = 1; total <= 12; ++total) {
    for (std::int64_t a = 0; a <= total; ++a) {
      for (std::int64_t b = 0; a + b <= total; ++b) {
        const std::vector<std::int64_t> counts{a, b, total - a - b};
        EXPECT_EQ(GnnCertCertify(Tally(counts)).budget, oracles::MaxSafeVoteFlips(counts))
            << a << "," << b << "," << total - a - b;
      }
    }
  }
}

}  // namespace
}  // namespace auditvotes
