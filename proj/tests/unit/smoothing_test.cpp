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
#include <memory>
#include <random>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "auditvotes/error.hpp"
#include "auditvotes/md5.hpp"
#include "auditvotes/rng.hpp"
#include "auditvotes/smoothing.hpp"

namespace auditvotes {
namespace {

std::shared_ptr<const FeatureMatrix> EmptyFeatures(NodeId n) {
  return std::make_shared<const FeatureMatrix>(n, 1);
}

SparseGraph Ring(NodeId n) {
  std::vector<Edge> e;
  for (NodeId v = 0; v < n; ++v) e.push_back({v, static_cast<NodeId>((v + 1) % n)});
  return SparseGraph(n, e, EmptyFeatures(n));
}

bool SameEdges(const SparseGraph& a, const SparseGraph& b) {
  return std::equal(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end());
}

TEST(Md5Test, Rfc1321Vectors) {
  EXPECT_EQ(Md5Hex(""), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(Md5Hex("a"), "0cc175b9c0f1b6a831c399e269772661");
  EXPECT_EQ(Md5Hex("abc"), "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(Md5Hex("message digest"), "f96b697d7cb7938d525a2f31aaf161d0");
  EXPECT_EQ(Md5Hex("abcdefghijklmnopqrstuvwxyz"), "c3fcd3d76192e4007dfb496cca67e13b");
  EXPECT_EQ(Md5Hex("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"),
            "d174ab98d277d9f5a5611c2c9f419d9f");
  EXPECT_EQ(Md5Hex("1234567890123456789012345678901234567890123456789012345678901234567890"
                   "1234567890"),
            "57edf4a22be3c955ac49da2e2107b67a");
}

TEST(Md5Test, DigestModIsBigEndian) {
  Md5Digest d{};
  d[15] = 7;
  EXPECT_EQ(DigestMod(d, 5), 2u);
  Md5Digest e{};
  e[14] = 1;  // 256
  EXPECT_EQ(DigestMod(e, 1000), 256u);
  EXPECT_EQ(DigestMod(Md5(""), 1), 0u);
  // 0xd41d8cd98f00b204e9800998ecf8427e mod 97, by Horner's rule over bytes.
  const Md5Digest empty = Md5("");
  std::uint64_t horner = 0;
  for (std::uint8_t b : empty) horner = (horner * 256 + b) % 97;
  EXPECT_EQ(DigestMod(empty, 97), horner);
}

TEST(SparseNoiseTest, ZeroNoiseIsIdentity) {
  const SparseGraph g = Ring(20);
  const SparseGraph s = SampleSparseNoise(g, {0.0, 0.0, 1}, 3);
  EXPECT_TRUE(SameEdges(g, s));
}

TEST(SparseNoiseTest, FullDeletionEmptiesGraph) {
  const SparseGraph s = SampleSparseNoise(Ring(20), {0.0, 1.0, 1}, 0);
  EXPECT_EQ(s.num_edges(), 0);
}

TEST(SparseNoiseTest, FullAdditionCompletesGraph) {
  const SparseGraph s = SampleSparseNoise(Ring(9), {1.0, 0.0, 1}, 0);
  EXPECT_EQ(s.num_edges(), PairCount(9));
}

TEST(SparseNoiseTest, SinglePairPresenceRate) {
  const SparseGraph g(2, {}, EmptyFeatures(2));
  const SparseNoiseConfig cfg{0.2, 0.0, 77};
  int present = 0;
  constexpr int kSamples = 100'000;
  for (int i = 0; i < kSamples; ++i) present += SampleSparseNoise(g, cfg, i).num_edges();
  EXPECT_NEAR(static_cast<double>(present) / kSamples, 0.2, 0.004);
}

TEST(SparseNoiseTest, DeterministicPerSampleIndex) {
  const SparseGraph g = Ring(50);
  const SparseNoiseConfig cfg{0.1, 0.3, 5};
  EXPECT_TRUE(SameEdges(SampleSparseNoise(g, cfg, 4), SampleSparseNoise(g, cfg, 4)));
  EXPECT_FALSE(SameEdges(SampleSparseNoise(g, cfg, 4), SampleSparseNoise(g, cfg, 5)));
}

TEST(SparseNoiseTest, ExpectedEdgeCountWithinThreeStandardErrors) {
  const SparseGraph g = Ring(60);
  const SparseNoiseConfig cfg{0.05, 0.4, 9};
  const double e = static_cast<double>(g.num_edges());
  const double absent = static_cast<double>(PairCount(60)) - e;
  const double mean = e * (1 - cfg.p_minus) + absent * cfg.p_plus;
  const double var = e * cfg.p_minus * (1 - cfg.p_minus) + absent * cfg.p_plus * (1 - cfg.p_plus);
  constexpr int kSamples = 1000;
  double total = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const SparseGraph s = SampleSparseNoise(g, cfg, i);
    for (const Edge& x : s.edges()) ASSERT_LT(x.u, x.v);
    total += static_cast<double>(s.num_edges());
  }
  EXPECT_NEAR(total / kSamples, mean, 3.0 * std::sqrt(var / kSamples));
}

TEST(SparseNoiseTest, EveryAbsentPairIsReachable) {
  // Addition marginals are uniform over absent pairs.
  const SparseGraph g = Ring(8);
  const SparseNoiseConfig cfg{0.3, 0.0, 13};
  std::vector<int> hits(static_cast<std::size_t>(PairCount(8)), 0);
  constexpr int kSamples = 20'000;
  for (int i = 0; i < kSamples; ++i) {
    const SparseGraph sample = SampleSparseNoise(g, cfg, i);
    for (const Edge& e : sample.edges()) ++hits[PairIndex(e.u, e.v, 8)];
  }
  for (NodeId u = 0; u < 8; ++u) {
    for (NodeId v = u + 1; v < 8; ++v) {
      const double rate = static_cast<double>(hits[PairIndex(u, v, 8)]) / kSamples;
      if (g.HasEdge(u, v)) {
        EXPECT_EQ(rate, 1.0);
      } else {
        EXPECT_NEAR(rate, 0.3, 0.015) << u << "," << v;
      }
    }
  }
}

TEST(SparseNoiseTest, RejectsInvalidProbabilities) {
  EXPECT_THROW(SampleSparseNoise(Ring(4), {1.5, 0.0, 0}, 0), ConfigError);
}

TEST(HashPartitionTest, SingleGroupIsIdentity) {
  const SparseGraph g = Ring(30);
  const auto parts = HashPartition(g, {1, "md5"}, IdMap::Identity(30));
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_TRUE(SameEdges(parts[0], g));
}

TEST(HashPartitionTest, GroupIsOrientationFreeAndStable) {
  EXPECT_EQ(EdgeGroup("12", "7", 13), EdgeGroup("7", "12", 13));
  EXPECT_EQ(EdgeGroup("alpha", "beta", 29), EdgeGroup("alpha", "beta", 29));
  // "12" < "7" lexicographically, so the digest is of "127".
  EXPECT_EQ(EdgeGroup("12", "7", 13), static_cast<int>(DigestMod(Md5("127"), 13)));
}

TEST(HashPartitionTest, GroupsAreDisjointAndCoverEdges) {
  const SparseGraph g = Ring(200);
  const auto parts = HashPartition(g, {7, "md5"}, IdMap::Identity(200));
  std::set<Edge> seen;
  std::int64_t total = 0;
  for (const SparseGraph& p : parts) {
    total += p.num_edges();
    for (const Edge& e : p.edges()) EXPECT_TRUE(seen.insert(e).second);
  }
  EXPECT_EQ(total, g.num_edges());
}

TEST(HashPartitionTest, ChiSquareUniformity) {
  Rng rng(2024);
  std::uniform_int_distribution<int> node(0, 99'999);
  constexpr int kGroups = 16;
  constexpr int kEdges = 10'000;
  std::vector<int> counts(kGroups, 0);
  for (int i = 0; i < kEdges; ++i) {
    ++counts[EdgeGroup(std::to_string(node(rng)), std::to_string(node(rng)), kGroups)];
  }
  const double expected = static_cast<double>(kEdges) / kGroups;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(kGroups - 1);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001);
}

TEST(GaussianNoiseTest, MomentsAndDeterminism) {
  const GaussianNoiseConfig cfg{1.0, 31};
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  constexpr int kSamples = 100'000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < kSamples; ++i) {
    const Eigen::VectorXd y = SampleGaussianNoise(x, cfg, i);
    sum += y;
    sq += y.cwiseProduct(y);
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / kSamples;
    EXPECT_NEAR(mean, 0.0, 0.013);
    EXPECT_NEAR(sq[k] / kSamples - mean * mean, 1.0, 0.02);
  }
  EXPECT_EQ(SampleGaussianNoise(x, cfg, 9), SampleGaussianNoise(x, cfg, 9));
  EXPECT_THROW(SampleGaussianNoise(x, {0.0, 1}, 0), ConfigError);
}

}  // namespace
}  // namespace auditvotes
