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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "auditvotes/error.hpp"
#include "auditvotes/logging.hpp"
#include "auditvotes/pipeline.hpp"
#include "oracles.hpp"

namespace auditvotes {
namespace {

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.seed = 17;
  c.data.per_class_labeled = 20;
  c.classifier.train.learning_rate = 1e-2;
  c.classifier.train.max_epochs = 150;
  c.classifier.train.patience = 50;
  c.classifier.train.hidden_dim = 32;
  c.classifier.train.validation_samples = 2;
  c.sparse_noise = {0.01, 0.5, 0};
  c.num_samples = 300;
  c.max_ra = 4;
  c.max_rd = 6;
  c.threads = 2;
  return c;
}

TEST(ConfigTest, IniRoundTrip) {
  ExperimentConfig c = SmallConfig();
  c.augmenter.kind = ScoreKind::kSim;
  c.filter = {FilterKind::kConfidence, 0.5};
  c.radii = {0.0, 0.125};
  oracles::TempDir dir;
  c.Save(dir.File("c.ini"));
  const ExperimentConfig d = ExperimentConfig::Load(dir.File("c.ini"));
  EXPECT_EQ(d.ToIni(), c.ToIni());
  EXPECT_EQ(d.Get("augmenter.kind"), "sim");
  EXPECT_EQ(d.Get("smoothing.p_minus"), "0.5");
  EXPECT_EQ(d.radii, c.radii);
}

TEST(ConfigTest, CommentsOverridesAndErrors) {
  oracles::TempDir dir;
  std::ofstream(dir.File("a.ini")) << "# comment\n[smoothing]\np_plus = 0.2\n; other comment\nsamples=50\n\n"
                                      "[filter]\nkind = conf\ntheta = 0.9\n";
  ExperimentConfig c = ExperimentConfig::Load(dir.File("a.ini"));
  EXPECT_DOUBLE_EQ(c.sparse_noise.p_plus, 0.2);
  EXPECT_EQ(c.num_samples, 50);
  EXPECT_EQ(c.filter.kind, FilterKind::kConfidence);
  c.Set("smoothing.samples", "70");
  EXPECT_EQ(c.num_samples, 70);
  EXPECT_THROW(c.Set("smoothing.sample", "1"), ConfigError);
  EXPECT_THROW(c.Set("smoothing.samples", "many"), ConfigError);
  EXPECT_THROW(c.Set("smoothing.bonferroni", "maybe"), ConfigError);
  std::ofstream(dir.File("b.ini")) << "[smoothing]\nwhat = 1\n";
  EXPECT_THROW(ExperimentConfig::Load(dir.File("b.ini")), ConfigError);
  EXPECT_THROW(ExperimentConfig::Load(dir.File("missing.ini")), ConfigError);
}

TEST(ConfigTest, Validation) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = SmallConfig();
  c.data.edges = "x.tsv";
  EXPECT_THROW(c.Validate(), ConfigError);
  c = SmallConfig();
  c.sparse_noise.p_plus = 1.5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = SmallConfig();
  c.filter = {FilterKind::kConfidence, 2.0};
  EXPECT_THROW(c.Validate(), ConfigError);
  EXPECT_NO_THROW(SmallConfig().Validate());
}

TEST(ConfigTest, EnvironmentOverrides) {
  ExperimentConfig c = SmallConfig();
  setenv("AUDITVOTES_OUTPUT_DIR", "/tmp/av-env", 1);
  setenv("AUDITVOTES_THREADS", "3", 1);
  c.ApplyEnvironment();
  unsetenv("AUDITVOTES_OUTPUT_DIR");
  unsetenv("AUDITVOTES_THREADS");
  EXPECT_EQ(c.output_dir, "/tmp/av-env");
  EXPECT_EQ(c.ResolvedThreads(), 3);
}

class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    plain_ = new GraphExperiment(PrepareGraphExperiment(SmallConfig()));
  }
  static void TearDownTestSuite() {
    delete plain_;
    plain_ = nullptr;
  }
  static GraphExperiment* plain_;
};

GraphExperiment* PipelineTest::plain_ = nullptr;

TEST_F(PipelineTest, ExperimentShapes) {
  const GraphExperiment& e = *plain_;
  EXPECT_EQ(e.test_graph.num_nodes(), e.full.num_nodes());
  EXPECT_EQ(e.test_ids.size(), e.split.test.size());
  for (std::size_t i = 0; i < e.test_ids.size(); ++i) {
    EXPECT_EQ(e.test_graph.labels()[e.test_positions[i]], e.full.labels()[e.test_ids[i]]);
  }
  EXPECT_GT(e.base_accuracy, 0.8);
  EXPECT_FALSE(e.test_scores);
}

TEST_F(PipelineTest, SingleNoiselessSampleAbstains) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 1;
  c.sparse_noise = {0.0, 0.0, 0};
  const RunResult r = RunRandomizedPipeline(c, *plain_);
  EXPECT_DOUBLE_EQ(r.report.clean_accuracy, plain_->base_accuracy);
  EXPECT_DOUBLE_EQ(r.report.abstain_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.report.CertifiedAccuracy(0, 0), 0.0);
}

TEST_F(PipelineTest, ReportInvariants) {
  const RunResult r = RunRandomizedPipeline(SmallConfig(), *plain_);
  const Report& rep = r.report;
  EXPECT_EQ(rep.sparse_grid.size(), 5u * 7u);
  for (const BudgetAccuracy& b : rep.sparse_grid) {
    EXPECT_LE(b.certified_accuracy, rep.clean_accuracy);
    if (b.r_d > 0) EXPECT_LE(b.certified_accuracy, rep.CertifiedAccuracy(b.r_a, b.r_d - 1));
    if (b.r_a > 0) EXPECT_LE(b.certified_accuracy, rep.CertifiedAccuracy(b.r_a - 1, b.r_d));
  }
  EXPECT_GT(rep.CertifiedAccuracy(0, 0), 0.5);
  double sum = 0.0;
  for (const StageTiming& t : rep.timings) sum += t.seconds;
  EXPECT_NEAR(sum, rep.total_seconds, 0.05 * rep.total_seconds + 1e-9);
  ASSERT_TRUE(rep.graph_stats.has_value());
  EXPECT_FALSE(rep.graph_stats->augmented.has_value());
  EXPECT_LT(rep.graph_stats->noisy.edges, rep.graph_stats->clean.edges);
}

TEST_F(PipelineTest, NoFilterCountsEveryVote) {
  const RunResult r = RunRandomizedPipeline(SmallConfig(), *plain_);
  for (const VoteTally& t : r.tallies) {
    EXPECT_EQ(t.n_valid, t.n_total);
    EXPECT_EQ(t.n_total, 300);
  }
}

TEST_F(PipelineTest, RaisingThetaNeverAddsVotes) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 100;
  std::vector<VoteTally> last;
  for (double theta : {0.0, 0.5, 0.8, 0.95}) {
    c.filter = {FilterKind::kConfidence, theta};
    const RunResult r = RunRandomizedPipeline(c, *plain_);
    if (!last.empty()) {
      for (std::size_t i = 0; i < last.size(); ++i) EXPECT_LE(r.tallies[i].n_valid, last[i].n_valid);
    }
    last = r.tallies;
  }
}

TEST_F(PipelineTest, ThreadCountDoesNotChangeTallies) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 60;
  c.threads = 1;
  const RunResult a = RunRandomizedPipeline(c, *plain_);
  c.threads = 3;
  const RunResult b = RunRandomizedPipeline(c, *plain_);
  EXPECT_EQ(a.tallies, b.tallies);
}

TEST(PipelineRunTest, RerunGivesIdenticalCsvs) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 50;
  c.augmenter.kind = ScoreKind::kJaccard;
  c.filter = {FilterKind::kConfidence, 0.5};
  oracles::TempDir dir;
  const std::string a = dir.File("a");
  const std::string b = dir.File("b");
  WriteOutputs(RunRandomizedPipeline(c), c, a);
  WriteOutputs(RunRandomizedPipeline(c), c, b);
  for (const char* f : {"grid.csv", "tallies.csv", "config.ini"}) {
    const std::string x = Slurp(a + "/" + f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, Slurp(b + "/" + f)) << f;
  }
  EXPECT_EQ(Slurp(a + "/grid.csv").substr(0, 18), "node,ra,rd,status\n");
  const std::string report = Slurp(a + "/report.json");
  EXPECT_NE(report.find("\"reconstruction_auc\""), std::string::npos);
  EXPECT_NE(SummarizeReportJson(report).find("clean accuracy"), std::string::npos);
  EXPECT_EQ(ExperimentConfig::Load(a + "/config.ini").ToIni(), c.ToIni());
}

TEST_F(PipelineTest, CheckpointMismatchFailsBeforeSampling) {
  oracles::TempDir dir;
  AugmenterTrainConfig t;
  t.fae_hidden = 4;
  t.fae_embedding = 2;
  SaveCheckpoint(InitAugmenter(ScoreKind::kFae, plain_->full.feature_dim(), t).ToCheckpoint(),
                 dir.File("fae.avck"));
  ExperimentConfig c = SmallConfig();
  c.augmenter.kind = ScoreKind::kSim;
  c.augmenter.checkpoint = dir.File("fae.avck");
  GraphExperiment e = LoadGraphExperiment(c);
  EXPECT_THROW(PrepareAugmenter(c, e), ConfigError);

  SaveCheckpoint(InitGcnParams(plain_->full.feature_dim() + 1, 8, 3, 1).ToCheckpoint(),
                 dir.File("gcn.avck"));
  c = SmallConfig();
  c.classifier.checkpoint = dir.File("gcn.avck");
  EXPECT_THROW(RunRandomizedPipeline(c), ConfigError);

  // A matching checkpoint reproduces the trained classifier.
  SaveCheckpoint(plain_->classifier.ToCheckpoint(), dir.File("ok.avck"));
  c.classifier.checkpoint = dir.File("ok.avck");
  EXPECT_DOUBLE_EQ(PrepareGraphExperiment(c).base_accuracy, plain_->base_accuracy);
  EXPECT_THROW(RunGnnCertPipeline(SmallConfig(), *plain_), ConfigError);
}

TEST_F(PipelineTest, EmpiricalZeroBudgetChangesNothing) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 100;
  const RunResult r = RunEmpiricalEval(c, *plain_, 0, {});
  ASSERT_TRUE(r.report.empirical.has_value());
  EXPECT_DOUBLE_EQ(r.report.empirical->accuracy_after, r.report.empirical->accuracy_before);
  EXPECT_EQ(r.report.empirical->certified_flipped, 0);
  const std::vector<NodeId> bad{plain_->split.labeled_train.front()};
  EXPECT_THROW(RunEmpiricalEval(c, *plain_, 1, bad), ConfigError);
}

TEST(EmpiricalEvalTest, CertifiedNodesSurviveRandomAttacks) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 400;
  c.sparse_noise = {0.05, 0.6, 0};
  c.max_ra = 1;
  c.max_rd = 1;
  const GraphExperiment e = PrepareGraphExperiment(c);
  const RunResult clean = RunRandomizedPipeline(c, e);
  std::vector<NodeId> targets;
  for (std::size_t i = 0; i < clean.nodes.size() && targets.size() < 10; ++i) {
    if (clean.grid->Status(i, 1, 1) == CertStatus::kCertified) targets.push_back(clean.nodes[i]);
  }
  ASSERT_FALSE(targets.empty());
  // 100 attacks: every round redraws noise and attacks.
  int certified = 0;
  const int rounds = static_cast<int>((100 + targets.size() - 1) / targets.size());
  for (int round = 0; round < rounds; ++round) {
    c.seed = 100 + static_cast<std::uint64_t>(round);
    const RunResult r = RunEmpiricalEval(c, e, 1, targets);
    certified += r.report.empirical->certified;
    EXPECT_EQ(r.report.empirical->certified_flipped, 0) << "round " << round;
  }
  EXPECT_GT(certified, 0);
}

TEST_F(PipelineTest, SaturatedAttackStillRuns) {
  ExperimentConfig c = SmallConfig();
  c.num_samples = 30;
  const std::vector<NodeId> targets(plain_->test_ids.begin(), plain_->test_ids.begin() + 3);
  const RunResult r = RunEmpiricalEval(c, *plain_, plain_->full.num_nodes(), targets);
  const SparseGraph g = RandomFlipAttack(plain_->test_graph, 0, plain_->full.num_nodes(), 1);
  EXPECT_EQ(g.degree(0), plain_->full.num_nodes() - 1 - plain_->test_graph.degree(0));
  EXPECT_GE(r.report.empirical->accuracy_after, 0.0);
}

TEST(RandomFlipAttackTest, TouchesOnlyTheTarget) {
  SbmConfig s;
  s.seed = 4;
  const SparseGraph g = GenerateSbm(s);
  const SparseGraph h = RandomFlipAttack(g, 5, 3, 9);
  int removed = 0;
  int added = 0;
  for (const Edge& e : g.edges()) {
    if (!h.HasEdge(e.u, e.v)) {
      ++removed;
      EXPECT_TRUE(e.u == 5 || e.v == 5);
    }
  }
  for (const Edge& e : h.edges()) {
    if (!g.HasEdge(e.u, e.v)) {
      ++added;
      EXPECT_TRUE(e.u == 5 || e.v == 5);
    }
  }
  EXPECT_EQ(removed, std::min(3, g.degree(5)));
  EXPECT_EQ(added, 3);
  EXPECT_EQ(RandomFlipAttack(g, 5, 0, 9).num_edges(), g.num_edges());
}

ExperimentConfig PartitionConfig(int groups) {
  ExperimentConfig c = SmallConfig();
  c.scheme = Scheme::kPartition;
  c.partition.num_groups = groups;
  c.max_partition_budget = 5;
  return c;
}

TEST(GnnCertPipelineTest, SingleGroupIsBaseClassifier) {
  ExperimentConfig c = PartitionConfig(1);
  const RunResult r = RunGnnCertPipeline(c);
  EXPECT_DOUBLE_EQ(r.report.partition_curve[0], r.report.base_accuracy);
  EXPECT_DOUBLE_EQ(r.report.clean_accuracy, r.report.base_accuracy);
  for (std::size_t m = 1; m < r.report.partition_curve.size(); ++m) {
    EXPECT_DOUBLE_EQ(r.report.partition_curve[m], 0.0);
  }
}

TEST(GnnCertPipelineTest, CurveMonotoneAndCsv) {
  ExperimentConfig c = PartitionConfig(8);
  const RunResult r = RunGnnCertPipeline(c);
  for (std::size_t m = 1; m < r.report.partition_curve.size(); ++m) {
    EXPECT_LE(r.report.partition_curve[m], r.report.partition_curve[m - 1]);
  }
  EXPECT_LE(r.report.partition_curve[0], r.report.clean_accuracy);
  for (const VoteTally& t : r.tallies) EXPECT_EQ(t.n_total, 8);
  oracles::TempDir dir;
  WriteOutputs(r, c, dir.path().string());
  EXPECT_EQ(Slurp(dir.File("grid.csv")).substr(0, 28), "node,label,predicted,budget\n");
}

ExperimentConfig PairedConfig() {
  ExperimentConfig c = SmallConfig();
  c.seed = 0;
  c.classifier.train.max_epochs = 200;
  c.sparse_noise = {0.2, 0.6, 0};
  c.num_samples = 2000;
  c.max_ra = 20;
  c.max_rd = 0;
  return c;
}

TEST(PairedRunTest, SimAugWithConfidenceBeatsPlainAtTwentyAdditions) {
  ExperimentConfig c = PairedConfig();
  const RunResult plain = RunRandomizedPipeline(c);
  c.augmenter.kind = ScoreKind::kSim;
  c.filter = {FilterKind::kConfidence, 0.2};
  const RunResult audited = RunRandomizedPipeline(c);
  EXPECT_GT(audited.report.CertifiedAccuracy(20, 0), plain.report.CertifiedAccuracy(20, 0));
  // Noise draws do not depend on the augmenter.
  EXPECT_DOUBLE_EQ(audited.report.graph_stats->noisy.edges, plain.report.graph_stats->noisy.edges);
  EXPECT_GT(audited.report.graph_stats->augmented->homophily, audited.report.graph_stats->noisy.homophily);
}

TEST(PairedRunTest, SimAugKeepsPartitionAccuracy) {
  ExperimentConfig c = PartitionConfig(12);
  c.seed = 0;
  const RunResult plain = RunGnnCertPipeline(c);
  c.augmenter.kind = ScoreKind::kSim;
  const RunResult augmented = RunGnnCertPipeline(c);
  EXPECT_GE(augmented.report.clean_accuracy, plain.report.clean_accuracy);
}

ExperimentConfig GaussianConfig() {
  ExperimentConfig c;
  c.scheme = Scheme::kGaussian;
  c.seed = 3;
  c.gaussian.sigma = 0.25;
  c.blobs.train_per_class = 300;
  c.blobs.test_per_class = 60;
  c.blobs.separation = 1.5;
  c.blobs.spread = 0.6;
  c.classifier.mlp.epochs = 60;
  c.num_samples = 500;
  c.threads = 2;
  c.radii = {0.0, 0.1, 0.25, 0.5};
  return c;
}

TEST(GaussianPipelineTest, ZeroThetaMatchesUnfiltered) {
  ExperimentConfig c = GaussianConfig();
  const DenseDataset data = LoadDenseDataset(c);
  const MlpParams model = PrepareMlp(c, data);
  const RunResult plain = RunGaussianPipeline(c, data, model);
  c.filter = {FilterKind::kConfidence, 0.0};
  const RunResult zero = RunGaussianPipeline(c, data, model);
  EXPECT_EQ(plain.tallies, zero.tallies);
  EXPECT_EQ(plain.radii, zero.radii);
  const auto& curve = plain.report.radius_curve;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LE(curve[i].certified_accuracy, curve[0].certified_accuracy);
  }
  EXPECT_GT(plain.report.clean_accuracy, 0.8);
  c.filter = {FilterKind::kHomophily, 0.5};
  EXPECT_THROW(RunGaussianPipeline(c, data, model), ConfigError);
}

TEST(GaussianPipelineTest, ConfidenceFilterKeepsMeanRadius) {
  ExperimentConfig c = GaussianConfig();
  const DenseDataset data = LoadDenseDataset(c);
  const MlpParams model = PrepareMlp(c, data);
  const RunResult plain = RunGaussianPipeline(c, data, model);
  c.filter = {FilterKind::kConfidence, 0.9};
  const RunResult filtered = RunGaussianPipeline(c, data, model);
  ASSERT_TRUE(plain.report.mean_certified_radius.has_value());
  ASSERT_TRUE(filtered.report.mean_certified_radius.has_value());
  EXPECT_GE(*filtered.report.mean_certified_radius, *plain.report.mean_certified_radius);
}

TEST(GaussianPipelineTest, CsvInputs) {
  oracles::TempDir dir;
  std::ofstream(dir.File("train.csv")) << "# label,x\n0,-1.0\n1,1.0\n0,-1.2\n1,0.9\n";
  std::ofstream(dir.File("test.csv")) << "0,-1.1\n1,1.1\n";
  ExperimentConfig c = GaussianConfig();
  c.blobs.train_csv = dir.File("train.csv");
  c.blobs.test_csv = dir.File("test.csv");
  const DenseDataset d = LoadDenseDataset(c);
  EXPECT_EQ(d.train_x.rows(), 4);
  EXPECT_EQ(d.test_x.cols(), 1);
  EXPECT_EQ(d.num_classes, 2);
  std::ofstream(dir.File("bad.csv")) << "0,1\n1,abc\n";
  c.blobs.test_csv = dir.File("bad.csv");
  EXPECT_THROW(LoadDenseDataset(c), ParseError);
}

}  // namespace
}  // namespace auditvotes
