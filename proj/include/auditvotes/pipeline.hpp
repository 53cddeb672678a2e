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


#ifndef AUDITVOTES_PIPELINE_HPP_
#define AUDITVOTES_PIPELINE_HPP_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auditvotes/augment.hpp"
#include "auditvotes/certify.hpp"
#include "auditvotes/classifiers.hpp"
#include "auditvotes/config.hpp"
#include "auditvotes/graph.hpp"
#include "auditvotes/voting.hpp"

namespace auditvotes {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

// Edge count and mean homophily (true labels), averaged over the graphs seen.
struct GraphSnapshot {
  double edges = 0.0;
  double homophily = 0.0;
};

struct AugmentationStats {
  GraphSnapshot clean;
  GraphSnapshot noisy;
  std::optional<GraphSnapshot> augmented;
  std::optional<double> reconstruction_auc;
  int graphs = 0;
};

struct BudgetAccuracy {
  int r_a = 0;
  int r_d = 0;
  double certified_accuracy = 0.0;
};

struct RadiusAccuracy {
  double radius = 0.0;
  double certified_accuracy = 0.0;
};

struct EmpiricalResult {
  int budget = 0;
  int targets = 0;
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  int certified = 0;          // targets certified at (budget, budget)
  int certified_flipped = 0;  // of those, predictions changed by the attack
};

struct Report {
  std::string scheme;
  int num_nodes = 0;  // certified inputs
  int num_samples = 0;
  double base_accuracy = 0.0;   // base classifier on clean inputs
  double clean_accuracy = 0.0;  // smoothed prediction
  double abstain_rate = 0.0;
  std::vector<BudgetAccuracy> sparse_grid;
  std::vector<double> partition_curve;  // index m
  std::vector<RadiusAccuracy> radius_curve;
  std::optional<double> mean_certified_radius;
  std::optional<AugmentationStats> graph_stats;
  std::optional<EmpiricalResult> empirical;
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;

  double CertifiedAccuracy(int r_a, int r_d) const;
  // Numbers rounded to 6 decimals.
  std::string ToJson() const;
};

// Human-readable summary of a report.json document.
std::string SummarizeReportJson(const std::string& json_text);

struct RunResult {
  Report report;
  std::vector<NodeId> nodes;  // dataset ids, or test-input indices
  std::vector<int> labels;    // per entry of `nodes`
  std::vector<VoteTally> tallies;
  std::optional<CertificateGrid> grid;
  std::vector<GnnCertResult> partition;
  std::vector<double> radii;
};

// report.json, grid.csv, tallies.csv and config.ini under `dir`.
void WriteOutputs(const RunResult& result, const ExperimentConfig& config, const std::string& dir);

// Everything the graph pipelines share: data, split, augmenter, classifier.
struct GraphExperiment {
  SparseGraph full;
  IdMap ids;
  InductiveSplit split;
  SparseGraph train_graph;
  SparseGraph validation_graph;
  SparseGraph test_graph;
  std::vector<NodeId> test_positions;  // test nodes as ids of test_graph
  std::vector<NodeId> test_ids;        // the same nodes as ids of full
  std::optional<AugmenterParams> augmenter_params;
  std::shared_ptr<const EdgeScoreMatrix> test_scores;  // null without augmenter
  std::vector<double> augmenter_loss;
  GcnParams classifier;
  double base_accuracy = 0.0;
  std::vector<StageTiming> timings;

  int num_classes() const { return full.num_classes(); }
};

GraphExperiment LoadGraphExperiment(const ExperimentConfig& config);
// Trains or loads FAE/Sim weights and scores the test graph.
void PrepareAugmenter(const ExperimentConfig& config, GraphExperiment& experiment);
// Trains or loads the GCN; needs PrepareAugmenter first.
void PrepareClassifier(const ExperimentConfig& config, GraphExperiment& experiment);
GraphExperiment PrepareGraphExperiment(const ExperimentConfig& config);

// Rewiring for one noisy graph under `config`'s scheme, or null without
// augmenter.
std::unique_ptr<GraphAugmenter> MakeTestAugmenter(const ExperimentConfig& config,
                                                  const GraphExperiment& experiment);

// Votes of `nodes` (ids of `graph`) over samples 0..num_samples-1 of
// `noise`, each rewired by `augmenter` when given. Deterministic for any
// thread count.
std::vector<VoteTally> CollectSparseVotes(const SparseGraph& graph, const GcnInference& model,
                                          const GraphAugmenter* augmenter,
                                          std::span<const NodeId> nodes, int num_classes,
                                          const FilterConfig& filter,
                                          const SparseNoiseConfig& noise, int num_samples,
                                          int threads, AugmentationStats* stats = nullptr);

RunResult RunRandomizedPipeline(const ExperimentConfig& config);
RunResult RunRandomizedPipeline(const ExperimentConfig& config, const GraphExperiment& experiment);
RunResult RunGnnCertPipeline(const ExperimentConfig& config);
RunResult RunGnnCertPipeline(const ExperimentConfig& config, const GraphExperiment& experiment);

struct DenseDataset {
  Eigen::MatrixXd train_x;
  std::vector<int> train_y;
  Eigen::MatrixXd test_x;
  std::vector<int> test_y;
  int num_classes = 0;
};

DenseDataset LoadDenseDataset(const ExperimentConfig& config);
MlpParams PrepareMlp(const ExperimentConfig& config, const DenseDataset& data);
RunResult RunGaussianPipeline(const ExperimentConfig& config);
RunResult RunGaussianPipeline(const ExperimentConfig& config, const DenseDataset& data,
                              const MlpParams& model);

// Random-flip attack on each target in turn: up to `attack_budget` incident
// edges deleted and as many added. Targets are dataset ids from the test
// split; empty means every test node.
RunResult RunEmpiricalEval(const ExperimentConfig& config, int attack_budget,
                           std::span<const NodeId> targets);
RunResult RunEmpiricalEval(const ExperimentConfig& config, const GraphExperiment& experiment,
                           int attack_budget, std::span<const NodeId> targets);

// The graph with `budget` random deletions and additions at `target`.
SparseGraph RandomFlipAttack(const SparseGraph& graph, NodeId target, int budget,
                             std::uint64_t seed);

}  // namespace auditvotes

#endif  // AUDITVOTES_PIPELINE_HPP_
