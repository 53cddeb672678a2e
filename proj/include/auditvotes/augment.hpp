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

#ifndef AUDITVOTES_AUGMENT_HPP_
#define AUDITVOTES_AUGMENT_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "auditvotes/checkpoint.hpp"
#include "auditvotes/classifiers.hpp"
#include "auditvotes/graph.hpp"
#include "auditvotes/smoothing.hpp"

namespace auditvotes {

enum class ScoreKind { kJaccard, kFae, kSim };

std::string_view ToString(ScoreKind kind);
ScoreKind ParseScoreKind(std::string_view name);

// Feature auto-encoder edge model: Z = ReLU(X W2) W1, F(u, v) = sigmoid(z_u . z_v).
struct FaeParams {
  Eigen::MatrixXd w2;  // d x h2, applied first
  Eigen::MatrixXd w1;  // h2 x e
};

// Multi-head weighted cosine: S(u, v) = mean_q cos(w_q * x_u, w_q * x_v).
struct SimParams {
  Eigen::MatrixXd weights;  // m x d, one head per row
};

struct AugmenterParams {
  ScoreKind kind = ScoreKind::kJaccard;
  FaeParams fae;
  SimParams sim;

  bool trained() const;
  Checkpoint ToCheckpoint() const;
  static AugmenterParams FromCheckpoint(const Checkpoint& checkpoint);
};

RowMatrix FaeEmbeddings(const FeatureMatrix& features, const FaeParams& params);

struct ScoreOptions {
  // Candidate partners kept per node when scores are not stored densely.
  int candidate_k = 200;
  // Graphs with at most this many nodes get a dense score table.
  NodeId dense_limit = 4000;
  // Jaccard only: treat every nonzero feature as 1.
  bool binarize = false;
};

struct ScoredPair {
  Edge pair;
  double score = 0.0;
};

// Exact score of an arbitrary pair, used when the table is not dense.
class PairScorer {
 public:
  // Receives node u and the scores of pairs (u, v) for v = u+1 .. n-1.
  using RowVisitor = std::function<void(NodeId, std::span<const double>)>;

  virtual ~PairScorer() = default;
  virtual NodeId num_nodes() const = 0;
  virtual double Score(NodeId u, NodeId v) const = 0;
  // Visits every row of the upper triangle in order.
  virtual void ForEachRow(const RowVisitor& visit) const;
};

// Symmetric edge-intensity scores over the node pairs of one graph. Depends on
// node features only, so one table serves every noisy copy of the graph.
class EdgeScoreMatrix {
 public:
  EdgeScoreMatrix(ScoreKind kind, NodeId num_nodes, std::vector<double> upper_triangle,
                  std::shared_ptr<const PairScorer> scorer);
  EdgeScoreMatrix(ScoreKind kind, NodeId num_nodes, std::vector<ScoredPair> candidates,
                  std::shared_ptr<const PairScorer> scorer);

  ScoreKind kind() const { return kind_; }
  NodeId num_nodes() const { return num_nodes_; }
  bool is_dense() const { return !upper_.empty() || num_nodes_ < 2; }

  // Score of pair (u, v); the diagonal scores 0.
  double Score(NodeId u, NodeId v) const {
    if (u == v) return 0.0;
    if (u > v) std::swap(u, v);
    if (!upper_.empty()) return upper_[static_cast<std::size_t>(PairIndex(u, v, num_nodes_))];
    return scorer_->Score(u, v);
  }

  // Pairs eligible for addition, by descending score (ties by pair order).
  // Every unordered pair when dense, the top-k candidate union otherwise.
  std::span<const ScoredPair> ranked_candidates() const { return ranked_; }
  // Row-major upper triangle; empty unless dense.
  std::span<const double> upper_triangle() const { return upper_; }

  // k-th smallest (1-based) score over all unordered pairs.
  double KthSmallestOverAllPairs(std::int64_t k) const;

  PairScoreFn AsFunction() const {
    return [this](NodeId u, NodeId v) { return Score(u, v); };
  }

 private:
  ScoreKind kind_;
  NodeId num_nodes_;
  std::vector<double> upper_;
  std::vector<ScoredPair> ranked_;
  std::shared_ptr<const PairScorer> scorer_;
};

EdgeScoreMatrix JaccardScores(const SparseGraph& graph, const ScoreOptions& options = {});
EdgeScoreMatrix FaeScores(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options = {});
EdgeScoreMatrix SimScores(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options = {});
// Dispatches on params.kind.
EdgeScoreMatrix ComputeScores(const SparseGraph& graph, const AugmenterParams& params,
                              const ScoreOptions& options = {});

// Hex digest of the node features, augmenter kind and weights, and storage
// options: everything a score table depends on.
std::string ScoreCacheKey(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options);
// ComputeScores backed by `<cache_dir>/<key>.scores`. An empty directory
// disables the cache; unreadable entries are recomputed and overwritten.
EdgeScoreMatrix CachedScores(const SparseGraph& graph, const AugmenterParams& params,
                             const ScoreOptions& options, const std::string& cache_dir);

struct AugmenterTrainConfig {
  double learning_rate = 1e-3;
  int epochs = 250;
  double positive_fraction = 0.9;
  int negative_ratio = 10;
  int fae_hidden = 256;
  int fae_embedding = 64;
  int sim_heads = 4;
  // SimAug heads start at 1 + U(-noise, noise).
  double sim_init_noise = 0.01;
  std::uint64_t seed = 0;
};

struct EdgeSamples {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
};

// positive_fraction of the edges as positives and negative_ratio times as many
// uniformly drawn non-edges as negatives.
EdgeSamples SampleTrainingPairs(const SparseGraph& graph, double positive_fraction,
                                int negative_ratio, std::uint64_t seed);

AugmenterParams InitAugmenter(ScoreKind kind, int feature_dim, const AugmenterTrainConfig& config);

struct AugmenterGradient {
  double loss = 0.0;
  FaeParams fae;
  SimParams sim;
};

// Mean binary cross-entropy over the sampled pairs. SimAug scores enter the
// loss as (S + 1) / 2.
AugmenterGradient AugmenterLossAndGradient(const FeatureMatrix& features,
                                           const AugmenterParams& params,
                                           const EdgeSamples& samples);

struct AugmenterTrainResult {
  AugmenterParams params;
  std::vector<double> loss_history;  // loss before each update
};

AugmenterTrainResult TrainAugmenter(const SparseGraph& graph, ScoreKind kind,
                                    const AugmenterTrainConfig& config = {});

// Which pairs the rank thresholds are taken over.
enum class RankPopulation {
  // tau and xi are order statistics over every unordered pair, fixed once.
  kAllPairs,
  // tau is taken over the edges of each noisy graph and xi over its non-edges,
  // so each sample loses del_count/2 and gains add_count/2 edges.
  kPerSample,
};

std::string_view ToString(RankPopulation population);
RankPopulation ParseRankPopulation(std::string_view name);

// Prune edges scoring <= tau, add non-edges scoring > xi. add_count and
// del_count are expected adjacency-matrix entries (each undirected edge counts
// twice); the corresponding rank in unordered pairs is ceil(count / 2).
struct ThresholdPair {
  double tau = -std::numeric_limits<double>::infinity();
  double xi = std::numeric_limits<double>::infinity();
  std::int64_t add_count = 0;
  std::int64_t del_count = 0;
  RankPopulation population = RankPopulation::kPerSample;

  bool prunes() const { return tau != -std::numeric_limits<double>::infinity(); }
  bool adds() const { return xi != std::numeric_limits<double>::infinity(); }
};

ThresholdPair NoiseAdaptiveThresholds(const EdgeScoreMatrix& scores, double e_ratio,
                                      NodeId n_test, const SparseNoiseConfig& noise,
                                      RankPopulation population = RankPopulation::kPerSample);

// De-randomized variant: nothing is pruned; add_count = E'(1 - 1/T_s).
ThresholdPair GnnCertThreshold(const EdgeScoreMatrix& scores, double e_ratio, NodeId n_test,
                               int num_groups,
                               RankPopulation population = RankPopulation::kPerSample);

// Concrete tau and xi for one noisy graph. Identity for kAllPairs.
ThresholdPair ResolveThresholds(const SparseGraph& noisy, const EdgeScoreMatrix& scores,
                                const ThresholdPair& thresholds);

// A' = A o (S > tau) + (A == 0) o (S > xi) with the thresholds taken as given.
SparseGraph Rewire(const SparseGraph& noisy, const EdgeScoreMatrix& scores,
                   const ThresholdPair& thresholds);

// Resolve then rewire: the augmentation applied to each smoothing sample.
class GraphAugmenter {
 public:
  GraphAugmenter(std::shared_ptr<const EdgeScoreMatrix> scores, ThresholdPair thresholds)
      : scores_(std::move(scores)), thresholds_(thresholds) {}

  SparseGraph operator()(const SparseGraph& noisy) const {
    return Rewire(noisy, *scores_, ResolveThresholds(noisy, *scores_, thresholds_));
  }

  const EdgeScoreMatrix& scores() const { return *scores_; }
  const ThresholdPair& thresholds() const { return thresholds_; }

 private:
  std::shared_ptr<const EdgeScoreMatrix> scores_;
  ThresholdPair thresholds_;
};

}  // namespace auditvotes

#endif  // AUDITVOTES_AUGMENT_HPP_
