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

#ifndef AUDITVOTES_GRAPH_HPP_
#define AUDITVOTES_GRAPH_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace auditvotes {

using NodeId = std::int32_t;

// Node features, one row per node. Row-major so a node's support is contiguous.
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int32_t>;

// Undirected edge stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected, self-loop-free, unweighted graph with sparse node features and
// optional labels. Immutable once built; features and labels are shared
// between a graph and every graph derived from it by edge surgery.
class SparseGraph {
 public:
  SparseGraph() = default;

  // Canonicalizes `edges`: orients each pair as u < v, drops self-loops and
  // duplicates. Throws BoundsError for endpoints outside [0, num_nodes).
  SparseGraph(NodeId num_nodes, std::vector<Edge> edges,
              std::shared_ptr<const FeatureMatrix> features,
              std::shared_ptr<const std::vector<int>> labels = nullptr,
              int num_classes = 0);

  // Trusted constructor for edge lists that are already sorted, unique and
  // oriented. Used on the sampling hot path.
  static SparseGraph FromCanonicalEdges(
      NodeId num_nodes, std::vector<Edge> edges,
      std::shared_ptr<const FeatureMatrix> features,
      std::shared_ptr<const std::vector<int>> labels, int num_classes);

  // Same nodes, features and labels; different (canonical) edge set.
  SparseGraph WithCanonicalEdges(std::vector<Edge> edges) const;

  NodeId num_nodes() const { return num_nodes_; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(edges_.size()); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v],
            static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
  }
  int degree(NodeId v) const { return static_cast<int>(offsets_[v + 1] - offsets_[v]); }
  bool HasEdge(NodeId u, NodeId v) const;

  const FeatureMatrix& features() const { return *features_; }
  const std::shared_ptr<const FeatureMatrix>& features_ptr() const { return features_; }
  int feature_dim() const { return features_ ? static_cast<int>(features_->cols()) : 0; }

  bool has_labels() const { return labels_ != nullptr; }
  std::span<const int> labels() const {
    return labels_ ? std::span<const int>(*labels_) : std::span<const int>();
  }
  const std::shared_ptr<const std::vector<int>>& labels_ptr() const { return labels_; }
  int num_classes() const { return num_classes_; }

 private:
  void BuildIndex();

  NodeId num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::int64_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  std::shared_ptr<const FeatureMatrix> features_;
  std::shared_ptr<const std::vector<int>> labels_;
  int num_classes_ = 0;
};

// Linear index of the unordered pair (u, v), u < v, in row-major upper
// triangle order. Total pair count is n(n-1)/2.
inline std::int64_t PairIndex(NodeId u, NodeId v, NodeId n) {
  const std::int64_t uu = u;
  return uu * n - uu * (uu + 1) / 2 + (v - uu - 1);
}

inline std::int64_t PairCount(NodeId n) {
  return static_cast<std::int64_t>(n) * (n - 1) / 2;
}

// Inverse of PairIndex.
Edge PairFromIndex(std::int64_t index, NodeId n);

bool IsBinary(const FeatureMatrix& features);
FeatureMatrix Binarize(const FeatureMatrix& features);
FeatureMatrix FeaturesFromTriplets(NodeId n, int d,
                                   const std::vector<Eigen::Triplet<double>>& triplets);

// Bidirectional map between external string ids and dense internal ids.
class IdMap {
 public:
  IdMap() = default;
  explicit IdMap(std::vector<std::string> external_ids);

  // External ids "0", "1", ..., "n-1".
  static IdMap Identity(NodeId n);
  static IdMap Load(const std::string& path);
  void Save(const std::string& path) const;

  NodeId size() const { return static_cast<NodeId>(external_.size()); }
  const std::string& external(NodeId internal) const;
  std::optional<NodeId> internal(std::string_view external) const;
  // Assigns the next dense id when `external` is unseen.
  NodeId Intern(std::string_view external);

 private:
  std::vector<std::string> external_;
  std::unordered_map<std::string, NodeId> internal_;
};

struct LoadOptions {
  // Map non-binary feature values to 1 (nonzero) / 0.
  bool binarize = false;
  // When set, node tokens in all files are external ids resolved (and, in the
  // feature file, registered) through this map.
  IdMap* id_map = nullptr;
};

// Reads the edge, feature and label files. The feature file header declares
// the node count n; edges are symmetrized, de-duplicated and de-looped.
// `label_path` may be empty.
SparseGraph LoadDataset(const std::string& edge_path, const std::string& feature_path,
                        const std::string& label_path, const LoadOptions& options = {});

void SaveDataset(const SparseGraph& graph, const std::string& edge_path,
                 const std::string& feature_path, const std::string& label_path);

// Node partition for inductive node classification. The training graph is
// induced by labeled_train + unlabeled_train, the validation graph adds
// validation, the test graph adds test.
struct InductiveSplit {
  std::vector<NodeId> labeled_train;
  std::vector<NodeId> unlabeled_train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;

  // Node lists of the three nested graphs. Each is a prefix of the next.
  std::vector<NodeId> TrainingNodes() const;
  std::vector<NodeId> ValidationGraphNodes() const;
  std::vector<NodeId> TestGraphNodes() const;
};

InductiveSplit MakeInductiveSplit(const SparseGraph& graph, int per_class_labeled,
                                  double test_fraction, std::uint64_t seed);

void SaveSplit(const InductiveSplit& split, const std::string& path);
InductiveSplit LoadSplit(const std::string& path, NodeId num_nodes);

// Graph induced by `nodes`; node i of the result is nodes[i] of the input.
SparseGraph InducedSubgraph(const SparseGraph& graph, std::span<const NodeId> nodes);

struct SbmConfig {
  int classes = 3;
  int nodes_per_class = 100;
  double p_in = 0.05;
  double p_out = 0.005;
  int feature_dim = 60;
  // Probability that one of the node's own class-signature dimensions is on.
  double feature_signal = 0.5;
  // Scale on (1 - feature_signal) for every other dimension.
  double background = 0.1;
  std::uint64_t seed = 0;
};

// Stochastic block model with class-signature binary features. Node v belongs
// to class v / nodes_per_class; feature dimensions are split into `classes`
// contiguous signature blocks.
SparseGraph GenerateSbm(const SbmConfig& config);

struct GraphStats {
  double edge_sparsity = 0.0;
  double homophily_mean = 0.0;
  std::optional<double> reconstruction_auc;
};

using PairScoreFn = std::function<double(NodeId, NodeId)>;

// nnz(A) / n^2 with A the symmetric adjacency matrix.
double EdgeSparsity(const SparseGraph& graph);

// Fraction of same-label neighbors per node; isolated nodes score 0.
std::vector<double> NodeHomophily(const SparseGraph& graph, std::span<const int> labels);
double MeanHomophily(const SparseGraph& graph, std::span<const int> labels);

// Probability that a random reference edge outscores a random reference
// non-edge, ties counting one half. Exact by rank statistics when the pair
// count is at most exact_pair_limit, otherwise estimated from `sampled_pairs`
// draws of each.
double ReconstructionAuc(const SparseGraph& reference, const PairScoreFn& score,
                         std::uint64_t seed = 0, std::int64_t sampled_pairs = 2'000'000,
                         std::int64_t exact_pair_limit = 5'000'000);

GraphStats ComputeGraphStats(const SparseGraph& graph, std::span<const int> pseudo_labels,
                             const SparseGraph* reference = nullptr,
                             const PairScoreFn& scores = nullptr);

}  // namespace auditvotes

#endif  // AUDITVOTES_GRAPH_HPP_
