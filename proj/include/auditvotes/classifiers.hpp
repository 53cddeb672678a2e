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

#ifndef AUDITVOTES_CLASSIFIERS_HPP_
#define AUDITVOTES_CLASSIFIERS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "auditvotes/checkpoint.hpp"
#include "auditvotes/graph.hpp"
#include "auditvotes/smoothing.hpp"

namespace auditvotes {

// Node-major dense matrix: one row per node.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Prediction {
  int class_index = 0;
  double confidence = 0.0;
  Eigen::VectorXd probability_vector;
};

// Softmax outputs for every node of one graph.
struct NodePredictions {
  RowMatrix probabilities;
  std::vector<int> classes;
  std::vector<double> confidence;

  NodeId num_nodes() const { return static_cast<NodeId>(classes.size()); }
  int num_classes() const { return static_cast<int>(probabilities.cols()); }
  Prediction at(NodeId v) const;
};

// Row-wise softmax with argmax ties resolved toward the smaller class index.
NodePredictions SoftmaxPredictions(const RowMatrix& logits);

// Two-layer GCN without biases: logits = A_hat ReLU(A_hat X W1) W2, with
// A_hat = D^-1/2 (A + I) D^-1/2.
struct GcnParams {
  Eigen::MatrixXd w1;  // d x h
  Eigen::MatrixXd w2;  // h x C

  int input_dim() const { return static_cast<int>(w1.rows()); }
  int hidden_dim() const { return static_cast<int>(w1.cols()); }
  int num_classes() const { return static_cast<int>(w2.cols()); }
  void CheckShapes() const;

  Checkpoint ToCheckpoint() const;
  static GcnParams FromCheckpoint(const Checkpoint& checkpoint);
};

// Glorot-uniform initialization.
GcnParams InitGcnParams(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed);

// A_hat * h for the graph's symmetric normalized adjacency with self-loops.
RowMatrix NormalizedPropagate(const SparseGraph& graph, const RowMatrix& h);

RowMatrix GcnLogits(const SparseGraph& graph, const GcnParams& params);
NodePredictions GcnForward(const SparseGraph& graph, const GcnParams& params);

// Inference over many graphs sharing one feature matrix. X W1 is computed once.
class GcnInference {
 public:
  GcnInference(const FeatureMatrix& features, GcnParams params);

  RowMatrix Logits(const SparseGraph& graph) const;
  NodePredictions Predict(const SparseGraph& graph) const { return SoftmaxPredictions(Logits(graph)); }
  const GcnParams& params() const { return params_; }

 private:
  GcnParams params_;
  RowMatrix projected_;  // X W1
};

struct GcnGradient {
  double loss = 0.0;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
};

// Mean cross-entropy over `nodes` plus (weight_decay / 2) * (|W1|^2 + |W2|^2),
// and its gradient.
GcnGradient GcnLossAndGradient(const SparseGraph& graph, const GcnParams& params,
                               std::span<const NodeId> nodes, std::span<const int> targets,
                               double weight_decay);

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  int max_epochs = 1000;
  int patience = 100;
  int hidden_dim = 128;
  // When set, every epoch trains on a fresh noisy copy of the training graph.
  std::optional<SparseNoiseConfig> noise;
  // Fixed noisy copies of the validation graph used for early stopping.
  int validation_samples = 4;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Applied to each noisy graph before the classifier sees it (augmentation).
using GraphTransform = std::function<SparseGraph(const SparseGraph&)>;

struct GcnTrainingData {
  const SparseGraph* train_graph = nullptr;
  std::vector<NodeId> train_nodes;  // labeled nodes, ids in train_graph
  const SparseGraph* validation_graph = nullptr;
  std::vector<NodeId> validation_nodes;  // ids in validation_graph
  GraphTransform train_transform;
  GraphTransform validation_transform;
};

struct GcnTrainResult {
  GcnParams params;
  int epochs_run = 0;
  int best_epoch = -1;
  double best_validation_accuracy = 0.0;
  std::vector<double> train_loss;
};

// Full-batch Adam with early stopping on validation accuracy. Returns the
// parameters of the best validation epoch (the initialization when no epoch
// ran).
GcnTrainResult TrainGcn(const GcnTrainingData& data, const TrainConfig& config);

double Accuracy(const NodePredictions& predictions, std::span<const NodeId> nodes,
                std::span<const int> labels);

// Two-layer dense network: softmax(W2 ReLU(W1 x)).
struct MlpParams {
  Eigen::MatrixXd w1;  // h x d
  Eigen::MatrixXd w2;  // C x h

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int num_classes() const { return static_cast<int>(w2.rows()); }
  void CheckShapes() const;

  Checkpoint ToCheckpoint() const;
  static MlpParams FromCheckpoint(const Checkpoint& checkpoint);
};

MlpParams InitMlpParams(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed);
Eigen::VectorXd MlpLogits(const Eigen::VectorXd& x, const MlpParams& params);
Prediction MlpForward(const Eigen::VectorXd& x, const MlpParams& params);

struct MlpGradient {
  double loss = 0.0;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
};

// Rows of `inputs` are examples.
MlpGradient MlpLossAndGradient(const Eigen::MatrixXd& inputs, std::span<const int> targets,
                               const MlpParams& params, double weight_decay);

struct MlpTrainConfig {
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
  int epochs = 150;
  int batch_size = 256;
  int hidden_dim = 32;
  // Gaussian data augmentation with the smoothing noise.
  std::optional<GaussianNoiseConfig> noise;
  std::uint64_t seed = 0;
};

MlpParams TrainMlp(const Eigen::MatrixXd& inputs, std::span<const int> targets, int num_classes,
                   const MlpTrainConfig& config);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on one parameter matrix.
class AdamState {
 public:
  explicit AdamState(const Eigen::MatrixXd& shape_like)
      : m_(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())),
        v_(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())) {}

  void Step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double learning_rate);

 private:
  Eigen::MatrixXd m_;
  Eigen::MatrixXd v_;
  int t_ = 0;
};

}  // namespace auditvotes

#endif  // AUDITVOTES_CLASSIFIERS_HPP_
