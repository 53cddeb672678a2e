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

#include "auditvotes/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "auditvotes/error.hpp"
#include "auditvotes/rng.hpp"

namespace auditvotes {
namespace {

Eigen::MatrixXd GlorotUniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
  return m;
}

// Writes softmax(logits.row) into probs.row and returns log-sum-exp.
template <typename In, typename Out>
double SoftmaxRow(const In& logits, Out&& probs) {
  const double max = logits.maxCoeff();
  probs = (logits.array() - max).exp();
  const double sum = probs.sum();
  probs /= sum;
  return max + std::log(sum);
}

template <typename Row>
int ArgmaxFirst(const Row& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

}  // namespace

Prediction NodePredictions::at(NodeId v) const {
  return Prediction{classes[v], confidence[v], probabilities.row(v).transpose()};
}

NodePredictions SoftmaxPredictions(const RowMatrix& logits) {
  NodePredictions out;
  out.probabilities.resize(logits.rows(), logits.cols());
  out.classes.resize(static_cast<std::size_t>(logits.rows()));
  out.confidence.resize(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index v = 0; v < logits.rows(); ++v) {
    SoftmaxRow(logits.row(v), out.probabilities.row(v));
    const int c = ArgmaxFirst(out.probabilities.row(v));
    out.classes[v] = c;
    out.confidence[v] = out.probabilities(v, c);
  }
  return out;
}

void GcnParams::CheckShapes() const {
  if (w1.cols() != w2.rows()) {
    throw ShapeError("GCN hidden dimensions disagree: W1 has " + std::to_string(w1.cols()) +
                     " columns, W2 has " + std::to_string(w2.rows()) + " rows");
  }
  if (!w1.allFinite() || !w2.allFinite()) throw NumericError("GCN parameters are not finite");
}

Checkpoint GcnParams::ToCheckpoint() const {
  return Checkpoint{CheckpointKind::kGcn, {{"w1", w1}, {"w2", w2}}};
}

GcnParams GcnParams::FromCheckpoint(const Checkpoint& checkpoint) {
  if (checkpoint.kind != CheckpointKind::kGcn) throw ConfigError("checkpoint is not a GCN");
  GcnParams params{checkpoint.Get("w1"), checkpoint.Get("w2")};
  params.CheckShapes();
  return params;
}

GcnParams InitGcnParams(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  GcnParams params;
  params.w1 = GlorotUniform(input_dim, hidden_dim, rng);
  params.w2 = GlorotUniform(hidden_dim, num_classes, rng);
  return params;
}

RowMatrix NormalizedPropagate(const SparseGraph& graph, const RowMatrix& h) {
  const NodeId n = graph.num_nodes();
  if (h.rows() != n) throw ShapeError("propagation input has wrong row count");
  Eigen::VectorXd inv_sqrt(n);
  for (NodeId v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(graph.degree(v) + 1.0);
  const RowMatrix scaled = inv_sqrt.asDiagonal() * h;
  RowMatrix out(n, h.cols());
  for (NodeId v = 0; v < n; ++v) {
    auto row = out.row(v);
    row = scaled.row(v);
    for (NodeId u : graph.neighbors(v)) row += scaled.row(u);
    row *= inv_sqrt[v];
  }
  return out;
}

namespace {

void CheckGcnInput(const SparseGraph& graph, const GcnParams& params) {
  params.CheckShapes();
  if (graph.feature_dim() != params.input_dim()) {
    throw ShapeError("feature dimension " + std::to_string(graph.feature_dim()) +
                     " does not match W1 rows " + std::to_string(params.input_dim()));
  }
}

RowMatrix LogitsFromProjection(const SparseGraph& graph, const RowMatrix& projected,
                               const Eigen::MatrixXd& w2) {
  RowMatrix hidden = NormalizedPropagate(graph, projected).cwiseMax(0.0);
  RowMatrix mixed = hidden * w2;
  return NormalizedPropagate(graph, mixed);
}

}  // namespace

RowMatrix GcnLogits(const SparseGraph& graph, const GcnParams& params) {
  CheckGcnInput(graph, params);
  const RowMatrix projected = graph.features() * params.w1;
  return LogitsFromProjection(graph, projected, params.w2);
}

NodePredictions GcnForward(const SparseGraph& graph, const GcnParams& params) {
  return SoftmaxPredictions(GcnLogits(graph, params));
}

GcnInference::GcnInference(const FeatureMatrix& features, GcnParams params)
    : params_(std::move(params)) {
  params_.CheckShapes();
  if (features.cols() != params_.input_dim()) {
    throw ShapeError("feature dimension does not match W1 rows");
  }
  projected_ = features * params_.w1;
}

RowMatrix GcnInference::Logits(const SparseGraph& graph) const {
  if (graph.num_nodes() != projected_.rows()) throw ShapeError("graph size differs from features");
  return LogitsFromProjection(graph, projected_, params_.w2);
}

GcnGradient GcnLossAndGradient(const SparseGraph& graph, const GcnParams& params,
                               std::span<const NodeId> nodes, std::span<const int> targets,
                               double weight_decay) {
  CheckGcnInput(graph, params);
  if (nodes.size() != targets.size() || nodes.empty()) {
    throw ShapeError("need one target per training node and at least one node");
  }
  const int num_classes = params.num_classes();
  const RowMatrix pre = NormalizedPropagate(graph, graph.features() * params.w1);
  const RowMatrix hidden = pre.cwiseMax(0.0);
  const RowMatrix mixed = NormalizedPropagate(graph, hidden);
  const RowMatrix logits = mixed * params.w2;

  const double scale = 1.0 / static_cast<double>(nodes.size());
  RowMatrix dlogits = RowMatrix::Zero(logits.rows(), logits.cols());
  GcnGradient grad;
  Eigen::RowVectorXd probs(num_classes);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const NodeId v = nodes[i];
    const int y = targets[i];
    if (y < 0 || y >= num_classes) throw BoundsError("target class out of range");
    const double lse = SoftmaxRow(logits.row(v), probs);
    grad.loss += (lse - logits(v, y)) * scale;
    probs[y] -= 1.0;
    dlogits.row(v) += probs * scale;
  }
  grad.loss += 0.5 * weight_decay * (params.w1.squaredNorm() + params.w2.squaredNorm());

  grad.w2 = mixed.transpose() * dlogits + weight_decay * params.w2;
  const RowMatrix dmixed = dlogits * params.w2.transpose();
  RowMatrix dpre = NormalizedPropagate(graph, dmixed);
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  const RowMatrix dprojected = NormalizedPropagate(graph, dpre);
  grad.w1 = graph.features().transpose() * dprojected + weight_decay * params.w1;
  return grad;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  // A zero-epoch run ignores patience.
  if (max_epochs < 0 || patience < 0 || (max_epochs > 0 && patience > max_epochs)) {
    throw ConfigError("need 0 <= patience <= max_epochs");
  }
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
  if (noise) noise->Validate();
}

void AdamState::Step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, t_);
  const double c2 = 1.0 - std::pow(kBeta2, t_);
  param.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
}

double Accuracy(const NodePredictions& predictions, std::span<const NodeId> nodes,
                std::span<const int> labels) {
  if (nodes.empty()) return 0.0;
  std::size_t correct = 0;
  for (NodeId v : nodes) correct += predictions.classes[v] == labels[v] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

GcnTrainResult TrainGcn(const GcnTrainingData& data, const TrainConfig& config) {
  config.Validate();
  if (data.train_graph == nullptr || data.validation_graph == nullptr) {
    throw ConfigError("training needs a training graph and a validation graph");
  }
  const SparseGraph& train = *data.train_graph;
  const SparseGraph& validation = *data.validation_graph;
  if (!train.has_labels() || !validation.has_labels()) throw ConfigError("training graph has no labels");
  if (data.train_nodes.empty()) throw ConfigError("no labeled training nodes");

  std::vector<int> targets;
  targets.reserve(data.train_nodes.size());
  for (NodeId v : data.train_nodes) {
    const int y = train.labels()[v];
    if (y < 0) throw ConfigError("training node " + std::to_string(v) + " has no label");
    targets.push_back(y);
  }

  GcnTrainResult result;
  result.params = InitGcnParams(train.feature_dim(), config.hidden_dim, train.num_classes(),
                                MixSeed(config.seed, 1));
  if (config.max_epochs == 0) return result;

  std::vector<SparseGraph> validation_graphs;
  if (config.noise) {
    SparseNoiseConfig noise = *config.noise;
    noise.seed = MixSeed(config.noise->seed, 0x7661);
    for (int k = 0; k < std::max(config.validation_samples, 1); ++k) {
      SparseGraph g = SampleSparseNoise(validation, noise, static_cast<std::uint64_t>(k));
      validation_graphs.push_back(data.validation_transform ? data.validation_transform(g) : g);
    }
  } else {
    validation_graphs.push_back(data.validation_transform ? data.validation_transform(validation)
                                                          : validation);
  }
  const SparseGraph clean_train = !config.noise && data.train_transform
                                      ? data.train_transform(train)
                                      : train;

  GcnParams params = result.params;
  AdamState adam1(params.w1);
  AdamState adam2(params.w2);
  double best_accuracy = -1.0;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    GcnGradient grad;
    if (config.noise) {
      SparseGraph noisy = SampleSparseNoise(train, *config.noise, static_cast<std::uint64_t>(epoch));
      if (data.train_transform) noisy = data.train_transform(noisy);
      grad = GcnLossAndGradient(noisy, params, data.train_nodes, targets, config.weight_decay);
    } else {
      grad = GcnLossAndGradient(clean_train, params, data.train_nodes, targets, config.weight_decay);
    }
    if (!std::isfinite(grad.loss)) throw NumericError("training loss is not finite");
    result.train_loss.push_back(grad.loss);
    adam1.Step(params.w1, grad.w1, config.learning_rate);
    adam2.Step(params.w2, grad.w2, config.learning_rate);
    result.epochs_run = epoch + 1;

    double accuracy = 0.0;
    GcnInference inference(validation.features(), params);
    for (const SparseGraph& g : validation_graphs) {
      accuracy += Accuracy(inference.Predict(g), data.validation_nodes, validation.labels());
    }
    accuracy /= static_cast<double>(validation_graphs.size());
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.best_validation_accuracy = best_accuracy;
  return result;
}

void MlpParams::CheckShapes() const {
  if (w1.rows() != w2.cols()) throw ShapeError("MLP hidden dimensions disagree");
  if (!w1.allFinite() || !w2.allFinite()) throw NumericError("MLP parameters are not finite");
}

Checkpoint MlpParams::ToCheckpoint() const {
  return Checkpoint{CheckpointKind::kMlp, {{"w1", w1}, {"w2", w2}}};
}

MlpParams MlpParams::FromCheckpoint(const Checkpoint& checkpoint) {
  if (checkpoint.kind != CheckpointKind::kMlp) throw ConfigError("checkpoint is not an MLP");
  MlpParams params{checkpoint.Get("w1"), checkpoint.Get("w2")};
  params.CheckShapes();
  return params;
}

MlpParams InitMlpParams(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed) {
  Rng rng = MakeRng(seed);
  MlpParams params;
  params.w1 = GlorotUniform(hidden_dim, input_dim, rng);
  params.w2 = GlorotUniform(num_classes, hidden_dim, rng);
  return params;
}

Eigen::VectorXd MlpLogits(const Eigen::VectorXd& x, const MlpParams& params) {
  params.CheckShapes();
  if (x.size() != params.input_dim()) throw ShapeError("MLP input has wrong length");
  return params.w2 * (params.w1 * x).cwiseMax(0.0);
}

Prediction MlpForward(const Eigen::VectorXd& x, const MlpParams& params) {
  const Eigen::VectorXd logits = MlpLogits(x, params);
  Prediction p;
  p.probability_vector.resize(logits.size());
  SoftmaxRow(logits, p.probability_vector);
  p.class_index = ArgmaxFirst(p.probability_vector);
  p.confidence = p.probability_vector[p.class_index];
  return p;
}

MlpGradient MlpLossAndGradient(const Eigen::MatrixXd& inputs, std::span<const int> targets,
                               const MlpParams& params, double weight_decay) {
  params.CheckShapes();
  if (inputs.cols() != params.input_dim()) throw ShapeError("MLP input has wrong width");
  if (static_cast<std::size_t>(inputs.rows()) != targets.size() || targets.empty()) {
    throw ShapeError("need one target per input row and at least one row");
  }
  const Eigen::MatrixXd pre = inputs * params.w1.transpose();
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::MatrixXd logits = hidden * params.w2.transpose();
  const double scale = 1.0 / static_cast<double>(targets.size());
  Eigen::MatrixXd dlogits(logits.rows(), logits.cols());
  MlpGradient grad;
  Eigen::RowVectorXd probs(logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = targets[i];
    if (y < 0 || y >= params.num_classes()) throw BoundsError("target class out of range");
    const double lse = SoftmaxRow(logits.row(i), probs);
    grad.loss += (lse - logits(i, y)) * scale;
    probs[y] -= 1.0;
    dlogits.row(i) = probs * scale;
  }
  grad.loss += 0.5 * weight_decay * (params.w1.squaredNorm() + params.w2.squaredNorm());
  grad.w2 = dlogits.transpose() * hidden + weight_decay * params.w2;
  Eigen::MatrixXd dpre = dlogits * params.w2;
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grad.w1 = dpre.transpose() * inputs + weight_decay * params.w1;
  return grad;
}

MlpParams TrainMlp(const Eigen::MatrixXd& inputs, std::span<const int> targets, int num_classes,
                   const MlpTrainConfig& config) {
  if (!(config.learning_rate > 0.0) || config.epochs < 0 || config.batch_size < 1) {
    throw ConfigError("invalid MLP training configuration");
  }
  if (config.noise) config.noise->Validate();
  MlpParams params = InitMlpParams(static_cast<int>(inputs.cols()), config.hidden_dim, num_classes,
                                   MixSeed(config.seed, 1));
  AdamState adam1(params.w1);
  AdamState adam2(params.w2);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng shuffle_rng = MakeRng(config.seed, 2);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Rng noise_rng = config.noise ? MakeRng(config.noise->seed, static_cast<std::uint64_t>(epoch))
                                 : Rng();
    std::normal_distribution<double> normal(0.0, config.noise ? config.noise->sigma : 1.0);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(stop - start), inputs.cols());
      std::vector<int> batch_targets;
      for (std::size_t i = start; i < stop; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) = inputs.row(order[i]);
        batch_targets.push_back(targets[order[i]]);
      }
      if (config.noise) {
        for (Eigen::Index c = 0; c < batch.cols(); ++c) {
          for (Eigen::Index r = 0; r < batch.rows(); ++r) batch(r, c) += normal(noise_rng);
        }
      }
      const MlpGradient grad = MlpLossAndGradient(batch, batch_targets, params, config.weight_decay);
      adam1.Step(params.w1, grad.w1, config.learning_rate);
      adam2.Step(params.w2, grad.w2, config.learning_rate);
    }
  }
  return params;
}

}  // namespace auditvotes
