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

#include "auditvotes/voting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <boost/math/special_functions/beta.hpp>

#include "auditvotes/error.hpp"

namespace auditvotes {
namespace {

double Entropy(const double* p, int c) {
  double h = 0.0;
  for (int k = 0; k < c; ++k) {
    if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
  }
  return h;
}

}  // namespace

std::string_view ToString(FilterKind kind) {
  switch (kind) {
    case FilterKind::kNone:
      return "none";
    case FilterKind::kConfidence:
      return "confidence";
    case FilterKind::kHomophily:
      return "homophily";
    case FilterKind::kJsd:
      return "jsd";
  }
  return "unknown";
}

FilterKind ParseFilterKind(std::string_view name) {
  if (name == "none") return FilterKind::kNone;
  if (name == "confidence" || name == "conf") return FilterKind::kConfidence;
  if (name == "homophily") return FilterKind::kHomophily;
  if (name == "jsd") return FilterKind::kJsd;
  throw ConfigError("unknown filter '" + std::string(name) + "'");
}

void FilterConfig::Validate() const {
  if (kind == FilterKind::kNone) return;
  if (!std::isfinite(theta)) throw ConfigError("filter threshold must be finite");
  if ((kind == FilterKind::kConfidence || kind == FilterKind::kHomophily) &&
      (theta < 0.0 || theta > 1.0)) {
    throw ConfigError("filter threshold must lie in [0, 1]");
  }
  if (kind == FilterKind::kJsd && theta < 0.0) throw ConfigError("JSD threshold must be >= 0");
}

double FilterValue(const NodePredictions& predictions, const SparseGraph& graph, NodeId v,
                   FilterKind kind) {
  switch (kind) {
    case FilterKind::kNone:
      return 0.0;
    case FilterKind::kConfidence:
      return predictions.confidence[v];
    case FilterKind::kHomophily: {
      const auto nbrs = graph.neighbors(v);
      if (nbrs.empty()) return 0.0;
      const int own = predictions.classes[v];
      std::int64_t same = 0;
      for (NodeId u : nbrs) same += predictions.classes[u] == own;
      return static_cast<double>(same) / static_cast<double>(nbrs.size());
    }
    case FilterKind::kJsd: {
      const auto nbrs = graph.neighbors(v);
      if (nbrs.empty()) return 0.0;
      const int c = predictions.num_classes();
      std::vector<double> mean(static_cast<std::size_t>(c), 0.0);
      double mean_entropy = 0.0;
      for (NodeId u : nbrs) {
        const double* p = predictions.probabilities.row(u).data();
        for (int k = 0; k < c; ++k) mean[k] += p[k];
        mean_entropy += Entropy(p, c);
      }
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (double& m : mean) m *= inv;
      return std::max(0.0, Entropy(mean.data(), c) - mean_entropy * inv);
    }
  }
  throw ConfigError("unknown filter kind");
}

std::vector<double> FilterValues(const NodePredictions& predictions, const SparseGraph& graph,
                                 FilterKind kind) {
  std::vector<double> values(static_cast<std::size_t>(graph.num_nodes()));
  for (NodeId v = 0; v < graph.num_nodes(); ++v) values[v] = FilterValue(predictions, graph, v, kind);
  return values;
}

bool PassesFilter(double value, const FilterConfig& filter) {
  switch (filter.kind) {
    case FilterKind::kNone:
      return true;
    case FilterKind::kJsd:
      return value < filter.theta;
    default:
      return value > filter.theta;
  }
}

void VoteTally::Merge(const VoteTally& other) {
  if (counts.size() != other.counts.size()) throw ShapeError("tallies have different class counts");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  n_valid += other.n_valid;
  n_total += other.n_total;
}

VoteCollector::VoteCollector(std::vector<NodeId> nodes, int num_classes, FilterConfig filter)
    : nodes_(std::move(nodes)), num_classes_(num_classes), filter_(filter),
      tallies_(nodes_.size(), VoteTally(num_classes)) {
  if (num_classes < 1) throw ConfigError("need at least one class");
  filter_.Validate();
}

void VoteCollector::Add(const NodePredictions& predictions, const SparseGraph& sample) {
  if (predictions.num_nodes() != sample.num_nodes() ||
      predictions.num_classes() != num_classes_) {
    throw ShapeError("predictions do not match the sample graph");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const NodeId v = nodes_[i];
    VoteTally& t = tallies_[i];
    ++t.n_total;
    if (filter_.kind != FilterKind::kNone &&
        !PassesFilter(FilterValue(predictions, sample, v, filter_.kind), filter_)) {
      continue;
    }
    ++t.counts[static_cast<std::size_t>(predictions.classes[v])];
    ++t.n_valid;
  }
}

void VoteCollector::Merge(const VoteCollector& other) {
  if (other.nodes_ != nodes_) throw ShapeError("collectors track different nodes");
  for (std::size_t i = 0; i < tallies_.size(); ++i) tallies_[i].Merge(other.tallies_[i]);
}

TopTwo TopTwoClasses(const VoteTally& tally) {
  TopTwo t;
  const int c = static_cast<int>(tally.counts.size());
  for (int k = 1; k < c; ++k) {
    if (tally.counts[k] > tally.counts[t.top]) t.top = k;
  }
  t.n_top = c > 0 ? tally.counts[t.top] : 0;
  for (int k = 0; k < c; ++k) {
    if (k == t.top) continue;
    if (t.runner_up < 0 || tally.counts[k] > tally.counts[t.runner_up]) t.runner_up = k;
  }
  if (t.runner_up >= 0) t.n_runner_up = tally.counts[t.runner_up];
  return t;
}

double ClopperPearsonLower(std::int64_t successes, std::int64_t trials, double level) {
  if (trials < 1 || successes < 0 || successes > trials) throw BoundsError("invalid binomial counts");
  if (successes == 0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(successes),
                                static_cast<double>(trials - successes + 1), level);
}

double ClopperPearsonUpper(std::int64_t successes, std::int64_t trials, double level) {
  if (trials < 1 || successes < 0 || successes > trials) throw BoundsError("invalid binomial counts");
  if (successes == trials) return 1.0;
  return boost::math::ibeta_inv(static_cast<double>(successes + 1),
                                static_cast<double>(trials - successes), 1.0 - level);
}

std::optional<ProbabilityBounds> ClopperPearsonBounds(const VoteTally& tally, double alpha,
                                                      int num_classes, bool bonferroni) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (num_classes < 1) throw ConfigError("need at least one class");
  if (tally.n_valid == 0) return std::nullopt;
  const double level = bonferroni ? alpha / num_classes : alpha;
  const TopTwo top = TopTwoClasses(tally);
  ProbabilityBounds b;
  b.alpha = level;
  b.p_a_lower = ClopperPearsonLower(top.n_top, tally.n_valid, level);
  b.p_b_upper = std::min(1.0 - b.p_a_lower,
                         ClopperPearsonUpper(top.n_runner_up, tally.n_valid, level));
  return b;
}

double TwoSidedBinomialPValue(std::int64_t k, std::int64_t n) {
  if (n < 0 || k < 0 || k > n) throw BoundsError("invalid binomial counts");
  if (n == 0) return 1.0;
  const std::int64_t m = std::max(k, n - k);
  // P(X >= m) for X ~ Binomial(n, 1/2).
  const double tail = boost::math::ibeta(static_cast<double>(m), static_cast<double>(n - m + 1), 0.5);
  return std::min(1.0, 2.0 * tail);
}

Decision AbstainTest(const VoteTally& tally, double alpha) {
  if (tally.n_valid == 0) return Decision::kAbstain;
  const TopTwo top = TopTwoClasses(tally);
  const double p = TwoSidedBinomialPValue(top.n_top, top.n_top + top.n_runner_up);
  return p > alpha ? Decision::kAbstain : Decision::kProceed;
}

void WriteTalliesCsv(const std::string& path, std::span<const NodeId> nodes,
                     std::span<const VoteTally> tallies) {
  if (nodes.size() != tallies.size()) throw ShapeError("one tally per node expected");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "node,class,count,n_valid,n_total\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const VoteTally& t = tallies[i];
    for (std::size_t k = 0; k < t.counts.size(); ++k) {
      out << nodes[i] << ',' << k << ',' << t.counts[k] << ',' << t.n_valid << ',' << t.n_total
          << '\n';
    }
  }
  if (!out) throw Error("failed writing " + path);
}

}  // namespace auditvotes
