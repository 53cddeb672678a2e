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

#ifndef AUDITVOTES_VOTING_HPP_
#define AUDITVOTES_VOTING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auditvotes/classifiers.hpp"
#include "auditvotes/graph.hpp"

namespace auditvotes {

enum class FilterKind { kNone, kConfidence, kHomophily, kJsd };

std::string_view ToString(FilterKind kind);
FilterKind ParseFilterKind(std::string_view name);

// A vote counts when its filter value is > theta; the JSD filter instead keeps
// votes whose divergence is < theta.
struct FilterConfig {
  FilterKind kind = FilterKind::kNone;
  double theta = 0.0;

  void Validate() const;
};

// Filter metric of node v given predictions on the graph they were made on.
//   confidence: max class probability
//   homophily: share of neighbors with v's pseudo-label (isolated nodes: 0)
//   jsd: H(mean neighbor distribution) - mean neighbor entropy (isolated nodes: 0)
double FilterValue(const NodePredictions& predictions, const SparseGraph& graph, NodeId v,
                   FilterKind kind);
std::vector<double> FilterValues(const NodePredictions& predictions, const SparseGraph& graph,
                                 FilterKind kind);
bool PassesFilter(double value, const FilterConfig& filter);

struct VoteTally {
  std::vector<std::int64_t> counts;
  std::int64_t n_valid = 0;
  std::int64_t n_total = 0;

  VoteTally() = default;
  explicit VoteTally(int num_classes) : counts(static_cast<std::size_t>(num_classes), 0) {}

  void Merge(const VoteTally& other);
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

// Accumulates one tally per target node over a stream of smoothing samples.
class VoteCollector {
 public:
  VoteCollector(std::vector<NodeId> nodes, int num_classes, FilterConfig filter);

  // Predictions made on `sample`, covering every node of it.
  void Add(const NodePredictions& predictions, const SparseGraph& sample);
  void Merge(const VoteCollector& other);

  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<VoteTally>& tallies() const { return tallies_; }
  std::vector<VoteTally> TakeTallies() && { return std::move(tallies_); }

 private:
  std::vector<NodeId> nodes_;
  int num_classes_;
  FilterConfig filter_;
  std::vector<VoteTally> tallies_;
};

// The two most voted classes; ties go to the smaller index. runner_up is -1
// with a single class.
struct TopTwo {
  int top = 0;
  std::int64_t n_top = 0;
  int runner_up = -1;
  std::int64_t n_runner_up = 0;
};

TopTwo TopTwoClasses(const VoteTally& tally);

struct ProbabilityBounds {
  double p_a_lower = 0.0;
  double p_b_upper = 0.0;
  double alpha = 0.0;
};

// One-sided Clopper-Pearson bounds at level alpha / num_classes (or alpha when
// bonferroni is off). Empty when the tally holds no valid vote.
std::optional<ProbabilityBounds> ClopperPearsonBounds(const VoteTally& tally, double alpha,
                                                      int num_classes, bool bonferroni = true);

double ClopperPearsonLower(std::int64_t successes, std::int64_t trials, double level);
double ClopperPearsonUpper(std::int64_t successes, std::int64_t trials, double level);

// Exact two-sided binomial test of k successes in n trials at p = 1/2.
double TwoSidedBinomialPValue(std::int64_t k, std::int64_t n);

enum class Decision { kProceed, kAbstain };

Decision AbstainTest(const VoteTally& tally, double alpha);

// CSV "node,class,count,n_valid,n_total", one row per node and class.
void WriteTalliesCsv(const std::string& path, std::span<const NodeId> nodes,
                     std::span<const VoteTally> tallies);

}  // namespace auditvotes

#endif  // AUDITVOTES_VOTING_HPP_
