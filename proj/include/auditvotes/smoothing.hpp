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

#ifndef AUDITVOTES_SMOOTHING_HPP_
#define AUDITVOTES_SMOOTHING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "auditvotes/graph.hpp"

namespace auditvotes {

// Independent edge flips: each absent pair is added with probability p_plus,
// each present edge is removed with probability p_minus.
struct SparseNoiseConfig {
  double p_plus = 0.0;
  double p_minus = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Draw `sample_index` of the sparse flip distribution around `graph`.
// Deterministic in (config.seed, sample_index). Additions are generated by
// geometric skipping over the absent pairs, so the cost is proportional to the
// number of flips rather than to n^2.
SparseGraph SampleSparseNoise(const SparseGraph& graph, const SparseNoiseConfig& config,
                              std::uint64_t sample_index);

struct PartitionConfig {
  int num_groups = 1;
  std::string hash_name = "md5";

  void Validate() const;
};

// 0-based group of the edge between nodes with external ids a and b. The ids
// are concatenated smaller-first so both orientations hash identically.
int EdgeGroup(std::string_view a, std::string_view b, int num_groups);

// Splits the edge set into num_groups disjoint subgraphs on the full node set.
std::vector<SparseGraph> HashPartition(const SparseGraph& graph, const PartitionConfig& config,
                                       const IdMap& ids);

struct GaussianNoiseConfig {
  double sigma = 0.25;
  std::uint64_t seed = 0;

  void Validate() const;
};

// x + eps with eps ~ N(0, sigma^2 I); deterministic in (config.seed, sample_index).
Eigen::VectorXd SampleGaussianNoise(const Eigen::VectorXd& x, const GaussianNoiseConfig& config,
                                    std::uint64_t sample_index);

}  // namespace auditvotes

#endif  // AUDITVOTES_SMOOTHING_HPP_
