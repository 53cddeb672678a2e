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

#include "auditvotes/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <utility>

#include "auditvotes/error.hpp"
#include "auditvotes/md5.hpp"
#include "auditvotes/rng.hpp"

namespace auditvotes {

void SparseNoiseConfig::Validate() const {
  if (!(p_plus >= 0.0 && p_plus <= 1.0) || !(p_minus >= 0.0 && p_minus <= 1.0)) {
    throw ConfigError("flip probabilities must lie in [0, 1]");
  }
}

void PartitionConfig::Validate() const {
  if (num_groups < 1) throw ConfigError("partition needs at least one group");
  if (hash_name != "md5") throw ConfigError("unsupported partition hash '" + hash_name + "'");
}

void GaussianNoiseConfig::Validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be positive");
}

SparseGraph SampleSparseNoise(const SparseGraph& graph, const SparseNoiseConfig& config,
                              std::uint64_t sample_index) {
  config.Validate();
  Rng rng = MakeRng(config.seed, sample_index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const NodeId n = graph.num_nodes();
  const auto edges = graph.edges();

  std::vector<Edge> kept;
  if (config.p_minus == 0.0) {
    kept.assign(edges.begin(), edges.end());
  } else if (config.p_minus < 1.0) {
    kept.reserve(static_cast<std::size_t>(static_cast<double>(edges.size()) * (1.0 - config.p_minus) * 1.1) + 16);
    for (const Edge& e : edges) {
      if (unit(rng) >= config.p_minus) kept.push_back(e);
    }
  }
  if (config.p_plus == 0.0 || n < 2) return graph.WithCanonicalEdges(std::move(kept));

  // Walk the absent pairs in pair-index order. The gap to the next selected
  // absent pair is geometric, which reproduces independent Bernoulli(p_plus)
  // draws on every absent pair.
  const std::int64_t absent = PairCount(n) - static_cast<std::int64_t>(edges.size());
  const bool take_all = config.p_plus >= 1.0;
  const double log_keep = take_all ? 0.0 : std::log1p(-config.p_plus);
  std::vector<Edge> added;
  added.reserve(static_cast<std::size_t>(static_cast<double>(absent) * config.p_plus * 1.05) + 16);

  std::size_t edge_cursor = 0;
  NodeId row = 0;
  std::int64_t row_start = 0;
  std::int64_t ordinal = -1;
  while (true) {
    if (take_all) {
      ordinal += 1;
    } else {
      const double u = 1.0 - unit(rng);  // (0, 1]
      const double skip = std::floor(std::log(u) / log_keep);
      if (skip >= static_cast<double>(absent)) break;
      ordinal += static_cast<std::int64_t>(skip) + 1;
    }
    if (ordinal >= absent) break;
    // Translate the absent-pair ordinal into a pair index by stepping over the
    // present edges that precede it.
    std::int64_t index = ordinal + static_cast<std::int64_t>(edge_cursor);
    while (edge_cursor < edges.size() &&
           PairIndex(edges[edge_cursor].u, edges[edge_cursor].v, n) <= index) {
      ++edge_cursor;
      ++index;
    }
    while (row_start + (n - 1 - row) <= index) {
      row_start += n - 1 - row;
      ++row;
    }
    added.push_back(Edge{row, static_cast<NodeId>(index - row_start + row + 1)});
  }

  std::vector<Edge> merged;
  merged.reserve(kept.size() + added.size());
  std::merge(kept.begin(), kept.end(), added.begin(), added.end(), std::back_inserter(merged));
  return graph.WithCanonicalEdges(std::move(merged));
}

int EdgeGroup(std::string_view a, std::string_view b, int num_groups) {
  if (num_groups < 1) throw ConfigError("partition needs at least one group");
  std::string key;
  key.reserve(a.size() + b.size());
  if (b < a) std::swap(a, b);
  key.append(a);
  key.append(b);
  return static_cast<int>(DigestMod(Md5(key), static_cast<std::uint64_t>(num_groups)));
}

std::vector<SparseGraph> HashPartition(const SparseGraph& graph, const PartitionConfig& config,
                                       const IdMap& ids) {
  config.Validate();
  if (ids.size() < graph.num_nodes()) {
    throw ConfigError("id map covers " + std::to_string(ids.size()) + " of " +
                      std::to_string(graph.num_nodes()) + " nodes");
  }
  std::vector<std::vector<Edge>> groups(static_cast<std::size_t>(config.num_groups));
  for (const Edge& e : graph.edges()) {
    groups[EdgeGroup(ids.external(e.u), ids.external(e.v), config.num_groups)].push_back(e);
  }
  std::vector<SparseGraph> subgraphs;
  subgraphs.reserve(groups.size());
  for (auto& edges : groups) subgraphs.push_back(graph.WithCanonicalEdges(std::move(edges)));
  return subgraphs;
}

Eigen::VectorXd SampleGaussianNoise(const Eigen::VectorXd& x, const GaussianNoiseConfig& config,
                                    std::uint64_t sample_index) {
  config.Validate();
  Rng rng = MakeRng(config.seed, sample_index);
  std::normal_distribution<double> normal(0.0, config.sigma);
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] + normal(rng);
  return out;
}

}  // namespace auditvotes
