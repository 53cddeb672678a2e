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


#include "fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <memory>
#include <random>

#include "auditvotes/rng.hpp"

namespace acceptance {

int RunCriteria(const std::vector<Criterion>& criteria) {
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_seconds > 0.0 && secs > c.time_limit_seconds) {
      out.pass = false;
      out.detail += "; exceeded " + std::to_string(c.time_limit_seconds) + " s";
    }
    failed += !out.pass;
    std::printf("%s criterion %d (%s) [%.1f s]: %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

auditvotes::SparseGraph RandomGraph(auditvotes::NodeId n, int feature_dim, double edge_p,
                                    int classes, std::uint64_t seed) {
  using namespace auditvotes;
  Rng rng(seed);
  std::bernoulli_distribution coin(edge_p);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.push_back({u, v});
    }
  }
  std::vector<Eigen::Triplet<double>> t;
  for (NodeId v = 0; v < n; ++v) {
    for (int k = 0; k < feature_dim; ++k) {
      if (val(rng) < 0.6) t.emplace_back(v, k, val(rng));
    }
  }
  auto labels = std::make_shared<std::vector<int>>(n);
  for (NodeId v = 0; v < n; ++v) (*labels)[v] = v % classes;
  return SparseGraph(n, edges,
                     std::make_shared<const FeatureMatrix>(FeaturesFromTriplets(n, feature_dim, t)),
                     labels, classes);
}

auditvotes::ExperimentConfig SbmExperiment(std::uint64_t seed) {
  auditvotes::ExperimentConfig c;
  c.seed = seed;
  c.classifier.train.learning_rate = 1e-2;
  c.classifier.train.max_epochs = 200;
  c.classifier.train.patience = 50;
  c.classifier.train.hidden_dim = 32;
  c.classifier.train.validation_samples = 2;
  return c;
}

}  // namespace acceptance
