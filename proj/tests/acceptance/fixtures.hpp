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


// Shared harness and fixtures for the acceptance binaries.
#ifndef AUDITVOTES_TESTS_ACCEPTANCE_FIXTURES_HPP_
#define AUDITVOTES_TESTS_ACCEPTANCE_FIXTURES_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "auditvotes/config.hpp"
#include "auditvotes/graph.hpp"

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string name;
  double time_limit_seconds = 0.0;  // 0: no limit
  std::function<Outcome()> run;
};

// Runs each criterion and prints one "PASS"/"FAIL" line per criterion. An
// exception or an exceeded time limit is a failure. Returns the exit code.
int RunCriteria(const std::vector<Criterion>& criteria);

// Small random graph with dense-ish random features and labels v % classes.
auditvotes::SparseGraph RandomGraph(auditvotes::NodeId n, int feature_dim, double edge_p,
                                    int classes, std::uint64_t seed);

// The SBM experiment the pipeline tests use: small classifier, fast training.
auditvotes::ExperimentConfig SbmExperiment(std::uint64_t seed = 0);

}  // namespace acceptance

#endif  // AUDITVOTES_TESTS_ACCEPTANCE_FIXTURES_HPP_
