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


#ifndef AUDITVOTES_CONFIG_HPP_
#define AUDITVOTES_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auditvotes/augment.hpp"
#include "auditvotes/classifiers.hpp"
#include "auditvotes/graph.hpp"
#include "auditvotes/smoothing.hpp"
#include "auditvotes/voting.hpp"

namespace auditvotes {

enum class Scheme { kSparse, kPartition, kGaussian };

std::string_view ToString(Scheme scheme);
Scheme ParseScheme(std::string_view name);

// Graph input: dataset files when `edges` is set, otherwise an SBM graph.
struct DataConfig {
  std::string edges;
  std::string features;
  std::string labels;
  bool binarize = false;
  SbmConfig sbm;
  int per_class_labeled = 20;
  double test_fraction = 0.2;
};

// Two isotropic Gaussian blobs split along the first axis, or CSV files with
// rows "label,x1,...,xd".
struct BlobConfig {
  std::string train_csv;
  std::string test_csv;
  int train_per_class = 500;
  int test_per_class = 100;
  int dim = 2;
  double separation = 1.0;
  double spread = 1.0;
};

struct AugmenterConfig {
  std::optional<ScoreKind> kind;  // unset: no augmentation
  std::string checkpoint;         // trained FAE/Sim weights; trained on the fly if empty
  std::string score_cache;        // directory of cached score tables; empty disables
  AugmenterTrainConfig train;
  ScoreOptions scores;
  RankPopulation population = RankPopulation::kPerSample;
};

struct ClassifierConfig {
  TrainConfig train;
  bool noisy_training = true;
  std::string checkpoint;  // trained weights; trained on the fly if empty
  MlpTrainConfig mlp;
};

struct ExperimentConfig {
  Scheme scheme = Scheme::kSparse;
  DataConfig data;
  BlobConfig blobs;
  ClassifierConfig classifier;
  AugmenterConfig augmenter;
  SparseNoiseConfig sparse_noise;
  PartitionConfig partition;
  GaussianNoiseConfig gaussian;
  FilterConfig filter;
  int num_samples = 10000;
  double alpha = 0.001;
  bool bonferroni = true;
  int max_ra = 20;
  int max_rd = 20;
  int max_partition_budget = 20;
  std::vector<double> radii{0.0, 0.25, 0.5, 0.75, 1.0};
  int threads = 0;  // 0: hardware concurrency
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void Validate() const;
  int ResolvedThreads() const;

  // "section.key" = value, as in the config file.
  void Set(std::string_view key, const std::string& value);
  std::string Get(std::string_view key) const;
  static std::vector<std::string> Keys();

  // Reads key = value sections; unknown keys are errors.
  static ExperimentConfig Load(const std::string& path);
  void MergeFile(const std::string& path);
  // AUDITVOTES_OUTPUT_DIR and AUDITVOTES_THREADS.
  void ApplyEnvironment();
  // Every key with its resolved value, loadable by Load().
  std::string ToIni() const;
  void Save(const std::string& path) const;
};

}  // namespace auditvotes

#endif  // AUDITVOTES_CONFIG_HPP_
