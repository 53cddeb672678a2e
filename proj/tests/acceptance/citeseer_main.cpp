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


// Acceptance checks on Citeseer. The dataset is read from
// $AUDITVOTES_CITESEER_DIR/{edges,features,labels}.tsv, as written by
// tools/convert_npz.py; without it every criterion here reports FAIL.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "auditvotes/pipeline.hpp"
#include "fixtures.hpp"

namespace av = auditvotes;
namespace fs = std::filesystem;
using acceptance::Outcome;

namespace {

std::optional<fs::path> DataDir() {
  const char* dir = std::getenv("AUDITVOTES_CITESEER_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  const fs::path p(dir);
  for (const char* f : {"edges.tsv", "features.tsv", "labels.tsv"}) {
    if (!fs::exists(p / f)) return std::nullopt;
  }
  return p;
}

av::ExperimentConfig CiteseerConfig(const fs::path& dir) {
  av::ExperimentConfig c;
  c.data.edges = (dir / "edges.tsv").string();
  c.data.features = (dir / "features.tsv").string();
  c.data.labels = (dir / "labels.tsv").string();
  c.data.per_class_labeled = 50;
  c.data.test_fraction = 0.2;
  c.num_samples = 10000;
  c.alpha = 0.001;
  c.seed = 0;
  return c;
}

Outcome Missing() {
  return {false,
          "Citeseer not found; set AUDITVOTES_CITESEER_DIR to a directory with edges.tsv, "
          "features.tsv and labels.tsv (see tools/convert_npz.py)"};
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// Results shared by criteria 8 and 9.
struct AdditionRuns {
  av::Report baseline;
  av::Report audited;
  double seconds = 0.0;
};

const AdditionRuns& RunAdditionPair(const fs::path& dir) {
  static const AdditionRuns runs = [&] {
    const auto start = std::chrono::steady_clock::now();
    AdditionRuns r;
    av::ExperimentConfig c = CiteseerConfig(dir);
    c.sparse_noise = {0.2, 0.6, 0};
    c.max_ra = 20;
    c.max_rd = 0;
    r.baseline = av::RunRandomizedPipeline(c).report;
    c.augmenter.kind = av::ScoreKind::kSim;
    c.filter = {av::FilterKind::kConfidence, 0.2};
    r.audited = av::RunRandomizedPipeline(c).report;
    r.seconds = Seconds(start);
    return r;
  }();
  return runs;
}

}  // namespace

int main() {
  const std::optional<fs::path> dir = DataDir();
  const unsigned cores = std::thread::hardware_concurrency();
  return acceptance::RunCriteria({
      {8, "Citeseer certified accuracy at r_a=20, GCN vs GCN+SimAug+Conf", 0.0,
       [&]() -> Outcome {
         if (!dir) return Missing();
         const AdditionRuns& r = RunAdditionPair(*dir);
         const double base = r.baseline.CertifiedAccuracy(20, 0);
         const double aug = r.audited.CertifiedAccuracy(20, 0);
         std::ostringstream d;
         d << "baseline " << base << " (want <= 0.30), audited " << aug << " (want >= 0.55), gap "
           << aug - base << " (want >= 0.30), " << r.seconds << " s on " << cores
           << " cores (want < 3600 on 8)";
         const bool pass = base <= 0.30 && aug >= 0.55 && aug - base >= 0.30 && r.seconds < 3600.0;
         return {pass, d.str()};
       }},
      {9, "Citeseer homophily restoration and SimAug AUC", 0.0,
       [&]() -> Outcome {
         if (!dir) return Missing();
         const av::AugmentationStats& s = *RunAdditionPair(*dir).audited.graph_stats;
         const double noisy = s.noisy.homophily;
         const double rewired = s.augmented ? s.augmented->homophily : 0.0;
         const double auc = s.reconstruction_auc.value_or(0.0);
         std::ostringstream d;
         d << "noisy homophily " << noisy << " (want < 0.30), rewired " << rewired
           << " (want > 0.70), AUC " << auc << " (want > 0.80)";
         return {noisy < 0.30 && rewired > 0.70 && auc > 0.80, d.str()};
       }},
      {11, "Citeseer certified accuracy at r_d=20, GCN vs GCN+Conf", 0.0,
       [&]() -> Outcome {
         if (!dir) return Missing();
         av::ExperimentConfig c = CiteseerConfig(*dir);
         c.sparse_noise = {0.0, 0.8, 0};
         c.max_ra = 0;
         c.max_rd = 20;
         const av::GraphExperiment e = av::PrepareGraphExperiment(c);
         const double base = av::RunRandomizedPipeline(c, e).report.CertifiedAccuracy(0, 20);
         c.filter = {av::FilterKind::kConfidence, 0.5};
         const double conf = av::RunRandomizedPipeline(c, e).report.CertifiedAccuracy(0, 20);
         std::ostringstream d;
         d << "GCN " << base << ", GCN+Conf " << conf << ", gain " << conf - base << " (want >= 0.03)";
         return {conf - base >= 0.03, d.str()};
       }},
  });
}
