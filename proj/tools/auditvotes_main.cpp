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


// auditvotes: command line front end for training, certification and reports.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "auditvotes/augment.hpp"
#include "auditvotes/checkpoint.hpp"
#include "auditvotes/config.hpp"
#include "auditvotes/error.hpp"
#include "auditvotes/pipeline.hpp"

namespace av = auditvotes;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// Flags shared by every run subcommand. Later sources win:
// config file, then environment, then --set, then the named flags.
struct RunFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> threads;
  std::optional<int> candidate_k;
  std::optional<int> dense_limit;
  std::optional<std::string> score_cache;
};

void AddRunFlags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "config file (key = value sections)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override one key, e.g. --set smoothing.p_plus=0.2")
      ->allow_extra_args(false);
  cmd->add_option("-o,--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("-n,--samples", f.samples, "Monte Carlo samples N");
  cmd->add_option("-j,--threads", f.threads, "worker threads, 0 for all cores");
  cmd->add_option("--candidate-k", f.candidate_k, "score candidates kept per node");
  cmd->add_option("--dense-limit", f.dense_limit, "largest graph with a dense score table");
  cmd->add_option("--score-cache", f.score_cache, "directory for cached score tables");
}

av::ExperimentConfig Resolve(const RunFlags& f, std::optional<av::Scheme> scheme) {
  av::ExperimentConfig c = f.config_path.empty() ? av::ExperimentConfig{}
                                                 : av::ExperimentConfig::Load(f.config_path);
  c.ApplyEnvironment();
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw av::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    c.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.out) c.output_dir = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.samples) c.num_samples = *f.samples;
  if (f.threads) c.threads = *f.threads;
  if (f.candidate_k) c.augmenter.scores.candidate_k = *f.candidate_k;
  if (f.dense_limit) c.augmenter.scores.dense_limit = *f.dense_limit;
  if (f.score_cache) c.augmenter.score_cache = *f.score_cache;
  if (scheme) c.scheme = *scheme;
  c.Validate();
  return c;
}

void SaveWithJson(const av::Checkpoint& ckpt, const fs::path& base) {
  av::SaveCheckpoint(ckpt, base.string() + ".ckpt");
  av::ExportCheckpointJson(ckpt, base.string() + ".json");
  std::cerr << "wrote " << base.string() << ".ckpt\n";
}

void PrintSummary(const av::RunResult& r, const av::ExperimentConfig& c) {
  av::WriteOutputs(r, c, c.output_dir);
  std::cout << av::SummarizeReportJson(r.report.ToJson());
  std::cerr << "wrote " << (fs::path(c.output_dir) / "report.json").string() << '\n';
}

int Train(const RunFlags& f) {
  const av::ExperimentConfig c = Resolve(f, std::nullopt);
  fs::create_directories(c.output_dir);
  const fs::path out(c.output_dir);
  if (c.scheme == av::Scheme::kGaussian) {
    const av::DenseDataset data = av::LoadDenseDataset(c);
    const av::MlpParams model = av::PrepareMlp(c, data);
    SaveWithJson(model.ToCheckpoint(), out / "classifier");
  } else {
    av::GraphExperiment e = av::LoadGraphExperiment(c);
    av::PrepareAugmenter(c, e);
    av::PrepareClassifier(c, e);
    SaveWithJson(e.classifier.ToCheckpoint(), out / "classifier");
    std::cout << "base accuracy on test nodes: " << e.base_accuracy << '\n';
  }
  c.Save((out / "config.ini").string());
  return kExitOk;
}

int TrainAugmenter(const RunFlags& f) {
  const av::ExperimentConfig c = Resolve(f, std::nullopt);
  if (c.scheme == av::Scheme::kGaussian) throw av::ConfigError("the gaussian scheme has no augmenter");
  if (!c.augmenter.kind || *c.augmenter.kind == av::ScoreKind::kJaccard) {
    throw av::ConfigError("train-aug needs augmenter.kind = fae or sim");
  }
  fs::create_directories(c.output_dir);
  const fs::path out(c.output_dir);
  av::GraphExperiment e = av::LoadGraphExperiment(c);
  av::PrepareAugmenter(c, e);
  SaveWithJson(e.augmenter_params->ToCheckpoint(), out / "augmenter");
  if (!e.augmenter_loss.empty()) {
    std::ofstream loss(out / "augmenter_loss.csv");
    loss << "epoch,loss\n";
    for (std::size_t i = 0; i < e.augmenter_loss.size(); ++i) {
      loss << i << ',' << e.augmenter_loss[i] << '\n';
    }
    std::cout << "augmenter loss " << e.augmenter_loss.front() << " -> " << e.augmenter_loss.back()
              << '\n';
  }
  c.Save((out / "config.ini").string());
  return kExitOk;
}

std::vector<av::NodeId> ParseTargets(const std::string& text) {
  std::vector<av::NodeId> ids;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 0) throw av::ConfigError("bad target id '" + item + "'");
    ids.push_back(static_cast<av::NodeId>(v));
  }
  return ids;
}

int Report(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "report.json";
  std::ifstream in(p);
  if (!in) throw av::ConfigError("cannot read " + p.string());
  std::ostringstream text;
  text << in.rdbuf();
  std::cout << av::SummarizeReportJson(text.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified robustness of graph classifiers under randomized smoothing"};
  app.require_subcommand(1);

  RunFlags flags;
  int budget = 0;
  std::string targets;
  std::string report_path;

  auto* train = app.add_subcommand("train", "train the classifier and save its checkpoint");
  auto* train_aug = app.add_subcommand("train-aug", "train the FAE or SimAug edge scorer");
  auto* certify = app.add_subcommand("certify", "sparse randomized smoothing certificates");
  auto* gnncert = app.add_subcommand("gnncert", "hash-partition voting certificates");
  auto* gaussian = app.add_subcommand("gaussian", "Gaussian smoothing on dense inputs");
  auto* attack = app.add_subcommand("attack-eval", "random-flip attacks on test nodes");
  auto* report = app.add_subcommand("report", "summarize a report.json");
  for (CLI::App* cmd : {train, train_aug, certify, gnncert, gaussian, attack}) AddRunFlags(cmd, flags);
  attack->add_option("--budget", budget, "edges added and deleted per target")
      ->required()
      ->check(CLI::NonNegativeNumber);
  attack->add_option("--targets", targets, "comma-separated node ids; default all test nodes");
  report->add_option("path", report_path, "run directory or report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return Train(flags);
    if (*train_aug) return TrainAugmenter(flags);
    if (*certify) {
      const auto c = Resolve(flags, av::Scheme::kSparse);
      PrintSummary(av::RunRandomizedPipeline(c), c);
    } else if (*gnncert) {
      const auto c = Resolve(flags, av::Scheme::kPartition);
      PrintSummary(av::RunGnnCertPipeline(c), c);
    } else if (*gaussian) {
      const auto c = Resolve(flags, av::Scheme::kGaussian);
      PrintSummary(av::RunGaussianPipeline(c), c);
    } else if (*attack) {
      const auto c = Resolve(flags, av::Scheme::kSparse);
      const std::vector<av::NodeId> ids = ParseTargets(targets);
      PrintSummary(av::RunEmpiricalEval(c, budget, ids), c);
    } else if (*report) {
      return Report(report_path);
    }
    return kExitOk;
  } catch (const av::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const av::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const av::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const av::SplitError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const av::BoundsError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const av::ShapeError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
