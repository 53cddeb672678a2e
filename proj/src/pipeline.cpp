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


#include "auditvotes/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "auditvotes/checkpoint.hpp"
#include "auditvotes/error.hpp"
#include "auditvotes/logging.hpp"
#include "auditvotes/rng.hpp"
#include "auditvotes/smoothing.hpp"

namespace auditvotes {
namespace {

using Clock = std::chrono::steady_clock;
using Json = nlohmann::ordered_json;

// Contiguous stage intervals, so the stages add up to the elapsed time.
class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), start_(Clock::now()), last_(start_) {}

  void Mark(std::string stage) {
    const auto now = Clock::now();
    out_.push_back({std::move(stage), std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  Clock::time_point start_;
  Clock::time_point last_;
};

double TotalSeconds(const std::vector<StageTiming>& timings) {
  double total = 0.0;
  for (const StageTiming& t : timings) total += t.seconds;
  return total;
}

// Runs fn(worker, index) for index in [0, count) on `workers` threads. The
// first exception stops the loop and is rethrown.
template <typename Fn>
void ParallelFor(std::int64_t count, int workers, Fn&& fn) {
  workers = static_cast<int>(std::clamp<std::int64_t>(workers, 1, std::max<std::int64_t>(count, 1)));
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](int worker) {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(worker, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
  }
  if (error) std::rethrow_exception(error);
}

GraphSnapshot Snapshot(const SparseGraph& g) {
  GraphSnapshot s;
  s.edges = static_cast<double>(g.num_edges());
  if (g.has_labels()) s.homophily = MeanHomophily(g, g.labels());
  return s;
}

void Accumulate(GraphSnapshot& into, const GraphSnapshot& x) {
  into.edges += x.edges;
  into.homophily += x.homophily;
}

GraphSnapshot Average(const std::vector<GraphSnapshot>& xs) {
  GraphSnapshot s;
  for (const GraphSnapshot& x : xs) Accumulate(s, x);
  if (!xs.empty()) {
    s.edges /= static_cast<double>(xs.size());
    s.homophily /= static_cast<double>(xs.size());
  }
  return s;
}

// Graph statistics come from the first samples only.
constexpr std::int64_t kStatsGraphs = 10;

// Position of each listed node within `order`.
std::vector<NodeId> PositionsIn(std::span<const NodeId> order, std::span<const NodeId> nodes,
                                NodeId num_nodes) {
  std::vector<NodeId> where(static_cast<std::size_t>(num_nodes), -1);
  for (std::size_t i = 0; i < order.size(); ++i) where[order[i]] = static_cast<NodeId>(i);
  std::vector<NodeId> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (where[v] < 0) throw ConfigError("node " + std::to_string(v) + " missing from subgraph");
    out.push_back(where[v]);
  }
  return out;
}

ThresholdPair SchemeThresholds(const ExperimentConfig& config, const EdgeScoreMatrix& scores,
                               double e_ratio, NodeId n) {
  if (config.scheme == Scheme::kPartition) {
    return GnnCertThreshold(scores, e_ratio, n, config.partition.num_groups,
                            config.augmenter.population);
  }
  return NoiseAdaptiveThresholds(scores, e_ratio, n, config.sparse_noise, config.augmenter.population);
}

SparseNoiseConfig SmoothingNoise(const ExperimentConfig& config) {
  SparseNoiseConfig noise = config.sparse_noise;
  noise.seed = DeriveSeed(config.seed, Stream::kSmoothingNoise);
  return noise;
}

double Round6(double x) {
  if (!std::isfinite(x)) return x;
  return std::round(x * 1e6) / 1e6;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

Json SnapshotJson(const GraphSnapshot& s) {
  return Json{{"edges", Round6(s.edges)}, {"homophily", Round6(s.homophily)}};
}

void CheckScheme(const ExperimentConfig& config, Scheme want) {
  config.Validate();
  if (config.scheme != want) {
    throw ConfigError("run.scheme is '" + std::string(ToString(config.scheme)) + "', this run needs '" +
                      std::string(ToString(want)) + "'");
  }
}

std::vector<int> LabelsOf(const SparseGraph& g, std::span<const NodeId> nodes) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(g.labels()[v]);
  return out;
}

int PredictedClass(const VoteTally& t) { return t.n_valid > 0 ? TopTwoClasses(t).top : -1; }

}  // namespace

double Report::CertifiedAccuracy(int r_a, int r_d) const {
  for (const BudgetAccuracy& b : sparse_grid) {
    if (b.r_a == r_a && b.r_d == r_d) return b.certified_accuracy;
  }
  throw BoundsError("budget (" + std::to_string(r_a) + ", " + std::to_string(r_d) + ") not in report");
}

std::string Report::ToJson() const {
  Json j;
  j["scheme"] = scheme;
  j["num_nodes"] = num_nodes;
  j["num_samples"] = num_samples;
  j["base_accuracy"] = Round6(base_accuracy);
  j["clean_accuracy"] = Round6(clean_accuracy);
  j["abstain_rate"] = Round6(abstain_rate);
  if (!sparse_grid.empty()) {
    Json grid = Json::array();
    for (const BudgetAccuracy& b : sparse_grid) {
      grid.push_back({{"r_a", b.r_a}, {"r_d", b.r_d}, {"certified_accuracy", Round6(b.certified_accuracy)}});
    }
    j["certified_accuracy"] = std::move(grid);
  }
  if (!partition_curve.empty()) {
    Json curve = Json::array();
    for (std::size_t m = 0; m < partition_curve.size(); ++m) {
      curve.push_back({{"m", m}, {"certified_accuracy", Round6(partition_curve[m])}});
    }
    j["certified_accuracy"] = std::move(curve);
  }
  if (!radius_curve.empty()) {
    Json curve = Json::array();
    for (const RadiusAccuracy& r : radius_curve) {
      curve.push_back({{"radius", Round6(r.radius)}, {"certified_accuracy", Round6(r.certified_accuracy)}});
    }
    j["certified_accuracy"] = std::move(curve);
  }
  if (mean_certified_radius) j["mean_certified_radius"] = Round6(*mean_certified_radius);
  if (graph_stats) {
    Json s;
    s["graphs"] = graph_stats->graphs;
    s["clean"] = SnapshotJson(graph_stats->clean);
    s["noisy"] = SnapshotJson(graph_stats->noisy);
    if (graph_stats->augmented) s["augmented"] = SnapshotJson(*graph_stats->augmented);
    if (graph_stats->reconstruction_auc) s["reconstruction_auc"] = Round6(*graph_stats->reconstruction_auc);
    j["graph_stats"] = std::move(s);
  }
  if (empirical) {
    j["empirical"] = {{"budget", empirical->budget},
                      {"targets", empirical->targets},
                      {"accuracy_before", Round6(empirical->accuracy_before)},
                      {"accuracy_after", Round6(empirical->accuracy_after)},
                      {"certified", empirical->certified},
                      {"certified_flipped", empirical->certified_flipped}};
  }
  Json t = Json::object();
  for (const StageTiming& s : timings) t[s.stage] = Round6(s.seconds);
  j["timings"] = std::move(t);
  j["total_seconds"] = Round6(total_seconds);
  return j.dump(2) + "\n";
}

std::string SummarizeReportJson(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "scheme          " << j.value("scheme", "?") << "\n";
  out << "nodes           " << j.value("num_nodes", 0) << "\n";
  out << "samples         " << j.value("num_samples", 0) << "\n";
  out << "base accuracy   " << j.value("base_accuracy", 0.0) << "\n";
  out << "clean accuracy  " << j.value("clean_accuracy", 0.0) << "\n";
  out << "abstain rate    " << j.value("abstain_rate", 0.0) << "\n";
  if (j.contains("certified_accuracy")) {
    out << "certified accuracy\n";
    for (const Json& row : j["certified_accuracy"]) {
      if (row.contains("r_a")) {
        const int ra = row["r_a"];
        const int rd = row["r_d"];
        // The two axes of the grid.
        if (ra != 0 && rd != 0) continue;
        out << "  r_a=" << std::setw(3) << ra << " r_d=" << std::setw(3) << rd;
      } else if (row.contains("m")) {
        out << "  m=" << std::setw(3) << row["m"].get<int>();
      } else {
        out << "  radius=" << row["radius"].get<double>();
      }
      out << "  " << row["certified_accuracy"].get<double>() << "\n";
    }
  }
  if (j.contains("graph_stats")) {
    const Json& s = j["graph_stats"];
    for (const char* key : {"clean", "noisy", "augmented"}) {
      if (!s.contains(key)) continue;
      out << std::left << std::setw(16) << (std::string(key) + " graph") << std::right
          << "edges " << s[key]["edges"].get<double>() << "  homophily "
          << s[key]["homophily"].get<double>() << "\n";
    }
    if (s.contains("reconstruction_auc")) {
      out << "reconstruction AUC " << s["reconstruction_auc"].get<double>() << "\n";
    }
  }
  if (j.contains("empirical")) {
    const Json& e = j["empirical"];
    out << "attack budget " << e["budget"].get<int>() << ": accuracy "
        << e["accuracy_before"].get<double>() << " -> " << e["accuracy_after"].get<double>()
        << ", certified " << e["certified"].get<int>() << ", flipped "
        << e["certified_flipped"].get<int>() << "\n";
  }
  if (j.contains("timings")) {
    out << "timings (s)";
    for (const auto& [stage, secs] : j["timings"].items()) out << "  " << stage << " " << secs.get<double>();
    out << "\n";
  }
  return out.str();
}

void WriteOutputs(const RunResult& result, const ExperimentConfig& config, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  {
    std::ofstream out(base / "report.json");
    if (!out) throw Error("cannot write " + (base / "report.json").string());
    out << result.report.ToJson();
  }
  config.Save((base / "config.ini").string());
  WriteTalliesCsv((base / "tallies.csv").string(), result.nodes, result.tallies);
  const std::string grid_path = (base / "grid.csv").string();
  if (result.grid) {
    result.grid->WriteCsv(grid_path);
    return;
  }
  std::ofstream out(grid_path);
  if (!out) throw Error("cannot write " + grid_path);
  if (!result.partition.empty()) {
    out << "node,label,predicted,budget\n";
    for (std::size_t i = 0; i < result.partition.size(); ++i) {
      out << result.nodes[i] << ',' << result.labels[i] << ',' << result.partition[i].predicted << ','
          << result.partition[i].budget << '\n';
    }
  } else {
    out << "node,label,predicted,radius\n";
    for (std::size_t i = 0; i < result.radii.size(); ++i) {
      out << result.nodes[i] << ',' << result.labels[i] << ',' << PredictedClass(result.tallies[i])
          << ',' << FormatDouble(result.radii[i]) << '\n';
    }
  }
  if (!out) throw Error("failed writing " + grid_path);
}

GraphExperiment LoadGraphExperiment(const ExperimentConfig& config) {
  config.Validate();
  if (config.scheme == Scheme::kGaussian) throw ConfigError("the gaussian scheme has no graph");
  GraphExperiment e;
  StageClock clock(e.timings);
  if (!config.data.edges.empty()) {
    LoadOptions options;
    options.binarize = config.data.binarize;
    e.full = LoadDataset(config.data.edges, config.data.features, config.data.labels, options);
  } else {
    SbmConfig sbm = config.data.sbm;
    sbm.seed = DeriveSeed(config.seed, Stream::kData);
    e.full = GenerateSbm(sbm);
  }
  if (!e.full.has_labels()) throw ConfigError("dataset has no labels");
  e.ids = IdMap::Identity(e.full.num_nodes());
  clock.Mark("data");

  e.split = MakeInductiveSplit(e.full, config.data.per_class_labeled, config.data.test_fraction,
                               DeriveSeed(config.seed, Stream::kSplit));
  const std::vector<NodeId> train_nodes = e.split.TrainingNodes();
  const std::vector<NodeId> validation_nodes = e.split.ValidationGraphNodes();
  const std::vector<NodeId> test_nodes = e.split.TestGraphNodes();
  e.train_graph = InducedSubgraph(e.full, train_nodes);
  e.validation_graph = InducedSubgraph(e.full, validation_nodes);
  e.test_graph = InducedSubgraph(e.full, test_nodes);
  e.test_ids = e.split.test;
  std::sort(e.test_ids.begin(), e.test_ids.end());
  e.test_positions = PositionsIn(test_nodes, e.test_ids, e.full.num_nodes());
  clock.Mark("split");
  return e;
}

void PrepareAugmenter(const ExperimentConfig& config, GraphExperiment& e) {
  if (!config.augmenter.kind) return;
  StageClock clock(e.timings);
  const ScoreKind kind = *config.augmenter.kind;
  AugmenterParams params;
  params.kind = kind;
  if (kind != ScoreKind::kJaccard) {
    if (!config.augmenter.checkpoint.empty()) {
      params = AugmenterParams::FromCheckpoint(LoadCheckpoint(config.augmenter.checkpoint));
      if (params.kind != kind) {
        throw ConfigError("augmenter checkpoint holds " + std::string(ToString(params.kind)) +
                          " weights but augmenter.kind is " + std::string(ToString(kind)));
      }
      const Eigen::Index d = kind == ScoreKind::kFae ? params.fae.w2.rows() : params.sim.weights.cols();
      if (d != e.full.feature_dim()) {
        throw ConfigError("augmenter checkpoint expects " + std::to_string(d) + " features, data has " +
                          std::to_string(e.full.feature_dim()));
      }
    } else {
      AugmenterTrainConfig train = config.augmenter.train;
      train.seed = DeriveSeed(config.seed, Stream::kAugmenter);
      AugmenterTrainResult r = TrainAugmenter(e.train_graph, kind, train);
      params = std::move(r.params);
      e.augmenter_loss = std::move(r.loss_history);
    }
  }
  e.test_scores = std::make_shared<const EdgeScoreMatrix>(
      CachedScores(e.test_graph, params, config.augmenter.scores, config.augmenter.score_cache));
  e.augmenter_params = std::move(params);
  clock.Mark("augmenter");
}

std::unique_ptr<GraphAugmenter> MakeTestAugmenter(const ExperimentConfig& config,
                                                  const GraphExperiment& e) {
  if (!e.test_scores) return nullptr;
  const ThresholdPair t =
      SchemeThresholds(config, *e.test_scores, EdgeSparsity(e.train_graph), e.test_graph.num_nodes());
  return std::make_unique<GraphAugmenter>(e.test_scores, t);
}

void PrepareClassifier(const ExperimentConfig& config, GraphExperiment& e) {
  StageClock clock(e.timings);
  const int classes = e.num_classes();
  if (!config.classifier.checkpoint.empty()) {
    e.classifier = GcnParams::FromCheckpoint(LoadCheckpoint(config.classifier.checkpoint));
    if (e.classifier.input_dim() != e.full.feature_dim() || e.classifier.num_classes() != classes) {
      throw ConfigError("classifier checkpoint is " + std::to_string(e.classifier.input_dim()) + " -> " +
                        std::to_string(e.classifier.num_classes()) + ", data is " +
                        std::to_string(e.full.feature_dim()) + " -> " + std::to_string(classes));
    }
  } else {
    TrainConfig train = config.classifier.train;
    train.seed = DeriveSeed(config.seed, Stream::kClassifierInit);
    bool noisy = false;
    if (config.classifier.noisy_training) {
      SparseNoiseConfig noise = config.sparse_noise;
      if (config.scheme == Scheme::kPartition) {
        // A hash subgraph keeps each edge with probability 1/T.
        noise = {0.0, 1.0 - 1.0 / config.partition.num_groups, 0};
      }
      noise.seed = DeriveSeed(config.seed, Stream::kClassifierNoise);
      noisy = noise.p_plus > 0.0 || noise.p_minus > 0.0;
      if (noisy) train.noise = noise;
    }
    GcnTrainingData data;
    data.train_graph = &e.train_graph;
    data.validation_graph = &e.validation_graph;
    data.train_nodes = PositionsIn(e.split.TrainingNodes(), e.split.labeled_train, e.full.num_nodes());
    data.validation_nodes =
        PositionsIn(e.split.ValidationGraphNodes(), e.split.validation, e.full.num_nodes());
    if (e.augmenter_params && noisy) {
      // The classifier sees the same rewired graphs it will vote on.
      const double ratio = EdgeSparsity(e.train_graph);
      auto make = [&](const SparseGraph& g) {
        auto scores = std::make_shared<const EdgeScoreMatrix>(
            CachedScores(g, *e.augmenter_params, config.augmenter.scores,
                         config.augmenter.score_cache));
        auto aug = std::make_shared<const GraphAugmenter>(
            scores, SchemeThresholds(config, *scores, ratio, g.num_nodes()));
        return GraphTransform([aug](const SparseGraph& noisy_graph) { return (*aug)(noisy_graph); });
      };
      data.train_transform = make(e.train_graph);
      data.validation_transform = make(e.validation_graph);
    }
    e.classifier = TrainGcn(data, train).params;
  }
  e.base_accuracy =
      Accuracy(GcnForward(e.test_graph, e.classifier), e.test_positions, e.test_graph.labels());
  clock.Mark("classifier");
}

GraphExperiment PrepareGraphExperiment(const ExperimentConfig& config) {
  GraphExperiment e = LoadGraphExperiment(config);
  PrepareAugmenter(config, e);
  PrepareClassifier(config, e);
  return e;
}

std::vector<VoteTally> CollectSparseVotes(const SparseGraph& graph, const GcnInference& model,
                                          const GraphAugmenter* augmenter,
                                          std::span<const NodeId> nodes, int num_classes,
                                          const FilterConfig& filter,
                                          const SparseNoiseConfig& noise, int num_samples,
                                          int threads, AugmentationStats* stats) {
  if (num_samples < 1) throw ConfigError("need at least one sample");
  const int workers = std::clamp(threads, 1, num_samples);
  const std::vector<NodeId> node_list(nodes.begin(), nodes.end());
  std::vector<VoteCollector> collectors(static_cast<std::size_t>(workers),
                                        VoteCollector(node_list, num_classes, filter));
  const std::int64_t stat_graphs = stats ? std::min<std::int64_t>(num_samples, kStatsGraphs) : 0;
  std::vector<GraphSnapshot> noisy(static_cast<std::size_t>(stat_graphs));
  std::vector<GraphSnapshot> rewired(static_cast<std::size_t>(stat_graphs));
  ParallelFor(num_samples, workers, [&](int w, std::int64_t i) {
    SparseGraph sample = SampleSparseNoise(graph, noise, static_cast<std::uint64_t>(i));
    if (i < stat_graphs) noisy[i] = Snapshot(sample);
    if (augmenter != nullptr) {
      sample = (*augmenter)(sample);
      if (i < stat_graphs) rewired[i] = Snapshot(sample);
    }
    collectors[w].Add(model.Predict(sample), sample);
  });
  for (std::size_t w = 1; w < collectors.size(); ++w) collectors[0].Merge(collectors[w]);
  if (stats) {
    stats->graphs = static_cast<int>(stat_graphs);
    stats->noisy = Average(noisy);
    if (augmenter != nullptr) stats->augmented = Average(rewired);
  }
  return std::move(collectors[0]).TakeTallies();
}

RunResult RunRandomizedPipeline(const ExperimentConfig& config) {
  CheckScheme(config, Scheme::kSparse);
  return RunRandomizedPipeline(config, PrepareGraphExperiment(config));
}

RunResult RunRandomizedPipeline(const ExperimentConfig& config, const GraphExperiment& e) {
  CheckScheme(config, Scheme::kSparse);
  RunResult res;
  Report& rep = res.report;
  rep.timings = e.timings;
  StageClock clock(rep.timings);
  const int classes = e.num_classes();
  const GcnInference model(e.test_graph.features(), e.classifier);
  const std::unique_ptr<GraphAugmenter> aug = MakeTestAugmenter(config, e);
  const SparseNoiseConfig noise = SmoothingNoise(config);
  AugmentationStats stats;
  res.tallies = CollectSparseVotes(e.test_graph, model, aug.get(), e.test_positions, classes,
                                   config.filter, noise, config.num_samples,
                                   config.ResolvedThreads(), &stats);
  clock.Mark("sampling");
  stats.clean = Snapshot(e.test_graph);
  if (aug) {
    stats.reconstruction_auc = ReconstructionAuc(e.test_graph, e.test_scores->AsFunction(),
                                                 DeriveSeed(config.seed, Stream::kAugmenter));
  }
  res.nodes = e.test_ids;
  res.labels = LabelsOf(e.full, res.nodes);
  res.grid = CertifyGrid(res.nodes, res.tallies, e.full.labels(), noise, classes, config.max_ra,
                         config.max_rd, {config.alpha, config.bonferroni});
  clock.Mark("certify");

  rep.scheme = std::string(ToString(config.scheme));
  rep.num_nodes = static_cast<int>(res.nodes.size());
  rep.num_samples = config.num_samples;
  rep.base_accuracy = e.base_accuracy;
  rep.clean_accuracy = res.grid->CleanAccuracy();
  rep.abstain_rate = res.grid->AbstainRate();
  for (int ra = 0; ra <= config.max_ra; ++ra) {
    for (int rd = 0; rd <= config.max_rd; ++rd) {
      rep.sparse_grid.push_back({ra, rd, res.grid->CertifiedAccuracy(ra, rd)});
    }
  }
  rep.graph_stats = stats;
  rep.total_seconds = TotalSeconds(rep.timings);
  return res;
}

RunResult RunGnnCertPipeline(const ExperimentConfig& config) {
  CheckScheme(config, Scheme::kPartition);
  return RunGnnCertPipeline(config, PrepareGraphExperiment(config));
}

RunResult RunGnnCertPipeline(const ExperimentConfig& config, const GraphExperiment& e) {
  CheckScheme(config, Scheme::kPartition);
  if (config.filter.kind != FilterKind::kNone) {
    LogWarning("partition voting counts every vote; filter." + std::string(ToString(config.filter.kind)) +
               " is ignored");
  }
  RunResult res;
  Report& rep = res.report;
  rep.timings = e.timings;
  StageClock clock(rep.timings);
  const int classes = e.num_classes();
  std::vector<std::string> external;
  for (NodeId v : e.split.TestGraphNodes()) external.push_back(e.ids.external(v));
  const std::vector<SparseGraph> groups = HashPartition(e.test_graph, config.partition, IdMap(external));
  clock.Mark("partition");

  const GcnInference model(e.test_graph.features(), e.classifier);
  const std::unique_ptr<GraphAugmenter> aug = MakeTestAugmenter(config, e);
  const auto count = static_cast<std::int64_t>(groups.size());
  const int workers = static_cast<int>(std::clamp<std::int64_t>(config.ResolvedThreads(), 1, count));
  std::vector<VoteCollector> collectors(static_cast<std::size_t>(workers),
                                        VoteCollector(e.test_positions, classes, {}));
  std::vector<GraphSnapshot> noisy(groups.size());
  std::vector<GraphSnapshot> rewired(groups.size());
  ParallelFor(count, workers, [&](int w, std::int64_t i) {
    const SparseGraph* g = &groups[i];
    noisy[i] = Snapshot(*g);
    SparseGraph augmented;
    if (aug) {
      augmented = (*aug)(*g);
      rewired[i] = Snapshot(augmented);
      g = &augmented;
    }
    collectors[w].Add(model.Predict(*g), *g);
  });
  for (std::size_t w = 1; w < collectors.size(); ++w) collectors[0].Merge(collectors[w]);
  res.tallies = std::move(collectors[0]).TakeTallies();
  clock.Mark("voting");

  res.nodes = e.test_ids;
  res.labels = LabelsOf(e.full, res.nodes);
  std::vector<char> correct(res.nodes.size());
  for (std::size_t i = 0; i < res.tallies.size(); ++i) {
    res.partition.push_back(GnnCertCertify(res.tallies[i]));
    correct[i] = res.partition[i].predicted == res.labels[i];
  }
  const double n = std::max<double>(1.0, static_cast<double>(res.nodes.size()));
  rep.partition_curve.assign(static_cast<std::size_t>(config.max_partition_budget) + 1, 0.0);
  for (int m = 0; m <= config.max_partition_budget; ++m) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < correct.size(); ++i) hits += correct[i] && res.partition[i].budget >= m;
    rep.partition_curve[m] = static_cast<double>(hits) / n;
  }
  clock.Mark("certify");

  rep.scheme = std::string(ToString(config.scheme));
  rep.num_nodes = static_cast<int>(res.nodes.size());
  rep.num_samples = static_cast<int>(groups.size());
  rep.base_accuracy = e.base_accuracy;
  rep.clean_accuracy = static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / n;
  AugmentationStats stats;
  stats.graphs = static_cast<int>(groups.size());
  stats.clean = Snapshot(e.test_graph);
  stats.noisy = Average(noisy);
  if (aug) {
    stats.augmented = Average(rewired);
    stats.reconstruction_auc = ReconstructionAuc(e.test_graph, e.test_scores->AsFunction(),
                                                 DeriveSeed(config.seed, Stream::kAugmenter));
  }
  rep.graph_stats = stats;
  rep.total_seconds = TotalSeconds(rep.timings);
  return res;
}

namespace {

// Rows "label,x1,...,xd"; blank lines and '#' comments skipped.
void ReadDenseCsv(const std::string& path, Eigen::MatrixXd& x, std::vector<int>& y) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (field.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(path, line_no, "bad number '" + field + "'");
      }
    }
    if (row.size() < 2) throw ParseError(path, line_no, "expected 'label,x1,...'");
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path, line_no, "row width differs from the first row");
    }
    if (row[0] < 0 || row[0] != std::floor(row[0])) throw ParseError(path, line_no, "bad label");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + " has no rows");
  x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size() - 1));
  y.clear();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y.push_back(static_cast<int>(rows[i][0]));
    for (std::size_t k = 1; k < rows[i].size(); ++k) x(i, k - 1) = rows[i][k];
  }
}

void MakeBlobs(const BlobConfig& c, int per_class, Rng& rng, Eigen::MatrixXd& x, std::vector<int>& y) {
  std::normal_distribution<double> normal(0.0, c.spread);
  x.resize(2 * per_class, c.dim);
  y.resize(static_cast<std::size_t>(2 * per_class));
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i % 2;
    y[i] = label;
    for (int k = 0; k < c.dim; ++k) x(i, k) = normal(rng);
    x(i, 0) += (label == 0 ? -0.5 : 0.5) * c.separation;
  }
}

}  // namespace

DenseDataset LoadDenseDataset(const ExperimentConfig& config) {
  config.Validate();
  DenseDataset d;
  if (!config.blobs.train_csv.empty()) {
    ReadDenseCsv(config.blobs.train_csv, d.train_x, d.train_y);
    ReadDenseCsv(config.blobs.test_csv, d.test_x, d.test_y);
    if (d.train_x.cols() != d.test_x.cols()) throw ConfigError("train and test widths differ");
  } else {
    Rng train = MakeRng(DeriveSeed(config.seed, Stream::kData), 0);
    Rng test = MakeRng(DeriveSeed(config.seed, Stream::kData), 1);
    MakeBlobs(config.blobs, config.blobs.train_per_class, train, d.train_x, d.train_y);
    MakeBlobs(config.blobs, config.blobs.test_per_class, test, d.test_x, d.test_y);
  }
  d.num_classes = 1 + std::max(*std::max_element(d.train_y.begin(), d.train_y.end()),
                               *std::max_element(d.test_y.begin(), d.test_y.end()));
  return d;
}

MlpParams PrepareMlp(const ExperimentConfig& config, const DenseDataset& data) {
  if (!config.classifier.checkpoint.empty()) {
    MlpParams p = MlpParams::FromCheckpoint(LoadCheckpoint(config.classifier.checkpoint));
    if (p.input_dim() != data.train_x.cols() || p.num_classes() != data.num_classes) {
      throw ConfigError("classifier checkpoint does not match the dense dataset");
    }
    return p;
  }
  MlpTrainConfig train = config.classifier.mlp;
  train.seed = DeriveSeed(config.seed, Stream::kClassifierInit);
  if (config.classifier.noisy_training) {
    train.noise = GaussianNoiseConfig{config.gaussian.sigma, DeriveSeed(config.seed, Stream::kClassifierNoise)};
  }
  return TrainMlp(data.train_x, data.train_y, data.num_classes, train);
}

RunResult RunGaussianPipeline(const ExperimentConfig& config) {
  CheckScheme(config, Scheme::kGaussian);
  std::vector<StageTiming> timings;
  StageClock clock(timings);
  const DenseDataset data = LoadDenseDataset(config);
  clock.Mark("data");
  const MlpParams model = PrepareMlp(config, data);
  clock.Mark("classifier");
  RunResult res = RunGaussianPipeline(config, data, model);
  timings.insert(timings.end(), res.report.timings.begin(), res.report.timings.end());
  res.report.timings = std::move(timings);
  res.report.total_seconds = TotalSeconds(res.report.timings);
  return res;
}

RunResult RunGaussianPipeline(const ExperimentConfig& config, const DenseDataset& data,
                              const MlpParams& model) {
  CheckScheme(config, Scheme::kGaussian);
  if (config.filter.kind != FilterKind::kNone && config.filter.kind != FilterKind::kConfidence) {
    throw ConfigError("dense inputs support filter.kind none or confidence");
  }
  RunResult res;
  Report& rep = res.report;
  StageClock clock(rep.timings);
  const auto n = static_cast<std::int64_t>(data.test_x.rows());
  const int classes = data.num_classes;
  const std::uint64_t noise_root = DeriveSeed(config.seed, Stream::kSmoothingNoise);
  res.tallies.assign(static_cast<std::size_t>(n), VoteTally(classes));
  ParallelFor(n, config.ResolvedThreads(), [&](int, std::int64_t i) {
    const Eigen::VectorXd x = data.test_x.row(i).transpose();
    const GaussianNoiseConfig noise{config.gaussian.sigma, MixSeed(noise_root, static_cast<std::uint64_t>(i))};
    VoteTally& t = res.tallies[i];
    for (int s = 0; s < config.num_samples; ++s) {
      const Prediction p = MlpForward(SampleGaussianNoise(x, noise, static_cast<std::uint64_t>(s)), model);
      ++t.n_total;
      if (!PassesFilter(p.confidence, config.filter)) continue;
      ++t.counts[static_cast<std::size_t>(p.class_index)];
      ++t.n_valid;
    }
  });
  clock.Mark("sampling");

  std::size_t base_correct = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  double radius_sum = 0.0;
  std::size_t radius_count = 0;
  std::vector<char> ok(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    res.nodes.push_back(static_cast<NodeId>(i));
    res.labels.push_back(data.test_y[i]);
    base_correct += MlpForward(data.test_x.row(i).transpose(), model).class_index == data.test_y[i];
    const VoteTally& t = res.tallies[i];
    const auto bounds = ClopperPearsonBounds(t, config.alpha, classes, config.bonferroni);
    const double r = bounds ? GaussianRadius(*bounds, config.gaussian.sigma) : 0.0;
    res.radii.push_back(r);
    ok[i] = PredictedClass(t) == data.test_y[i];
    correct += ok[i];
    abstained += r <= 0.0;
    if (ok[i] && r > 0.0) {
      radius_sum += r;
      ++radius_count;
    }
  }
  const double denom = std::max<double>(1.0, static_cast<double>(n));
  for (double radius : config.radii) {
    std::size_t hits = 0;
    for (std::int64_t i = 0; i < n; ++i) hits += ok[i] && res.radii[i] > 0.0 && res.radii[i] >= radius;
    rep.radius_curve.push_back({radius, static_cast<double>(hits) / denom});
  }
  clock.Mark("certify");
  rep.scheme = std::string(ToString(config.scheme));
  rep.num_nodes = static_cast<int>(n);
  rep.num_samples = config.num_samples;
  rep.base_accuracy = static_cast<double>(base_correct) / denom;
  rep.clean_accuracy = static_cast<double>(correct) / denom;
  rep.abstain_rate = static_cast<double>(abstained) / denom;
  if (radius_count > 0) rep.mean_certified_radius = radius_sum / static_cast<double>(radius_count);
  rep.total_seconds = TotalSeconds(rep.timings);
  return res;
}

SparseGraph RandomFlipAttack(const SparseGraph& graph, NodeId target, int budget, std::uint64_t seed) {
  if (target < 0 || target >= graph.num_nodes()) throw BoundsError("attack target out of range");
  if (budget < 0) throw ConfigError("attack budget must be non-negative");
  Rng rng = MakeRng(seed, static_cast<std::uint64_t>(target));
  const auto nbrs = graph.neighbors(target);
  std::vector<NodeId> drop(nbrs.begin(), nbrs.end());
  std::shuffle(drop.begin(), drop.end(), rng);
  drop.resize(std::min<std::size_t>(drop.size(), static_cast<std::size_t>(budget)));
  std::vector<NodeId> add;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (v != target && !std::binary_search(nbrs.begin(), nbrs.end(), v)) add.push_back(v);
  }
  std::shuffle(add.begin(), add.end(), rng);
  add.resize(std::min<std::size_t>(add.size(), static_cast<std::size_t>(budget)));

  std::sort(drop.begin(), drop.end());
  std::vector<Edge> edges;
  edges.reserve(graph.edges().size() + add.size());
  for (const Edge& e : graph.edges()) {
    const NodeId other = e.u == target ? e.v : (e.v == target ? e.u : -1);
    if (other >= 0 && std::binary_search(drop.begin(), drop.end(), other)) continue;
    edges.push_back(e);
  }
  for (NodeId v : add) edges.push_back({std::min(v, target), std::max(v, target)});
  std::sort(edges.begin(), edges.end());
  return graph.WithCanonicalEdges(std::move(edges));
}

RunResult RunEmpiricalEval(const ExperimentConfig& config, int attack_budget,
                           std::span<const NodeId> targets) {
  CheckScheme(config, Scheme::kSparse);
  return RunEmpiricalEval(config, PrepareGraphExperiment(config), attack_budget, targets);
}

RunResult RunEmpiricalEval(const ExperimentConfig& config, const GraphExperiment& e,
                           int attack_budget, std::span<const NodeId> targets) {
  CheckScheme(config, Scheme::kSparse);
  if (attack_budget < 0) throw ConfigError("attack budget must be non-negative");
  std::vector<NodeId> ids(targets.begin(), targets.end());
  if (ids.empty()) ids = e.test_ids;
  std::vector<NodeId> where(static_cast<std::size_t>(e.full.num_nodes()), -1);
  for (std::size_t i = 0; i < e.test_ids.size(); ++i) where[e.test_ids[i]] = e.test_positions[i];
  std::vector<NodeId> positions;
  for (NodeId v : ids) {
    if (v < 0 || v >= e.full.num_nodes() || where[v] < 0) {
      throw ConfigError("attack target " + std::to_string(v) + " is not a test node");
    }
    positions.push_back(where[v]);
  }

  RunResult res;
  Report& rep = res.report;
  rep.timings = e.timings;
  StageClock clock(rep.timings);
  const int classes = e.num_classes();
  const int threads = config.ResolvedThreads();
  const GcnInference model(e.test_graph.features(), e.classifier);
  const std::unique_ptr<GraphAugmenter> aug = MakeTestAugmenter(config, e);
  const SparseNoiseConfig noise = SmoothingNoise(config);
  res.tallies = CollectSparseVotes(e.test_graph, model, aug.get(), positions, classes, config.filter,
                                   noise, config.num_samples, threads);
  res.nodes = ids;
  res.labels = LabelsOf(e.full, ids);
  res.grid = CertifyGrid(ids, res.tallies, e.full.labels(), noise, classes, attack_budget,
                         attack_budget, {config.alpha, config.bonferroni});
  clock.Mark("sampling");

  EmpiricalResult emp;
  emp.budget = attack_budget;
  emp.targets = static_cast<int>(ids.size());
  const std::uint64_t attack_seed = DeriveSeed(config.seed, Stream::kAttack);
  std::size_t before = 0;
  std::size_t after = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const SparseGraph attacked = RandomFlipAttack(e.test_graph, positions[k], attack_budget, attack_seed);
    const NodeId p = positions[k];
    const VoteTally t = CollectSparseVotes(attacked, model, aug.get(), std::span<const NodeId>(&p, 1),
                                           classes, config.filter, noise, config.num_samples, threads)[0];
    const int was = PredictedClass(res.tallies[k]);
    const int now = PredictedClass(t);
    before += was == res.labels[k];
    after += now == res.labels[k];
    if (res.grid->Status(k, attack_budget, attack_budget) == CertStatus::kCertified) {
      ++emp.certified;
      emp.certified_flipped += now != was;
    }
  }
  const double denom = std::max<double>(1.0, static_cast<double>(ids.size()));
  emp.accuracy_before = static_cast<double>(before) / denom;
  emp.accuracy_after = static_cast<double>(after) / denom;
  clock.Mark("attack");

  rep.scheme = std::string(ToString(config.scheme));
  rep.num_nodes = emp.targets;
  rep.num_samples = config.num_samples;
  rep.base_accuracy = e.base_accuracy;
  rep.clean_accuracy = res.grid->CleanAccuracy();
  rep.abstain_rate = res.grid->AbstainRate();
  for (int ra = 0; ra <= attack_budget; ++ra) {
    for (int rd = 0; rd <= attack_budget; ++rd) {
      rep.sparse_grid.push_back({ra, rd, res.grid->CertifiedAccuracy(ra, rd)});
    }
  }
  rep.empirical = emp;
  rep.total_seconds = TotalSeconds(rep.timings);
  return res;
}

}  // namespace auditvotes
