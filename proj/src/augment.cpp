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

#include "auditvotes/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>

#include <Eigen/SparseCore>

#include "auditvotes/error.hpp"
#include "auditvotes/logging.hpp"
#include "auditvotes/md5.hpp"
#include "auditvotes/rng.hpp"

namespace auditvotes {
namespace {

using ColFeatures = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int32_t>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double Sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)) without overflow.
double Softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

bool HigherRanked(const ScoredPair& a, const ScoredPair& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.pair < b.pair;
}

// Sparse dot products of one row against every row sharing a column with it.
class OverlapAccumulator {
 public:
  explicit OverlapAccumulator(const FeatureMatrix& rows)
      : rows_(rows), cols_(rows), acc_(rows.rows(), 0.0), seen_(rows.rows(), 0) {}

  // fn(v, dot) for every v > min_v, v != u, with a shared nonzero column.
  template <class Fn>
  void Visit(NodeId u, NodeId min_v, Fn&& fn) {
    touched_.clear();
    const auto* outer = cols_.outerIndexPtr();
    const auto* inner = cols_.innerIndexPtr();
    const double* values = cols_.valuePtr();
    for (FeatureMatrix::InnerIterator it(rows_, u); it; ++it) {
      const auto f = it.col();
      const double xu = it.value();
      const auto* begin = inner + outer[f];
      const auto* end = inner + outer[f + 1];
      for (const auto* p = std::upper_bound(begin, end, min_v); p < end; ++p) {
        const NodeId v = *p;
        if (v == u) continue;
        if (!seen_[v]) {
          seen_[v] = 1;
          touched_.push_back(v);
        }
        acc_[v] += xu * values[p - inner];
      }
    }
    for (NodeId v : touched_) {
      fn(v, acc_[v]);
      acc_[v] = 0.0;
      seen_[v] = 0;
    }
  }

 private:
  const FeatureMatrix& rows_;
  ColFeatures cols_;
  std::vector<double> acc_;
  std::vector<char> seen_;
  std::vector<NodeId> touched_;
};

double SparseRowDot(const FeatureMatrix& m, NodeId u, NodeId v) {
  FeatureMatrix::InnerIterator a(m, u);
  FeatureMatrix::InnerIterator b(m, v);
  double dot = 0.0;
  while (a && b) {
    if (a.col() < b.col()) {
      ++a;
    } else if (b.col() < a.col()) {
      ++b;
    } else {
      dot += a.value() * b.value();
      ++a;
      ++b;
    }
  }
  return dot;
}

// Scores that are a function of a sparse row dot product: Jaccard on binary
// rows and SimAug on stacked, pre-normalized head rows.
class DotScorer final : public PairScorer {
 public:
  DotScorer(ScoreKind kind, FeatureMatrix rows) : kind_(kind), rows_(std::move(rows)) {
    rows_.makeCompressed();
    if (kind_ == ScoreKind::kJaccard) {
      sizes_.resize(rows_.rows());
      for (Eigen::Index u = 0; u < rows_.rows(); ++u) {
        sizes_[u] = static_cast<double>(rows_.outerIndexPtr()[u + 1] - rows_.outerIndexPtr()[u]);
      }
    }
  }

  NodeId num_nodes() const override { return static_cast<NodeId>(rows_.rows()); }

  double Transform(NodeId u, NodeId v, double dot) const {
    if (kind_ != ScoreKind::kJaccard) return dot;
    const double denom = sizes_[u] + sizes_[v] - dot;
    return denom > 0.0 ? dot / denom : 0.0;
  }

  double Score(NodeId u, NodeId v) const override {
    if (u == v) return 0.0;
    return Transform(u, v, SparseRowDot(rows_, u, v));
  }

  void ForEachRow(const RowVisitor& visit) const override {
    OverlapAccumulator acc(rows_);
    const NodeId n = num_nodes();
    std::vector<double> row;
    for (NodeId u = 0; u < n; ++u) {
      row.assign(static_cast<std::size_t>(n - u - 1), Transform(u, u, 0.0));
      acc.Visit(u, u, [&](NodeId v, double dot) { row[v - u - 1] = Transform(u, v, dot); });
      visit(u, row);
    }
  }

  const FeatureMatrix& rows() const { return rows_; }

 private:
  ScoreKind kind_;
  FeatureMatrix rows_;
  std::vector<double> sizes_;
};

class FaeScorer final : public PairScorer {
 public:
  explicit FaeScorer(RowMatrix z) : z_(std::move(z)) {}

  NodeId num_nodes() const override { return static_cast<NodeId>(z_.rows()); }

  double Score(NodeId u, NodeId v) const override {
    if (u == v) return 0.0;
    return Sigmoid(z_.row(u).dot(z_.row(v)));
  }

  // Calls fn(u, dots) with dots = z_u . z_v for all v, in row blocks.
  template <class Fn>
  void ForEachDotRow(Fn&& fn) const {
    const Eigen::Index n = z_.rows();
    constexpr Eigen::Index kBlock = 256;
    const Eigen::MatrixXd zt = z_.transpose();
    for (Eigen::Index r0 = 0; r0 < n; r0 += kBlock) {
      const Eigen::Index rows = std::min(kBlock, n - r0);
      const RowMatrix g = z_.middleRows(r0, rows) * zt;
      for (Eigen::Index i = 0; i < rows; ++i) {
        fn(static_cast<NodeId>(r0 + i), std::span<const double>(g.row(i).data(), n));
      }
    }
  }

  void ForEachRow(const RowVisitor& visit) const override {
    std::vector<double> row;
    ForEachDotRow([&](NodeId u, std::span<const double> dots) {
      row.resize(dots.size() - u - 1);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = Sigmoid(dots[u + 1 + j]);
      visit(u, row);
    });
  }

 private:
  RowMatrix z_;
};

// Keeps the k best (v, score) entries of one row.
void KeepTopK(std::vector<ScoredPair>& row, int k) {
  if (static_cast<int>(row.size()) > k) {
    std::nth_element(row.begin(), row.begin() + k, row.end(), HigherRanked);
    row.resize(static_cast<std::size_t>(k));
  }
}

std::vector<ScoredPair> MergeCandidates(std::vector<ScoredPair> candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.pair < b.pair; });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const ScoredPair& a, const ScoredPair& b) {
                                 return a.pair == b.pair;
                               }),
                   candidates.end());
  return candidates;
}

EdgeScoreMatrix BuildFromDotScorer(ScoreKind kind, std::shared_ptr<const DotScorer> scorer,
                                   const ScoreOptions& options) {
  const NodeId n = scorer->num_nodes();
  if (n <= options.dense_limit) {
    std::vector<double> upper(static_cast<std::size_t>(PairCount(n)), 0.0);
    scorer->ForEachRow([&](NodeId u, std::span<const double> row) {
      std::copy(row.begin(), row.end(), upper.begin() + PairIndex(u, u + 1, n));
    });
    return EdgeScoreMatrix(kind, n, std::move(upper), scorer);
  }
  if (options.candidate_k < 1) throw ConfigError("candidate_k must be positive");
  OverlapAccumulator acc(scorer->rows());
  std::vector<ScoredPair> candidates;
  std::vector<ScoredPair> row;
  for (NodeId u = 0; u < n; ++u) {
    row.clear();
    acc.Visit(u, -1, [&](NodeId v, double dot) {
      row.push_back({{std::min(u, v), std::max(u, v)}, scorer->Transform(u, v, dot)});
    });
    KeepTopK(row, options.candidate_k);
    candidates.insert(candidates.end(), row.begin(), row.end());
  }
  return EdgeScoreMatrix(kind, n, MergeCandidates(std::move(candidates)), scorer);
}

void CheckFeatures(const SparseGraph& graph) {
  if (!graph.features_ptr()) throw ShapeError("graph has no node features");
}

std::int64_t TolerantFloor(long double x) {
  const long double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9L * std::max<long double>(1.0L, std::fabs(x))) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::floor(x));
}

// Unordered-pair rank for a count of adjacency-matrix entries.
std::int64_t PairRank(std::int64_t entries) { return (entries + 1) / 2; }

std::int64_t ClampRank(std::int64_t rank, std::int64_t available, const char* what) {
  if (rank > available) {
    LogWarning(std::string(what) + " rank " + std::to_string(rank) + " exceeds the " +
               std::to_string(available) + " available pairs; clamped");
    return available;
  }
  return rank;
}

double KthLargestCandidate(const EdgeScoreMatrix& scores, std::int64_t k) {
  if (k <= 0) return kInf;
  const auto ranked = scores.ranked_candidates();
  if (ranked.empty()) return kInf;
  k = std::min<std::int64_t>(k, static_cast<std::int64_t>(ranked.size()));
  return ranked[static_cast<std::size_t>(k - 1)].score;
}

void ValidateEdgeRatio(double e_ratio, NodeId n_test) {
  if (!(e_ratio >= 0.0 && e_ratio <= 1.0)) throw ConfigError("e_ratio must lie in [0, 1]");
  if (n_test < 0) throw ConfigError("n_test must be non-negative");
}

std::shared_ptr<const DotScorer> MakeJaccardScorer(const SparseGraph& graph,
                                                   const ScoreOptions& options) {
  CheckFeatures(graph);
  FeatureMatrix rows;
  if (IsBinary(graph.features())) {
    rows = graph.features();
  } else if (options.binarize) {
    rows = Binarize(graph.features());
  } else {
    throw ConfigError("Jaccard scores need binary features; enable binarize to threshold at 0");
  }
  return std::make_shared<const DotScorer>(ScoreKind::kJaccard, std::move(rows));
}

std::shared_ptr<const FaeScorer> MakeFaeScorer(const SparseGraph& graph,
                                               const AugmenterParams& params) {
  CheckFeatures(graph);
  if (params.kind != ScoreKind::kFae || !params.trained()) {
    throw ConfigError("FAE scores need trained FAE parameters");
  }
  return std::make_shared<const FaeScorer>(FaeEmbeddings(graph.features(), params.fae));
}

std::shared_ptr<const DotScorer> MakeSimScorer(const SparseGraph& graph,
                                               const AugmenterParams& params) {
  CheckFeatures(graph);
  if (params.kind != ScoreKind::kSim || !params.trained()) {
    throw ConfigError("SimAug scores need trained SimAug parameters");
  }
  const FeatureMatrix& x = graph.features();
  const Eigen::MatrixXd& w = params.sim.weights;
  if (w.cols() != x.cols()) throw ShapeError("feature dim does not match SimAug weights");
  const auto m = w.rows();
  const auto d = x.cols();
  // Row u stacks the unit vectors w_q * x_u / |w_q * x_u|, scaled by 1/sqrt(m),
  // so a plain dot product is the mean head cosine.
  std::vector<Eigen::Triplet<double, std::int32_t>> triplets;
  triplets.reserve(static_cast<std::size_t>(x.nonZeros() * m));
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index u = 0; u < x.outerSize(); ++u) {
    for (Eigen::Index q = 0; q < m; ++q) {
      double norm2 = 0.0;
      for (FeatureMatrix::InnerIterator it(x, u); it; ++it) {
        const double a = w(q, it.col()) * it.value();
        norm2 += a * a;
      }
      if (norm2 <= 0.0) continue;
      const double scale = head_scale / std::sqrt(norm2);
      for (FeatureMatrix::InnerIterator it(x, u); it; ++it) {
        triplets.emplace_back(static_cast<std::int32_t>(u),
                              static_cast<std::int32_t>(q * d + it.col()),
                              w(q, it.col()) * it.value() * scale);
      }
    }
  }
  FeatureMatrix stacked(x.rows(), d * m);
  stacked.setFromTriplets(triplets.begin(), triplets.end());
  return std::make_shared<const DotScorer>(ScoreKind::kSim, std::move(stacked));
}

std::shared_ptr<const PairScorer> MakeScorer(const SparseGraph& graph,
                                             const AugmenterParams& params,
                                             const ScoreOptions& options) {
  switch (params.kind) {
    case ScoreKind::kJaccard:
      return MakeJaccardScorer(graph, options);
    case ScoreKind::kFae:
      return MakeFaeScorer(graph, params);
    case ScoreKind::kSim:
      return MakeSimScorer(graph, params);
  }
  throw ConfigError("unknown augmenter kind");
}

}  // namespace

std::string_view ToString(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kJaccard:
      return "jaccard";
    case ScoreKind::kFae:
      return "fae";
    case ScoreKind::kSim:
      return "sim";
  }
  return "unknown";
}

ScoreKind ParseScoreKind(std::string_view name) {
  if (name == "jaccard" || name == "jac") return ScoreKind::kJaccard;
  if (name == "fae") return ScoreKind::kFae;
  if (name == "sim") return ScoreKind::kSim;
  throw ConfigError("unknown augmenter '" + std::string(name) + "'");
}

std::string_view ToString(RankPopulation population) {
  return population == RankPopulation::kAllPairs ? "all-pairs" : "per-sample";
}

RankPopulation ParseRankPopulation(std::string_view name) {
  if (name == "all-pairs") return RankPopulation::kAllPairs;
  if (name == "per-sample") return RankPopulation::kPerSample;
  throw ConfigError("unknown rank population '" + std::string(name) + "'");
}

bool AugmenterParams::trained() const {
  switch (kind) {
    case ScoreKind::kJaccard:
      return true;
    case ScoreKind::kFae:
      return fae.w1.size() > 0 && fae.w2.size() > 0;
    case ScoreKind::kSim:
      return sim.weights.size() > 0;
  }
  return false;
}

Checkpoint AugmenterParams::ToCheckpoint() const {
  Checkpoint c;
  if (kind == ScoreKind::kFae) {
    c.kind = CheckpointKind::kFaeAugmenter;
    c.matrices = {{"w2", fae.w2}, {"w1", fae.w1}};
  } else if (kind == ScoreKind::kSim) {
    c.kind = CheckpointKind::kSimAugmenter;
    c.matrices = {{"weights", sim.weights}};
  } else {
    throw ConfigError("the Jaccard augmenter has no parameters to save");
  }
  return c;
}

AugmenterParams AugmenterParams::FromCheckpoint(const Checkpoint& checkpoint) {
  AugmenterParams p;
  if (checkpoint.kind == CheckpointKind::kFaeAugmenter) {
    p.kind = ScoreKind::kFae;
    p.fae.w2 = checkpoint.Get("w2");
    p.fae.w1 = checkpoint.Get("w1");
    if (p.fae.w2.cols() != p.fae.w1.rows()) throw ShapeError("FAE layer shapes disagree");
  } else if (checkpoint.kind == CheckpointKind::kSimAugmenter) {
    p.kind = ScoreKind::kSim;
    p.sim.weights = checkpoint.Get("weights");
  } else {
    throw ConfigError("checkpoint does not hold an augmenter");
  }
  return p;
}

RowMatrix FaeEmbeddings(const FeatureMatrix& features, const FaeParams& params) {
  if (features.cols() != params.w2.rows()) throw ShapeError("feature dim does not match FAE input");
  if (params.w2.cols() != params.w1.rows()) throw ShapeError("FAE layer shapes disagree");
  RowMatrix hidden = (features * params.w2).cwiseMax(0.0);
  return hidden * params.w1;
}

void PairScorer::ForEachRow(const RowVisitor& visit) const {
  const NodeId n = num_nodes();
  std::vector<double> row;
  for (NodeId u = 0; u < n; ++u) {
    row.resize(static_cast<std::size_t>(n - u - 1));
    for (NodeId v = u + 1; v < n; ++v) row[v - u - 1] = Score(u, v);
    visit(u, row);
  }
}

EdgeScoreMatrix::EdgeScoreMatrix(ScoreKind kind, NodeId num_nodes,
                                 std::vector<double> upper_triangle,
                                 std::shared_ptr<const PairScorer> scorer)
    : kind_(kind), num_nodes_(num_nodes), upper_(std::move(upper_triangle)),
      scorer_(std::move(scorer)) {
  if (static_cast<std::int64_t>(upper_.size()) != PairCount(num_nodes_)) {
    throw ShapeError("score table size does not match the pair count");
  }
  ranked_.resize(upper_.size());
  std::size_t i = 0;
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v = u + 1; v < num_nodes_; ++v, ++i) ranked_[i] = {{u, v}, upper_[i]};
  }
  std::sort(ranked_.begin(), ranked_.end(), HigherRanked);
}

EdgeScoreMatrix::EdgeScoreMatrix(ScoreKind kind, NodeId num_nodes,
                                 std::vector<ScoredPair> candidates,
                                 std::shared_ptr<const PairScorer> scorer)
    : kind_(kind), num_nodes_(num_nodes), ranked_(std::move(candidates)),
      scorer_(std::move(scorer)) {
  if (!scorer_) throw ConfigError("sparse score storage needs a pair scorer");
  std::sort(ranked_.begin(), ranked_.end(), HigherRanked);
}

double EdgeScoreMatrix::KthSmallestOverAllPairs(std::int64_t k) const {
  const std::int64_t total = PairCount(num_nodes_);
  if (k < 1 || k > total) throw BoundsError("order statistic rank out of range");
  if (!upper_.empty()) return ranked_[static_cast<std::size_t>(total - k)].score;

  // Streaming selection: range, then a histogram, then the one bin holding rank k.
  double lo = kInf;
  double hi = -kInf;
  scorer_->ForEachRow([&](NodeId, std::span<const double> row) {
    for (double s : row) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  });
  if (lo == hi) return lo;
  constexpr int kBins = 1 << 16;
  const double width = (hi - lo) / kBins;
  auto bin_of = [&](double s) {
    return std::min(kBins - 1, static_cast<int>((s - lo) / width));
  };
  std::vector<std::int64_t> counts(kBins, 0);
  scorer_->ForEachRow([&](NodeId, std::span<const double> row) {
    for (double s : row) ++counts[bin_of(s)];
  });
  int bin = 0;
  std::int64_t before = 0;
  while (before + counts[bin] < k) before += counts[bin++];
  std::vector<double> members;
  members.reserve(static_cast<std::size_t>(counts[bin]));
  scorer_->ForEachRow([&](NodeId, std::span<const double> row) {
    for (double s : row) {
      if (bin_of(s) == bin) members.push_back(s);
    }
  });
  const auto nth = members.begin() + (k - before - 1);
  std::nth_element(members.begin(), nth, members.end());
  return *nth;
}

EdgeScoreMatrix JaccardScores(const SparseGraph& graph, const ScoreOptions& options) {
  return BuildFromDotScorer(ScoreKind::kJaccard, MakeJaccardScorer(graph, options), options);
}

EdgeScoreMatrix FaeScores(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options) {
  auto scorer = MakeFaeScorer(graph, params);
  const NodeId n = graph.num_nodes();
  if (n <= options.dense_limit) {
    std::vector<double> upper(static_cast<std::size_t>(PairCount(n)));
    scorer->ForEachRow([&](NodeId u, std::span<const double> row) {
      std::copy(row.begin(), row.end(), upper.begin() + PairIndex(u, u + 1, n));
    });
    return EdgeScoreMatrix(ScoreKind::kFae, n, std::move(upper), scorer);
  }
  if (options.candidate_k < 1) throw ConfigError("candidate_k must be positive");
  std::vector<ScoredPair> candidates;
  std::vector<ScoredPair> row;
  scorer->ForEachDotRow([&](NodeId u, std::span<const double> dots) {
    row.clear();
    for (NodeId v = 0; v < n; ++v) {
      if (v != u) row.push_back({{std::min(u, v), std::max(u, v)}, dots[v]});
    }
    KeepTopK(row, options.candidate_k);
    for (ScoredPair& p : row) p.score = Sigmoid(p.score);
    candidates.insert(candidates.end(), row.begin(), row.end());
  });
  return EdgeScoreMatrix(ScoreKind::kFae, n, MergeCandidates(std::move(candidates)), scorer);
}

EdgeScoreMatrix SimScores(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options) {
  return BuildFromDotScorer(ScoreKind::kSim, MakeSimScorer(graph, params), options);
}

EdgeScoreMatrix ComputeScores(const SparseGraph& graph, const AugmenterParams& params,
                              const ScoreOptions& options) {
  switch (params.kind) {
    case ScoreKind::kJaccard:
      return JaccardScores(graph, options);
    case ScoreKind::kFae:
      return FaeScores(graph, params, options);
    case ScoreKind::kSim:
      return SimScores(graph, params, options);
  }
  throw ConfigError("unknown augmenter kind");
}

namespace {

constexpr std::string_view kScoreMagic = "AVSC";
constexpr std::uint32_t kScoreVersion = 1;

template <class T>
void AppendBytes(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
void AppendArray(std::string& out, const T* data, std::size_t count) {
  out.append(reinterpret_cast<const char*>(data), count * sizeof(T));
}

template <class T>
bool ReadBytes(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

std::optional<EdgeScoreMatrix> ReadScoreCache(const std::string& path, ScoreKind kind,
                                              NodeId n,
                                              std::shared_ptr<const PairScorer> scorer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string magic(kScoreMagic.size(), '\0');
  std::uint32_t version = 0, stored_kind = 0;
  std::int32_t stored_n = 0;
  std::uint8_t dense = 0;
  std::int64_t count = 0;
  if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) ||
      magic != kScoreMagic || !ReadBytes(in, version) || version != kScoreVersion ||
      !ReadBytes(in, stored_kind) || stored_kind != static_cast<std::uint32_t>(kind) ||
      !ReadBytes(in, stored_n) || stored_n != n || !ReadBytes(in, dense) ||
      !ReadBytes(in, count) || count < 0) {
    return std::nullopt;
  }
  if (dense) {
    if (count != PairCount(n)) return std::nullopt;
    std::vector<double> upper(static_cast<std::size_t>(count));
    if (!in.read(reinterpret_cast<char*>(upper.data()),
                 static_cast<std::streamsize>(upper.size() * sizeof(double)))) {
      return std::nullopt;
    }
    return EdgeScoreMatrix(kind, n, std::move(upper), std::move(scorer));
  }
  std::vector<ScoredPair> candidates(static_cast<std::size_t>(count));
  for (ScoredPair& c : candidates) {
    if (!ReadBytes(in, c.pair.u) || !ReadBytes(in, c.pair.v) || !ReadBytes(in, c.score)) {
      return std::nullopt;
    }
    if (c.pair.u < 0 || c.pair.u >= c.pair.v || c.pair.v >= n) return std::nullopt;
  }
  return EdgeScoreMatrix(kind, n, std::move(candidates), std::move(scorer));
}

void WriteScoreCache(const std::string& path, const EdgeScoreMatrix& scores) {
  std::string buf(kScoreMagic);
  AppendBytes(buf, kScoreVersion);
  AppendBytes(buf, static_cast<std::uint32_t>(scores.kind()));
  AppendBytes(buf, scores.num_nodes());
  const bool dense = !scores.upper_triangle().empty();
  AppendBytes(buf, static_cast<std::uint8_t>(dense));
  if (dense) {
    AppendBytes(buf, static_cast<std::int64_t>(scores.upper_triangle().size()));
    AppendArray(buf, scores.upper_triangle().data(), scores.upper_triangle().size());
  } else {
    AppendBytes(buf, static_cast<std::int64_t>(scores.ranked_candidates().size()));
    for (const ScoredPair& c : scores.ranked_candidates()) {
      AppendBytes(buf, c.pair.u);
      AppendBytes(buf, c.pair.v);
      AppendBytes(buf, c.score);
    }
  }
  // Write then rename so a concurrent reader never sees a partial file.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.write(buf.data(), static_cast<std::streamsize>(buf.size()))) {
      throw Error("cannot write score cache '" + tmp + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string ScoreCacheKey(const SparseGraph& graph, const AugmenterParams& params,
                          const ScoreOptions& options) {
  CheckFeatures(graph);
  FeatureMatrix x = graph.features();
  x.makeCompressed();
  std::string buf;
  AppendBytes(buf, static_cast<std::int64_t>(x.rows()));
  AppendBytes(buf, static_cast<std::int64_t>(x.cols()));
  AppendArray(buf, x.outerIndexPtr(), static_cast<std::size_t>(x.outerSize() + 1));
  AppendArray(buf, x.innerIndexPtr(), static_cast<std::size_t>(x.nonZeros()));
  AppendArray(buf, x.valuePtr(), static_cast<std::size_t>(x.nonZeros()));
  AppendBytes(buf, static_cast<std::uint32_t>(params.kind));
  if (params.kind != ScoreKind::kJaccard) {
    for (const NamedMatrix& m : params.ToCheckpoint().matrices) {
      buf += m.name;
      AppendBytes(buf, static_cast<std::int64_t>(m.value.rows()));
      AppendBytes(buf, static_cast<std::int64_t>(m.value.cols()));
      AppendArray(buf, m.value.data(), static_cast<std::size_t>(m.value.size()));
    }
  } else {
    AppendBytes(buf, static_cast<std::uint8_t>(options.binarize));
  }
  AppendBytes(buf, options.candidate_k);
  AppendBytes(buf, options.dense_limit);
  return Md5Hex(buf);
}

EdgeScoreMatrix CachedScores(const SparseGraph& graph, const AugmenterParams& params,
                             const ScoreOptions& options, const std::string& cache_dir) {
  if (cache_dir.empty()) return ComputeScores(graph, params, options);
  std::filesystem::create_directories(cache_dir);
  const std::string path =
      (std::filesystem::path(cache_dir) / (ScoreCacheKey(graph, params, options) + ".scores"))
          .string();
  if (auto cached = ReadScoreCache(path, params.kind, graph.num_nodes(),
                                   MakeScorer(graph, params, options))) {
    return std::move(*cached);
  }
  EdgeScoreMatrix scores = ComputeScores(graph, params, options);
  WriteScoreCache(path, scores);
  return scores;
}

EdgeSamples SampleTrainingPairs(const SparseGraph& graph, double positive_fraction,
                                int negative_ratio, std::uint64_t seed) {
  if (!(positive_fraction > 0.0 && positive_fraction <= 1.0)) {
    throw ConfigError("positive_fraction must lie in (0, 1]");
  }
  if (negative_ratio < 0) throw ConfigError("negative_ratio must be non-negative");
  Rng rng = MakeRng(seed, 0);
  EdgeSamples samples;
  samples.positives.assign(graph.edges().begin(), graph.edges().end());
  std::shuffle(samples.positives.begin(), samples.positives.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::llround(positive_fraction * static_cast<double>(samples.positives.size())));
  samples.positives.resize(std::max<std::size_t>(keep, 1));
  std::sort(samples.positives.begin(), samples.positives.end());

  const NodeId n = graph.num_nodes();
  const std::int64_t non_edges = PairCount(n) - graph.num_edges();
  const std::int64_t wanted = std::min<std::int64_t>(
      non_edges, static_cast<std::int64_t>(negative_ratio) *
                     static_cast<std::int64_t>(samples.positives.size()));
  std::uniform_int_distribution<NodeId> node(0, n - 1);
  std::unordered_set<std::int64_t> taken;
  taken.reserve(static_cast<std::size_t>(wanted) * 2);
  while (static_cast<std::int64_t>(samples.negatives.size()) < wanted) {
    NodeId u = node(rng);
    NodeId v = node(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (graph.HasEdge(u, v) || !taken.insert(PairIndex(u, v, n)).second) continue;
    samples.negatives.push_back({u, v});
  }
  return samples;
}

AugmenterParams InitAugmenter(ScoreKind kind, int feature_dim, const AugmenterTrainConfig& config) {
  if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
  Rng rng = MakeRng(config.seed, 1);
  AugmenterParams p;
  p.kind = kind;
  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    }
    return m;
  };
  switch (kind) {
    case ScoreKind::kJaccard:
      break;
    case ScoreKind::kFae:
      if (config.fae_hidden < 1 || config.fae_embedding < 1) {
        throw ConfigError("FAE layer sizes must be positive");
      }
      p.fae.w2 = glorot(feature_dim, config.fae_hidden);
      p.fae.w1 = glorot(config.fae_hidden, config.fae_embedding);
      break;
    case ScoreKind::kSim: {
      if (config.sim_heads < 1) throw ConfigError("sim_heads must be positive");
      std::uniform_real_distribution<double> dist(-config.sim_init_noise, config.sim_init_noise);
      p.sim.weights.resize(config.sim_heads, feature_dim);
      for (Eigen::Index j = 0; j < feature_dim; ++j) {
        for (Eigen::Index q = 0; q < config.sim_heads; ++q) p.sim.weights(q, j) = 1.0 + dist(rng);
      }
      break;
    }
  }
  return p;
}

namespace {

AugmenterGradient FaeLossAndGradient(const FeatureMatrix& x, const FaeParams& params,
                                     const EdgeSamples& samples) {
  const RowMatrix pre = x * params.w2;
  const RowMatrix hidden = pre.cwiseMax(0.0);
  const RowMatrix z = hidden * params.w1;
  RowMatrix dz = RowMatrix::Zero(z.rows(), z.cols());
  const double total = static_cast<double>(samples.positives.size() + samples.negatives.size());
  double loss = 0.0;
  auto accumulate = [&](const Edge& e, double target) {
    const double s = z.row(e.u).dot(z.row(e.v));
    loss += target > 0.5 ? Softplus(-s) : Softplus(s);
    const double g = (Sigmoid(s) - target) / total;
    dz.row(e.u) += g * z.row(e.v);
    dz.row(e.v) += g * z.row(e.u);
  };
  for (const Edge& e : samples.positives) accumulate(e, 1.0);
  for (const Edge& e : samples.negatives) accumulate(e, 0.0);

  AugmenterGradient out;
  out.loss = loss / total;
  out.fae.w1 = hidden.transpose() * dz;
  RowMatrix dpre = dz * params.w1.transpose();
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  out.fae.w2 = x.transpose() * dpre;
  return out;
}

// Gradient of the mean head cosine for one pair, added into grad scaled by coef.
// Returns the score. Heads with a zero vector contribute cosine 0 and no gradient.
double SimPairScore(const FeatureMatrix& x, const Eigen::MatrixXd& w, NodeId u, NodeId v,
                    Eigen::MatrixXd* grad, double coef) {
  const auto m = w.rows();
  // Union support of the two rows with both values.
  struct Entry {
    std::int32_t col;
    double xu;
    double xv;
  };
  std::vector<Entry> support;
  FeatureMatrix::InnerIterator a(x, u);
  FeatureMatrix::InnerIterator b(x, v);
  while (a || b) {
    if (b && (!a || b.col() < a.col())) {
      support.push_back({static_cast<std::int32_t>(b.col()), 0.0, b.value()});
      ++b;
    } else if (a && (!b || a.col() < b.col())) {
      support.push_back({static_cast<std::int32_t>(a.col()), a.value(), 0.0});
      ++a;
    } else {
      support.push_back({static_cast<std::int32_t>(a.col()), a.value(), b.value()});
      ++a;
      ++b;
    }
  }
  double score = 0.0;
  for (Eigen::Index q = 0; q < m; ++q) {
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (const Entry& e : support) {
      const double w2 = w(q, e.col) * w(q, e.col);
      dot += w2 * e.xu * e.xv;
      nu += w2 * e.xu * e.xu;
      nv += w2 * e.xv * e.xv;
    }
    if (nu <= 0.0 || nv <= 0.0) continue;
    const double root = std::sqrt(nu * nv);
    const double cos = dot / root;
    score += cos;
    if (grad == nullptr) continue;
    const double c = coef / static_cast<double>(m);
    for (const Entry& e : support) {
      const double wj = w(q, e.col);
      const double ddot = 2.0 * wj * e.xu * e.xv;
      const double dnu = 2.0 * wj * e.xu * e.xu;
      const double dnv = 2.0 * wj * e.xv * e.xv;
      (*grad)(q, e.col) += c * (ddot / root - cos * (dnu / (2.0 * nu) + dnv / (2.0 * nv)));
    }
  }
  return score / static_cast<double>(m);
}

AugmenterGradient SimLossAndGradient(const FeatureMatrix& x, const SimParams& params,
                                     const EdgeSamples& samples) {
  constexpr double kClamp = 1e-7;
  const Eigen::MatrixXd& w = params.weights;
  AugmenterGradient out;
  out.sim.weights = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  const double total = static_cast<double>(samples.positives.size() + samples.negatives.size());
  double loss = 0.0;
  auto accumulate = [&](const Edge& e, bool positive) {
    const double s = SimPairScore(x, w, e.u, e.v, nullptr, 0.0);
    const double p = (s + 1.0) / 2.0;
    const double pc = std::clamp(p, kClamp, 1.0 - kClamp);
    loss -= positive ? std::log(pc) : std::log(1.0 - pc);
    if (p != pc) return;  // flat inside the clamp
    const double dp = positive ? -1.0 / p : 1.0 / (1.0 - p);
    SimPairScore(x, w, e.u, e.v, &out.sim.weights, dp * 0.5 / total);
  };
  for (const Edge& e : samples.positives) accumulate(e, true);
  for (const Edge& e : samples.negatives) accumulate(e, false);
  out.loss = loss / total;
  return out;
}

}  // namespace

AugmenterGradient AugmenterLossAndGradient(const FeatureMatrix& features,
                                           const AugmenterParams& params,
                                           const EdgeSamples& samples) {
  if (samples.positives.empty() && samples.negatives.empty()) {
    throw ConfigError("no training pairs");
  }
  switch (params.kind) {
    case ScoreKind::kFae:
      return FaeLossAndGradient(features, params.fae, samples);
    case ScoreKind::kSim:
      if (params.sim.weights.cols() != features.cols()) {
        throw ShapeError("feature dim does not match SimAug weights");
      }
      return SimLossAndGradient(features, params.sim, samples);
    case ScoreKind::kJaccard:
      break;
  }
  throw ConfigError("the Jaccard augmenter is not trainable");
}

AugmenterTrainResult TrainAugmenter(const SparseGraph& graph, ScoreKind kind,
                                    const AugmenterTrainConfig& config) {
  CheckFeatures(graph);
  if (kind == ScoreKind::kJaccard) throw ConfigError("the Jaccard augmenter is not trainable");
  if (graph.num_edges() < 10) {
    throw ConfigError("augmenter training needs at least 10 edges, got " +
                      std::to_string(graph.num_edges()));
  }
  if (config.epochs < 0 || !(config.learning_rate > 0.0)) {
    throw ConfigError("invalid augmenter training schedule");
  }
  AugmenterTrainResult result;
  result.params = InitAugmenter(kind, graph.feature_dim(), config);
  const EdgeSamples samples = SampleTrainingPairs(graph, config.positive_fraction,
                                                  config.negative_ratio,
                                                  MixSeed(config.seed, 2));
  AugmenterParams& p = result.params;
  if (kind == ScoreKind::kFae) {
    AdamState adam_w2(p.fae.w2);
    AdamState adam_w1(p.fae.w1);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const AugmenterGradient g = AugmenterLossAndGradient(graph.features(), p, samples);
      result.loss_history.push_back(g.loss);
      adam_w2.Step(p.fae.w2, g.fae.w2, config.learning_rate);
      adam_w1.Step(p.fae.w1, g.fae.w1, config.learning_rate);
    }
  } else {
    AdamState adam(p.sim.weights);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const AugmenterGradient g = AugmenterLossAndGradient(graph.features(), p, samples);
      result.loss_history.push_back(g.loss);
      adam.Step(p.sim.weights, g.sim.weights, config.learning_rate);
    }
  }
  return result;
}

ThresholdPair NoiseAdaptiveThresholds(const EdgeScoreMatrix& scores, double e_ratio,
                                      NodeId n_test, const SparseNoiseConfig& noise,
                                      RankPopulation population) {
  noise.Validate();
  ValidateEdgeRatio(e_ratio, n_test);
  const long double n2 = static_cast<long double>(n_test) * n_test;
  const long double expected_entries = static_cast<long double>(e_ratio) * n2;
  ThresholdPair t;
  t.population = population;
  t.add_count = TolerantFloor(expected_entries * noise.p_minus);
  t.del_count = TolerantFloor((n2 - expected_entries) * noise.p_plus);
  const std::int64_t pairs = PairCount(scores.num_nodes());
  const std::int64_t add_rank = ClampRank(PairRank(t.add_count), pairs, "ADD");
  const std::int64_t del_rank = ClampRank(PairRank(t.del_count), pairs, "DEL");
  if (population == RankPopulation::kAllPairs) {
    t.xi = KthLargestCandidate(scores, add_rank);
    t.tau = del_rank > 0 ? scores.KthSmallestOverAllPairs(del_rank) : -kInf;
  }
  return t;
}

ThresholdPair GnnCertThreshold(const EdgeScoreMatrix& scores, double e_ratio, NodeId n_test,
                               int num_groups, RankPopulation population) {
  ValidateEdgeRatio(e_ratio, n_test);
  if (num_groups < 1) throw ConfigError("num_groups must be positive");
  const long double expected_entries =
      static_cast<long double>(e_ratio) * static_cast<long double>(n_test) * n_test;
  ThresholdPair t;
  t.population = population;
  t.add_count = TolerantFloor(expected_entries * (num_groups - 1) / num_groups);
  t.del_count = 0;
  const std::int64_t add_rank =
      ClampRank(PairRank(t.add_count), PairCount(scores.num_nodes()), "ADD");
  if (population == RankPopulation::kAllPairs) t.xi = KthLargestCandidate(scores, add_rank);
  return t;
}

ThresholdPair ResolveThresholds(const SparseGraph& noisy, const EdgeScoreMatrix& scores,
                                const ThresholdPair& thresholds) {
  if (thresholds.population == RankPopulation::kAllPairs) return thresholds;
  if (noisy.num_nodes() != scores.num_nodes()) throw ShapeError("score table is for another graph");
  ThresholdPair t = thresholds;
  t.tau = -kInf;
  t.xi = kInf;
  // Per sample the ranks are clamped silently to the population at hand.
  const std::int64_t del_rank =
      std::min<std::int64_t>(PairRank(thresholds.del_count), noisy.num_edges());
  if (del_rank > 0) {
    std::vector<double> edge_scores;
    edge_scores.reserve(static_cast<std::size_t>(noisy.num_edges()));
    for (const Edge& e : noisy.edges()) edge_scores.push_back(scores.Score(e.u, e.v));
    const auto nth = edge_scores.begin() + (del_rank - 1);
    std::nth_element(edge_scores.begin(), nth, edge_scores.end());
    t.tau = *nth;
  }
  const std::int64_t add_rank = PairRank(thresholds.add_count);
  if (add_rank > 0) {
    std::int64_t seen = 0;
    for (const ScoredPair& p : scores.ranked_candidates()) {
      if (noisy.HasEdge(p.pair.u, p.pair.v)) continue;
      t.xi = p.score;
      if (++seen == add_rank) break;
    }
  }
  return t;
}

SparseGraph Rewire(const SparseGraph& noisy, const EdgeScoreMatrix& scores,
                   const ThresholdPair& thresholds) {
  if (noisy.num_nodes() != scores.num_nodes()) throw ShapeError("score table is for another graph");
  std::vector<Edge> kept;
  kept.reserve(static_cast<std::size_t>(noisy.num_edges()));
  for (const Edge& e : noisy.edges()) {
    if (!thresholds.prunes() || scores.Score(e.u, e.v) > thresholds.tau) kept.push_back(e);
  }
  std::vector<Edge> added;
  if (thresholds.adds()) {
    for (const ScoredPair& p : scores.ranked_candidates()) {
      if (!(p.score > thresholds.xi)) break;
      if (!noisy.HasEdge(p.pair.u, p.pair.v)) added.push_back(p.pair);
    }
    std::sort(added.begin(), added.end());
  }
  if (added.empty()) return noisy.WithCanonicalEdges(std::move(kept));
  std::vector<Edge> merged;
  merged.reserve(kept.size() + added.size());
  std::merge(kept.begin(), kept.end(), added.begin(), added.end(), std::back_inserter(merged));
  return noisy.WithCanonicalEdges(std::move(merged));
}

}  // namespace auditvotes
