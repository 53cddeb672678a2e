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

#include "auditvotes/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include "auditvotes/error.hpp"
#include "auditvotes/rng.hpp"

namespace auditvotes {
namespace {

void CanonicalizeEdges(std::vector<Edge>& edges, NodeId n) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    Edge e = edges[i];
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw BoundsError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                        ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (e.u == e.v) continue;
    if (e.u > e.v) std::swap(e.u, e.v);
    edges[out++] = e;
  }
  edges.resize(out);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

// Tab-separated fields of one line, with a trailing '\r' stripped.
std::vector<std::string_view> SplitTabs(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool IsSkippable(std::string_view line) {
  const std::size_t first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#';
}

template <typename T>
T ParseNumber(std::string_view token, const std::string& path, std::size_t line,
              const char* what) {
  T value{};
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(path, line, std::string("cannot parse ") + what + " from '" +
                                     std::string(token) + "'");
  }
  return value;
}

class NodeResolver {
 public:
  NodeResolver(IdMap* map, NodeId n, const std::string& path, bool register_new)
      : map_(map), n_(n), path_(path), register_new_(register_new) {}

  NodeId operator()(std::string_view token, std::size_t line) const {
    NodeId id = 0;
    if (map_ == nullptr) {
      id = ParseNumber<NodeId>(token, path_, line, "node id");
    } else if (register_new_) {
      id = map_->Intern(token);
    } else {
      const auto found = map_->internal(token);
      if (!found) {
        throw ParseError(path_, line, "unknown external node id '" + std::string(token) + "'");
      }
      id = *found;
    }
    if (id < 0 || id >= n_) {
      throw BoundsError(path_ + ":" + std::to_string(line) + ": node id " +
                        std::to_string(id) + " outside declared node count " +
                        std::to_string(n_));
    }
    return id;
  }

 private:
  IdMap* map_;
  NodeId n_;
  const std::string& path_;
  bool register_new_;
};

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

SparseGraph::SparseGraph(NodeId num_nodes, std::vector<Edge> edges,
                         std::shared_ptr<const FeatureMatrix> features,
                         std::shared_ptr<const std::vector<int>> labels, int num_classes)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes) {
  if (num_nodes_ < 0) throw BoundsError("negative node count");
  if (features_ && features_->rows() != num_nodes_) {
    throw ShapeError("feature matrix has " + std::to_string(features_->rows()) +
                     " rows for " + std::to_string(num_nodes_) + " nodes");
  }
  if (labels_) {
    if (static_cast<NodeId>(labels_->size()) != num_nodes_) {
      throw ShapeError("label vector length does not match node count");
    }
    for (int y : *labels_) {
      if (y >= num_classes_) {
        throw BoundsError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(num_classes_) + ")");
      }
    }
  }
  CanonicalizeEdges(edges_, num_nodes_);
  BuildIndex();
}

SparseGraph SparseGraph::FromCanonicalEdges(NodeId num_nodes, std::vector<Edge> edges,
                                            std::shared_ptr<const FeatureMatrix> features,
                                            std::shared_ptr<const std::vector<int>> labels,
                                            int num_classes) {
  SparseGraph g;
  g.num_nodes_ = num_nodes;
  g.edges_ = std::move(edges);
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.num_classes_ = num_classes;
  g.BuildIndex();
  return g;
}

SparseGraph SparseGraph::WithCanonicalEdges(std::vector<Edge> edges) const {
  return FromCanonicalEdges(num_nodes_, std::move(edges), features_, labels_, num_classes_);
}

void SparseGraph::BuildIndex() {
  offsets_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.resize(static_cast<std::size_t>(offsets_.back()));
  std::vector<std::int64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted by (u, v), so appending in this order leaves every
  // neighbor list sorted: a node's smaller neighbors arrive first (as v of
  // earlier rows), its larger neighbors after (as u of its own row).
  for (const Edge& e : edges_) {
    adjacency_[cursor[e.v]++] = e.u;
  }
  for (const Edge& e : edges_) {
    adjacency_[cursor[e.u]++] = e.v;
  }
}

bool SparseGraph::HasEdge(NodeId u, NodeId v) const {
  if (u == v || u < 0 || v < 0 || u >= num_nodes_ || v >= num_nodes_) return false;
  if (degree(u) > degree(v)) std::swap(u, v);
  const auto nbrs = neighbors(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

Edge PairFromIndex(std::int64_t index, NodeId n) {
  // Row u holds n - 1 - u pairs. Solve for u with the quadratic formula, then
  // correct for floating-point rounding.
  const double nn = static_cast<double>(n);
  const double disc = (2.0 * nn - 1.0) * (2.0 * nn - 1.0) - 8.0 * static_cast<double>(index);
  auto u = static_cast<std::int64_t>(std::floor(((2.0 * nn - 1.0) - std::sqrt(std::max(disc, 0.0))) / 2.0));
  u = std::clamp<std::int64_t>(u, 0, n - 2);
  auto row_start = [n](std::int64_t r) { return r * n - r * (r + 1) / 2; };
  while (u > 0 && row_start(u) > index) --u;
  while (u + 1 < n - 1 && row_start(u + 1) <= index) ++u;
  const std::int64_t v = index - row_start(u) + u + 1;
  return Edge{static_cast<NodeId>(u), static_cast<NodeId>(v)};
}

bool IsBinary(const FeatureMatrix& features) {
  const double* values = features.valuePtr();
  for (Eigen::Index i = 0; i < features.nonZeros(); ++i) {
    if (values[i] != 0.0 && values[i] != 1.0) return false;
  }
  return true;
}

FeatureMatrix Binarize(const FeatureMatrix& features) {
  FeatureMatrix out = features;
  for (Eigen::Index i = 0; i < out.nonZeros(); ++i) {
    out.valuePtr()[i] = out.valuePtr()[i] != 0.0 ? 1.0 : 0.0;
  }
  out.prune(0.0);
  return out;
}

FeatureMatrix FeaturesFromTriplets(NodeId n, int d,
                                   const std::vector<Eigen::Triplet<double>>& triplets) {
  FeatureMatrix x(n, d);
  // Repeated (node, dim) entries keep the last value rather than summing.
  x.setFromTriplets(triplets.begin(), triplets.end(),
                    [](const double&, const double& b) { return b; });
  x.prune(0.0);
  x.makeCompressed();
  return x;
}

IdMap::IdMap(std::vector<std::string> external_ids) : external_(std::move(external_ids)) {
  internal_.reserve(external_.size());
  for (std::size_t i = 0; i < external_.size(); ++i) {
    if (!internal_.emplace(external_[i], static_cast<NodeId>(i)).second) {
      throw ConfigError("duplicate external id '" + external_[i] + "'");
    }
  }
}

IdMap IdMap::Identity(NodeId n) {
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) ids[i] = std::to_string(i);
  return IdMap(std::move(ids));
}

IdMap IdMap::Load(const std::string& path) {
  std::ifstream in = OpenInput(path);
  std::vector<std::pair<NodeId, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsSkippable(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 2) throw ParseError(path, line_no, "expected 'external_id<TAB>internal_id'");
    rows.emplace_back(ParseNumber<NodeId>(fields[1], path, line_no, "internal id"),
                      std::string(fields[0]));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<NodeId>(i)) {
      throw ParseError(path, 0, "internal ids are not dense 0-based integers");
    }
    ids.push_back(std::move(rows[i].second));
  }
  return IdMap(std::move(ids));
}

void IdMap::Save(const std::string& path) const {
  std::ofstream out = OpenOutput(path);
  for (std::size_t i = 0; i < external_.size(); ++i) out << external_[i] << '\t' << i << '\n';
}

const std::string& IdMap::external(NodeId internal) const {
  if (internal < 0 || internal >= size()) {
    throw BoundsError("node " + std::to_string(internal) + " has no external id");
  }
  return external_[internal];
}

std::optional<NodeId> IdMap::internal(std::string_view external) const {
  const auto it = internal_.find(std::string(external));
  if (it == internal_.end()) return std::nullopt;
  return it->second;
}

NodeId IdMap::Intern(std::string_view external) {
  const auto [it, inserted] = internal_.emplace(std::string(external), size());
  if (inserted) external_.emplace_back(external);
  return it->second;
}

SparseGraph LoadDataset(const std::string& edge_path, const std::string& feature_path,
                        const std::string& label_path, const LoadOptions& options) {
  NodeId n = 0;
  int d = 0;
  std::vector<Eigen::Triplet<double>> triplets;
  {
    std::ifstream in = OpenInput(feature_path);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::unique_ptr<NodeResolver> resolve;
    while (std::getline(in, line)) {
      ++line_no;
      if (IsSkippable(line)) continue;
      const auto fields = SplitTabs(line);
      if (!have_header) {
        if (fields.size() != 2) throw ParseError(feature_path, line_no, "expected header 'n<TAB>d'");
        n = ParseNumber<NodeId>(fields[0], feature_path, line_no, "node count");
        d = ParseNumber<int>(fields[1], feature_path, line_no, "feature dimension");
        if (n < 0 || d < 0) throw ParseError(feature_path, line_no, "negative dimension");
        resolve = std::make_unique<NodeResolver>(options.id_map, n, feature_path, true);
        have_header = true;
        continue;
      }
      if (fields.size() != 3) throw ParseError(feature_path, line_no, "expected 'node<TAB>dim<TAB>value'");
      const NodeId node = (*resolve)(fields[0], line_no);
      const int dim = ParseNumber<int>(fields[1], feature_path, line_no, "dimension");
      const double value = ParseNumber<double>(fields[2], feature_path, line_no, "value");
      if (dim < 0 || dim >= d) {
        throw BoundsError(feature_path + ":" + std::to_string(line_no) + ": dimension " +
                          std::to_string(dim) + " outside [0, " + std::to_string(d) + ")");
      }
      if (!std::isfinite(value) || value < 0.0) {
        throw ParseError(feature_path, line_no, "feature values must be finite and non-negative");
      }
      triplets.emplace_back(node, dim, value);
    }
    if (!have_header) throw ParseError(feature_path, line_no, "missing header 'n<TAB>d'");
  }
  auto features = std::make_shared<FeatureMatrix>(FeaturesFromTriplets(n, d, triplets));
  if (options.binarize) *features = Binarize(*features);

  std::vector<Edge> edges;
  {
    std::ifstream in = OpenInput(edge_path);
    NodeResolver resolve(options.id_map, n, edge_path, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (IsSkippable(line)) continue;
      const auto fields = SplitTabs(line);
      if (fields.size() != 2) throw ParseError(edge_path, line_no, "expected 'u<TAB>v'");
      edges.push_back(Edge{resolve(fields[0], line_no), resolve(fields[1], line_no)});
    }
  }

  std::shared_ptr<std::vector<int>> labels;
  int num_classes = 0;
  if (!label_path.empty()) {
    labels = std::make_shared<std::vector<int>>(static_cast<std::size_t>(n), -1);
    std::ifstream in = OpenInput(label_path);
    NodeResolver resolve(options.id_map, n, label_path, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (IsSkippable(line)) continue;
      const auto fields = SplitTabs(line);
      if (fields.size() != 2) throw ParseError(label_path, line_no, "expected 'node<TAB>class'");
      const NodeId node = resolve(fields[0], line_no);
      const int y = ParseNumber<int>(fields[1], label_path, line_no, "class");
      if (y < 0) throw ParseError(label_path, line_no, "negative class index");
      (*labels)[node] = y;
      num_classes = std::max(num_classes, y + 1);
    }
  }
  return SparseGraph(n, std::move(edges), std::move(features), std::move(labels), num_classes);
}

void SaveDataset(const SparseGraph& graph, const std::string& edge_path,
                 const std::string& feature_path, const std::string& label_path) {
  {
    std::ofstream out = OpenOutput(edge_path);
    for (const Edge& e : graph.edges()) out << e.u << '\t' << e.v << '\n';
  }
  {
    std::ofstream out = OpenOutput(feature_path);
    out << std::setprecision(17);
    out << graph.num_nodes() << '\t' << graph.feature_dim() << '\n';
    const FeatureMatrix& x = graph.features();
    for (NodeId r = 0; r < graph.num_nodes(); ++r) {
      for (FeatureMatrix::InnerIterator it(x, r); it; ++it) {
        out << r << '\t' << it.col() << '\t' << it.value() << '\n';
      }
    }
  }
  if (!label_path.empty() && graph.has_labels()) {
    std::ofstream out = OpenOutput(label_path);
    const auto labels = graph.labels();
    for (NodeId v = 0; v < graph.num_nodes(); ++v) {
      if (labels[v] >= 0) out << v << '\t' << labels[v] << '\n';
    }
  }
}

std::vector<NodeId> InductiveSplit::TrainingNodes() const {
  std::vector<NodeId> nodes(labeled_train);
  nodes.insert(nodes.end(), unlabeled_train.begin(), unlabeled_train.end());
  return nodes;
}

std::vector<NodeId> InductiveSplit::ValidationGraphNodes() const {
  std::vector<NodeId> nodes = TrainingNodes();
  nodes.insert(nodes.end(), validation.begin(), validation.end());
  return nodes;
}

std::vector<NodeId> InductiveSplit::TestGraphNodes() const {
  std::vector<NodeId> nodes = ValidationGraphNodes();
  nodes.insert(nodes.end(), test.begin(), test.end());
  return nodes;
}

InductiveSplit MakeInductiveSplit(const SparseGraph& graph, int per_class_labeled,
                                  double test_fraction, std::uint64_t seed) {
  if (!graph.has_labels()) throw SplitError("graph has no labels");
  if (per_class_labeled < 1) throw SplitError("per_class_labeled must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw SplitError("test_fraction must lie strictly between 0 and 1");
  }
  const auto labels = graph.labels();
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(graph.num_classes()));
  InductiveSplit split;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (labels[v] < 0) {
      split.unlabeled_train.push_back(v);
    } else {
      by_class[labels[v]].push_back(v);
    }
  }
  Rng rng = MakeRng(seed);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    const auto size = static_cast<std::int64_t>(members.size());
    if (size < 2 * static_cast<std::int64_t>(per_class_labeled) + 1) {
      throw SplitError("class " + std::to_string(c) + " has " + std::to_string(size) +
                       " nodes; needs at least " + std::to_string(2 * per_class_labeled + 1));
    }
    std::shuffle(members.begin(), members.end(), rng);
    const std::int64_t n_test = std::clamp<std::int64_t>(
        std::llround(test_fraction * static_cast<double>(size)), 1, size - 2 * per_class_labeled);
    auto it = members.begin();
    split.labeled_train.insert(split.labeled_train.end(), it, it + per_class_labeled);
    it += per_class_labeled;
    split.validation.insert(split.validation.end(), it, it + per_class_labeled);
    it += per_class_labeled;
    split.test.insert(split.test.end(), it, it + n_test);
    it += n_test;
    split.unlabeled_train.insert(split.unlabeled_train.end(), it, members.end());
  }
  for (auto* set : {&split.labeled_train, &split.unlabeled_train, &split.validation, &split.test}) {
    std::sort(set->begin(), set->end());
  }
  return split;
}

void SaveSplit(const InductiveSplit& split, const std::string& path) {
  std::vector<std::pair<NodeId, const char*>> rows;
  for (NodeId v : split.labeled_train) rows.emplace_back(v, "ltrain");
  for (NodeId v : split.unlabeled_train) rows.emplace_back(v, "utrain");
  for (NodeId v : split.validation) rows.emplace_back(v, "val");
  for (NodeId v : split.test) rows.emplace_back(v, "test");
  std::sort(rows.begin(), rows.end());
  std::ofstream out = OpenOutput(path);
  for (const auto& [v, role] : rows) out << v << '\t' << role << '\n';
}

InductiveSplit LoadSplit(const std::string& path, NodeId num_nodes) {
  std::ifstream in = OpenInput(path);
  InductiveSplit split;
  std::vector<bool> seen(static_cast<std::size_t>(num_nodes), false);
  std::string line;
  std::size_t line_no = 0;
  NodeResolver resolve(nullptr, num_nodes, path, false);
  while (std::getline(in, line)) {
    ++line_no;
    if (IsSkippable(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 2) throw ParseError(path, line_no, "expected 'node<TAB>role'");
    const NodeId v = resolve(fields[0], line_no);
    if (seen[v]) throw ParseError(path, line_no, "node listed twice");
    seen[v] = true;
    if (fields[1] == "ltrain") {
      split.labeled_train.push_back(v);
    } else if (fields[1] == "utrain") {
      split.unlabeled_train.push_back(v);
    } else if (fields[1] == "val") {
      split.validation.push_back(v);
    } else if (fields[1] == "test") {
      split.test.push_back(v);
    } else {
      throw ParseError(path, line_no, "unknown role '" + std::string(fields[1]) + "'");
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ParseError(path, line_no, "split does not cover every node");
  }
  return split;
}

SparseGraph InducedSubgraph(const SparseGraph& graph, std::span<const NodeId> nodes) {
  const auto m = static_cast<NodeId>(nodes.size());
  std::vector<NodeId> remap(static_cast<std::size_t>(graph.num_nodes()), -1);
  for (NodeId i = 0; i < m; ++i) {
    if (nodes[i] < 0 || nodes[i] >= graph.num_nodes()) throw BoundsError("subgraph node out of range");
    if (remap[nodes[i]] != -1) throw ConfigError("subgraph node listed twice");
    remap[nodes[i]] = i;
  }
  std::vector<Edge> edges;
  for (NodeId i = 0; i < m; ++i) {
    for (NodeId w : graph.neighbors(nodes[i])) {
      const NodeId j = remap[w];
      if (j > i) edges.push_back(Edge{i, j});
    }
  }
  std::sort(edges.begin(), edges.end());

  const FeatureMatrix& x = graph.features();
  auto features = std::make_shared<FeatureMatrix>(m, x.cols());
  {
    Eigen::VectorXi sizes(m);
    for (NodeId i = 0; i < m; ++i) {
      sizes[i] = static_cast<int>(x.outerIndexPtr()[nodes[i] + 1] - x.outerIndexPtr()[nodes[i]]);
    }
    features->reserve(sizes);
    for (NodeId i = 0; i < m; ++i) {
      for (FeatureMatrix::InnerIterator it(x, nodes[i]); it; ++it) {
        features->insert(i, it.col()) = it.value();
      }
    }
    features->makeCompressed();
  }
  std::shared_ptr<std::vector<int>> labels;
  if (graph.has_labels()) {
    labels = std::make_shared<std::vector<int>>(static_cast<std::size_t>(m));
    for (NodeId i = 0; i < m; ++i) (*labels)[i] = graph.labels()[nodes[i]];
  }
  return SparseGraph::FromCanonicalEdges(m, std::move(edges), std::move(features),
                                         std::move(labels), graph.num_classes());
}

SparseGraph GenerateSbm(const SbmConfig& config) {
  if (config.classes < 1 || config.nodes_per_class < 1 || config.feature_dim < 0) {
    throw ConfigError("SBM needs at least one class and one node per class");
  }
  if (!(0.0 <= config.p_out && config.p_out <= config.p_in && config.p_in <= 1.0)) {
    throw ConfigError("SBM requires 0 <= p_out <= p_in <= 1");
  }
  if (!(0.0 <= config.feature_signal && config.feature_signal <= 1.0) ||
      !(0.0 <= config.background && config.background <= 1.0)) {
    throw ConfigError("SBM feature probabilities must lie in [0, 1]");
  }
  const NodeId n = config.classes * config.nodes_per_class;
  Rng rng = MakeRng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto labels = std::make_shared<std::vector<int>>(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) (*labels)[v] = v / config.nodes_per_class;

  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = (*labels)[u] == (*labels)[v] ? config.p_in : config.p_out;
      if (unit(rng) < p) edges.push_back(Edge{u, v});
    }
  }

  const int block = config.feature_dim / config.classes;
  const double p_off = (1.0 - config.feature_signal) * config.background;
  std::vector<Eigen::Triplet<double>> triplets;
  for (NodeId v = 0; v < n; ++v) {
    const int c = (*labels)[v];
    for (int j = 0; j < config.feature_dim; ++j) {
      const bool own = block > 0 && j / block == c;
      if (unit(rng) < (own ? config.feature_signal : p_off)) triplets.emplace_back(v, j, 1.0);
    }
  }
  auto features = std::make_shared<FeatureMatrix>(
      FeaturesFromTriplets(n, config.feature_dim, triplets));
  return SparseGraph::FromCanonicalEdges(n, std::move(edges), std::move(features),
                                         std::move(labels), config.classes);
}

double EdgeSparsity(const SparseGraph& graph) {
  const double n = graph.num_nodes();
  if (n == 0) return 0.0;
  return 2.0 * static_cast<double>(graph.num_edges()) / (n * n);
}

std::vector<double> NodeHomophily(const SparseGraph& graph, std::span<const int> labels) {
  if (static_cast<NodeId>(labels.size()) != graph.num_nodes()) {
    throw ShapeError("pseudo-label vector length does not match node count");
  }
  std::vector<double> homophily(labels.size(), 0.0);
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    const auto nbrs = graph.neighbors(v);
    if (nbrs.empty()) continue;
    const auto same = std::count_if(nbrs.begin(), nbrs.end(),
                                    [&](NodeId u) { return labels[u] == labels[v]; });
    homophily[v] = static_cast<double>(same) / static_cast<double>(nbrs.size());
  }
  return homophily;
}

double MeanHomophily(const SparseGraph& graph, std::span<const int> labels) {
  const auto h = NodeHomophily(graph, labels);
  if (h.empty()) return 0.0;
  return std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
}

double ReconstructionAuc(const SparseGraph& reference, const PairScoreFn& score,
                         std::uint64_t seed, std::int64_t sampled_pairs,
                         std::int64_t exact_pair_limit) {
  const NodeId n = reference.num_nodes();
  const std::int64_t pairs = PairCount(n);
  const std::int64_t positives = reference.num_edges();
  const std::int64_t negatives = pairs - positives;
  if (positives == 0 || negatives == 0) {
    throw NumericError("AUC needs at least one edge and one non-edge");
  }
  if (pairs <= exact_pair_limit) {
    std::vector<double> pos;
    std::vector<double> neg;
    pos.reserve(static_cast<std::size_t>(positives));
    neg.reserve(static_cast<std::size_t>(negatives));
    for (NodeId u = 0; u < n; ++u) {
      const auto nbrs = reference.neighbors(u);
      auto it = std::upper_bound(nbrs.begin(), nbrs.end(), u);
      for (NodeId v = u + 1; v < n; ++v) {
        if (it != nbrs.end() && *it == v) {
          pos.push_back(score(u, v));
          ++it;
        } else {
          neg.push_back(score(u, v));
        }
      }
    }
    std::sort(neg.begin(), neg.end());
    long double wins = 0.0L;
    for (double s : pos) {
      const auto [lo, hi] = std::equal_range(neg.begin(), neg.end(), s);
      wins += static_cast<long double>(lo - neg.begin()) +
              0.5L * static_cast<long double>(hi - lo);
    }
    return static_cast<double>(wins / (static_cast<long double>(positives) *
                                       static_cast<long double>(negatives)));
  }
  Rng rng = MakeRng(seed);
  std::uniform_int_distribution<std::int64_t> pick_edge(0, positives - 1);
  std::uniform_int_distribution<std::int64_t> pick_pair(0, pairs - 1);
  const auto edges = reference.edges();
  long double wins = 0.0L;
  for (std::int64_t i = 0; i < sampled_pairs; ++i) {
    const Edge e = edges[pick_edge(rng)];
    Edge f;
    do {
      f = PairFromIndex(pick_pair(rng), n);
    } while (reference.HasEdge(f.u, f.v));
    const double a = score(e.u, e.v);
    const double b = score(f.u, f.v);
    wins += a > b ? 1.0L : (a == b ? 0.5L : 0.0L);
  }
  return static_cast<double>(wins / static_cast<long double>(sampled_pairs));
}

GraphStats ComputeGraphStats(const SparseGraph& graph, std::span<const int> pseudo_labels,
                             const SparseGraph* reference, const PairScoreFn& scores) {
  GraphStats stats;
  stats.edge_sparsity = EdgeSparsity(graph);
  stats.homophily_mean = MeanHomophily(graph, pseudo_labels);
  if (reference != nullptr && scores) {
    stats.reconstruction_auc = ReconstructionAuc(*reference, scores);
  }
  return stats;
}

}  // namespace auditvotes
