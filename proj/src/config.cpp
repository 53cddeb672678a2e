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


#include "auditvotes/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "auditvotes/error.hpp"

namespace auditvotes {
namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T ParseNumber(std::string_view key, const std::string& text) {
  const std::string s = Trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw ConfigError("bad value '" + text + "' for " + std::string(key));
  }
  return value;
}

bool ParseBool(std::string_view key, const std::string& text) {
  std::string s = Trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean '" + text + "' for " + std::string(key));
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct Binding {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T, typename Access>
Binding Number(std::string key, Access access) {
  Binding b;
  b.key = key;
  b.set = [key, access](ExperimentConfig& c, const std::string& v) {
    access(c) = ParseNumber<T>(key, v);
  };
  b.get = [access](const ExperimentConfig& c) {
    const T v = access(const_cast<ExperimentConfig&>(c));
    if constexpr (std::is_floating_point_v<T>) {
      return FormatDouble(v);
    } else {
      return std::to_string(v);
    }
  };
  return b;
}

template <typename Access>
Binding Flag(std::string key, Access access) {
  Binding b;
  b.key = key;
  b.set = [key, access](ExperimentConfig& c, const std::string& v) { access(c) = ParseBool(key, v); };
  b.get = [access](const ExperimentConfig& c) {
    return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
  };
  return b;
}

template <typename Access>
Binding Text(std::string key, Access access) {
  Binding b;
  b.key = key;
  b.set = [access](ExperimentConfig& c, const std::string& v) { access(c) = Trim(v); };
  b.get = [access](const ExperimentConfig& c) { return access(const_cast<ExperimentConfig&>(c)); };
  return b;
}

Binding Custom(std::string key, std::function<void(ExperimentConfig&, const std::string&)> set,
               std::function<std::string(const ExperimentConfig&)> get) {
  return Binding{std::move(key), std::move(set), std::move(get)};
}

#define AV_FIELD(expr) [](ExperimentConfig& c) -> auto& { return c.expr; }

const std::vector<Binding>& Bindings() {
  static const std::vector<Binding> bindings = [] {
    std::vector<Binding> b;
    b.push_back(Custom(
        "run.scheme", [](ExperimentConfig& c, const std::string& v) { c.scheme = ParseScheme(Trim(v)); },
        [](const ExperimentConfig& c) { return std::string(ToString(c.scheme)); }));
    b.push_back(Number<std::uint64_t>("run.seed", AV_FIELD(seed)));
    b.push_back(Number<int>("run.threads", AV_FIELD(threads)));
    b.push_back(Text("run.output_dir", AV_FIELD(output_dir)));

    b.push_back(Text("data.edges", AV_FIELD(data.edges)));
    b.push_back(Text("data.features", AV_FIELD(data.features)));
    b.push_back(Text("data.labels", AV_FIELD(data.labels)));
    b.push_back(Flag("data.binarize", AV_FIELD(data.binarize)));
    b.push_back(Number<int>("data.per_class_labeled", AV_FIELD(data.per_class_labeled)));
    b.push_back(Number<double>("data.test_fraction", AV_FIELD(data.test_fraction)));
    b.push_back(Number<int>("sbm.classes", AV_FIELD(data.sbm.classes)));
    b.push_back(Number<int>("sbm.nodes_per_class", AV_FIELD(data.sbm.nodes_per_class)));
    b.push_back(Number<double>("sbm.p_in", AV_FIELD(data.sbm.p_in)));
    b.push_back(Number<double>("sbm.p_out", AV_FIELD(data.sbm.p_out)));
    b.push_back(Number<int>("sbm.feature_dim", AV_FIELD(data.sbm.feature_dim)));
    b.push_back(Number<double>("sbm.feature_signal", AV_FIELD(data.sbm.feature_signal)));
    b.push_back(Number<double>("sbm.background", AV_FIELD(data.sbm.background)));

    b.push_back(Text("blobs.train_csv", AV_FIELD(blobs.train_csv)));
    b.push_back(Text("blobs.test_csv", AV_FIELD(blobs.test_csv)));
    b.push_back(Number<int>("blobs.train_per_class", AV_FIELD(blobs.train_per_class)));
    b.push_back(Number<int>("blobs.test_per_class", AV_FIELD(blobs.test_per_class)));
    b.push_back(Number<int>("blobs.dim", AV_FIELD(blobs.dim)));
    b.push_back(Number<double>("blobs.separation", AV_FIELD(blobs.separation)));
    b.push_back(Number<double>("blobs.spread", AV_FIELD(blobs.spread)));

    b.push_back(Number<int>("classifier.hidden", AV_FIELD(classifier.train.hidden_dim)));
    b.push_back(Number<double>("classifier.learning_rate", AV_FIELD(classifier.train.learning_rate)));
    b.push_back(Number<double>("classifier.weight_decay", AV_FIELD(classifier.train.weight_decay)));
    b.push_back(Number<int>("classifier.max_epochs", AV_FIELD(classifier.train.max_epochs)));
    b.push_back(Number<int>("classifier.patience", AV_FIELD(classifier.train.patience)));
    b.push_back(Number<int>("classifier.validation_samples", AV_FIELD(classifier.train.validation_samples)));
    b.push_back(Flag("classifier.noisy_training", AV_FIELD(classifier.noisy_training)));
    b.push_back(Text("classifier.checkpoint", AV_FIELD(classifier.checkpoint)));
    b.push_back(Number<int>("mlp.hidden", AV_FIELD(classifier.mlp.hidden_dim)));
    b.push_back(Number<double>("mlp.learning_rate", AV_FIELD(classifier.mlp.learning_rate)));
    b.push_back(Number<double>("mlp.weight_decay", AV_FIELD(classifier.mlp.weight_decay)));
    b.push_back(Number<int>("mlp.epochs", AV_FIELD(classifier.mlp.epochs)));
    b.push_back(Number<int>("mlp.batch_size", AV_FIELD(classifier.mlp.batch_size)));

    b.push_back(Custom(
        "augmenter.kind",
        [](ExperimentConfig& c, const std::string& v) {
          const std::string s = Trim(v);
          if (s.empty() || s == "none") {
            c.augmenter.kind.reset();
          } else {
            c.augmenter.kind = ParseScoreKind(s);
          }
        },
        [](const ExperimentConfig& c) {
          return c.augmenter.kind ? std::string(ToString(*c.augmenter.kind)) : std::string("none");
        }));
    b.push_back(Text("augmenter.checkpoint", AV_FIELD(augmenter.checkpoint)));
    b.push_back(Text("augmenter.score_cache", AV_FIELD(augmenter.score_cache)));
    b.push_back(Number<double>("augmenter.learning_rate", AV_FIELD(augmenter.train.learning_rate)));
    b.push_back(Number<int>("augmenter.epochs", AV_FIELD(augmenter.train.epochs)));
    b.push_back(Number<double>("augmenter.positive_fraction", AV_FIELD(augmenter.train.positive_fraction)));
    b.push_back(Number<int>("augmenter.negative_ratio", AV_FIELD(augmenter.train.negative_ratio)));
    b.push_back(Number<int>("augmenter.fae_hidden", AV_FIELD(augmenter.train.fae_hidden)));
    b.push_back(Number<int>("augmenter.fae_embedding", AV_FIELD(augmenter.train.fae_embedding)));
    b.push_back(Number<int>("augmenter.sim_heads", AV_FIELD(augmenter.train.sim_heads)));
    b.push_back(Number<double>("augmenter.sim_init_noise", AV_FIELD(augmenter.train.sim_init_noise)));
    b.push_back(Number<int>("augmenter.candidate_k", AV_FIELD(augmenter.scores.candidate_k)));
    b.push_back(Number<NodeId>("augmenter.dense_limit", AV_FIELD(augmenter.scores.dense_limit)));
    b.push_back(Flag("augmenter.binarize", AV_FIELD(augmenter.scores.binarize)));
    b.push_back(Custom(
        "augmenter.rank_population",
        [](ExperimentConfig& c, const std::string& v) {
          c.augmenter.population = ParseRankPopulation(Trim(v));
        },
        [](const ExperimentConfig& c) { return std::string(ToString(c.augmenter.population)); }));

    b.push_back(Number<double>("smoothing.p_plus", AV_FIELD(sparse_noise.p_plus)));
    b.push_back(Number<double>("smoothing.p_minus", AV_FIELD(sparse_noise.p_minus)));
    b.push_back(Number<int>("smoothing.groups", AV_FIELD(partition.num_groups)));
    b.push_back(Text("smoothing.hash", AV_FIELD(partition.hash_name)));
    b.push_back(Number<double>("smoothing.sigma", AV_FIELD(gaussian.sigma)));
    b.push_back(Number<int>("smoothing.samples", AV_FIELD(num_samples)));
    b.push_back(Number<double>("smoothing.alpha", AV_FIELD(alpha)));
    b.push_back(Flag("smoothing.bonferroni", AV_FIELD(bonferroni)));

    b.push_back(Custom(
        "filter.kind",
        [](ExperimentConfig& c, const std::string& v) { c.filter.kind = ParseFilterKind(Trim(v)); },
        [](const ExperimentConfig& c) { return std::string(ToString(c.filter.kind)); }));
    b.push_back(Number<double>("filter.theta", AV_FIELD(filter.theta)));

    b.push_back(Number<int>("certify.max_ra", AV_FIELD(max_ra)));
    b.push_back(Number<int>("certify.max_rd", AV_FIELD(max_rd)));
    b.push_back(Number<int>("certify.max_partition_budget", AV_FIELD(max_partition_budget)));
    b.push_back(Custom(
        "certify.radii",
        [](ExperimentConfig& c, const std::string& v) {
          c.radii.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            if (!Trim(item).empty()) c.radii.push_back(ParseNumber<double>("certify.radii", item));
          }
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.radii.size(); ++i) {
            if (i > 0) out += ", ";
            out += FormatDouble(c.radii[i]);
          }
          return out;
        }));
    return b;
  }();
  return bindings;
}

#undef AV_FIELD

const Binding& Find(std::string_view key) {
  for (const Binding& b : Bindings()) {
    if (b.key == key) return b;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string_view ToString(Scheme scheme) {
  switch (scheme) {
    case Scheme::kSparse:
      return "sparse";
    case Scheme::kPartition:
      return "partition";
    case Scheme::kGaussian:
      return "gaussian";
  }
  return "unknown";
}

Scheme ParseScheme(std::string_view name) {
  if (name == "sparse") return Scheme::kSparse;
  if (name == "partition" || name == "gnncert") return Scheme::kPartition;
  if (name == "gaussian") return Scheme::kGaussian;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

void ExperimentConfig::Validate() const {
  if (num_samples < 1) throw ConfigError("smoothing.samples must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("smoothing.alpha must lie in (0, 1)");
  if (threads < 0) throw ConfigError("run.threads must be non-negative");
  filter.Validate();
  switch (scheme) {
    case Scheme::kSparse:
      sparse_noise.Validate();
      if (max_ra < 0 || max_rd < 0) throw ConfigError("budget grid must be non-negative");
      break;
    case Scheme::kPartition:
      partition.Validate();
      if (max_partition_budget < 0) throw ConfigError("certify.max_partition_budget must be >= 0");
      break;
    case Scheme::kGaussian:
      gaussian.Validate();
      if (radii.empty()) throw ConfigError("certify.radii is empty");
      for (double r : radii) {
        if (!(r >= 0.0)) throw ConfigError("radii must be non-negative");
      }
      break;
  }
  if (scheme != Scheme::kGaussian) {
    if (data.edges.empty() != data.features.empty() || data.edges.empty() != data.labels.empty()) {
      throw ConfigError("data.edges, data.features and data.labels go together");
    }
    if (data.per_class_labeled < 1) throw ConfigError("data.per_class_labeled must be positive");
    if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
      throw ConfigError("data.test_fraction must lie in (0, 1)");
    }
    if (augmenter.scores.candidate_k < 1) throw ConfigError("augmenter.candidate_k must be positive");
  } else {
    if (blobs.train_csv.empty() != blobs.test_csv.empty()) {
      throw ConfigError("blobs.train_csv and blobs.test_csv go together");
    }
    if (blobs.dim < 1 || blobs.train_per_class < 1 || blobs.test_per_class < 1) {
      throw ConfigError("blob sizes must be positive");
    }
  }
}

int ExperimentConfig::ResolvedThreads() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::Set(std::string_view key, const std::string& value) {
  Find(key).set(*this, value);
}

std::string ExperimentConfig::Get(std::string_view key) const { return Find(key).get(*this); }

std::vector<std::string> ExperimentConfig::Keys() {
  std::vector<std::string> keys;
  for (const Binding& b : Bindings()) keys.push_back(b.key);
  return keys;
}

ExperimentConfig ExperimentConfig::Load(const std::string& path) {
  ExperimentConfig c;
  c.MergeFile(path);
  return c;
}

void ExperimentConfig::MergeFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  // The INI reader only knows ';' comments.
  std::stringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = Trim(line);
    cleaned << (t.starts_with('#') ? std::string() : line) << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(path + ": key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) Set(section + "." + key, value.data());
  }
}

void ExperimentConfig::ApplyEnvironment() {
  if (const char* dir = std::getenv("AUDITVOTES_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    output_dir = dir;
  }
  if (const char* t = std::getenv("AUDITVOTES_THREADS"); t != nullptr && *t != '\0') {
    Set("run.threads", t);
  }
}

std::string ExperimentConfig::ToIni() const {
  std::ostringstream out;
  std::string section;
  for (const Binding& b : Bindings()) {
    const auto dot = b.key.find('.');
    const std::string s = b.key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << b.key.substr(dot + 1) << " = " << b.get(*this) << '\n';
  }
  return out.str();
}

void ExperimentConfig::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << ToIni();
  if (!out) throw Error("failed writing " + path);
}

}  // namespace auditvotes
