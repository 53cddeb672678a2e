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

#include "auditvotes/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "auditvotes/error.hpp"

namespace auditvotes {
namespace {

constexpr std::array<char, 4> kMagic = {'A', 'V', 'C', 'K'};

template <typename T>
void WritePod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::ifstream& in, const std::string& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw ParseError(path, 0, "truncated checkpoint");
  }
  return value;
}

}  // namespace

const Eigen::MatrixXd& Checkpoint::Get(const std::string& name) const {
  for (const auto& m : matrices) {
    if (m.name == name) return m.value;
  }
  throw ConfigError("checkpoint has no matrix named '" + name + "'");
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  WritePod(out, kCheckpointVersion);
  WritePod(out, static_cast<std::uint32_t>(checkpoint.kind));
  WritePod(out, static_cast<std::uint32_t>(checkpoint.matrices.size()));
  for (const auto& m : checkpoint.matrices) {
    WritePod(out, static_cast<std::uint32_t>(m.name.size()));
    out.write(m.name.data(), static_cast<std::streamsize>(m.name.size()));
    WritePod(out, static_cast<std::int64_t>(m.value.rows()));
    WritePod(out, static_cast<std::int64_t>(m.value.cols()));
    out.write(reinterpret_cast<const char*>(m.value.data()),
              static_cast<std::streamsize>(m.value.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ParseError(path, 0, "not a checkpoint file");
  }
  const auto version = ReadPod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw ParseError(path, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint checkpoint;
  checkpoint.kind = static_cast<CheckpointKind>(ReadPod<std::uint32_t>(in, path));
  const auto count = ReadPod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedMatrix m;
    m.name.resize(ReadPod<std::uint32_t>(in, path));
    if (!in.read(m.name.data(), static_cast<std::streamsize>(m.name.size()))) {
      throw ParseError(path, 0, "truncated checkpoint");
    }
    const auto rows = ReadPod<std::int64_t>(in, path);
    const auto cols = ReadPod<std::int64_t>(in, path);
    if (rows < 0 || cols < 0) throw ParseError(path, 0, "negative matrix shape");
    m.value.resize(rows, cols);
    if (!in.read(reinterpret_cast<char*>(m.value.data()),
                 static_cast<std::streamsize>(m.value.size() * sizeof(double)))) {
      throw ParseError(path, 0, "truncated checkpoint");
    }
    checkpoint.matrices.push_back(std::move(m));
  }
  return checkpoint;
}

void ExportCheckpointJson(const Checkpoint& checkpoint, const std::string& path) {
  nlohmann::json doc;
  doc["version"] = kCheckpointVersion;
  doc["kind"] = static_cast<std::uint32_t>(checkpoint.kind);
  doc["matrices"] = nlohmann::json::array();
  for (const auto& m : checkpoint.matrices) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.value.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.value.cols(); ++c) row.push_back(m.value(r, c));
      rows.push_back(std::move(row));
    }
    doc["matrices"].push_back({{"name", m.name},
                               {"rows", m.value.rows()},
                               {"cols", m.value.cols()},
                               {"data", std::move(rows)}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << doc.dump(1) << '\n';
}

}  // namespace auditvotes
