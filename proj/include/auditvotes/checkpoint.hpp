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

#ifndef AUDITVOTES_CHECKPOINT_HPP_
#define AUDITVOTES_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace auditvotes {

enum class CheckpointKind : std::uint32_t {
  kGcn = 1,
  kMlp = 2,
  kFaeAugmenter = 3,
  kSimAugmenter = 4,
};

struct NamedMatrix {
  std::string name;
  Eigen::MatrixXd value;
};

struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kGcn;
  std::vector<NamedMatrix> matrices;

  const Eigen::MatrixXd& Get(const std::string& name) const;
};

// Binary layout, little-endian:
//   "AVCK" | u32 version | u32 kind | u32 count |
//   count x { u32 name_len | name | i64 rows | i64 cols | f64[rows*cols] col-major }
inline constexpr std::uint32_t kCheckpointVersion = 1;

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

// Human-readable dump of the same content.
void ExportCheckpointJson(const Checkpoint& checkpoint, const std::string& path);

}  // namespace auditvotes

#endif  // AUDITVOTES_CHECKPOINT_HPP_
