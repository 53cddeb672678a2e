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

#ifndef AUDITVOTES_RNG_HPP_
#define AUDITVOTES_RNG_HPP_

#include <cstdint>
#include <random>

namespace auditvotes {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the independent substream `index` under `seed`.
constexpr std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(SplitMix64(seed) ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng MakeRng(std::uint64_t seed, std::uint64_t index = 0) {
  return Rng(MixSeed(seed, index));
}

// Named fan-out of a root seed. Each stage draws from its own stream so that
// toggling one stage never shifts the random numbers seen by another.
enum class Stream : std::uint64_t {
  kSplit = 1,
  kClassifierInit = 2,
  kClassifierNoise = 3,
  kAugmenter = 4,
  kSmoothingNoise = 5,
  kAttack = 6,
  kData = 7,
};

constexpr std::uint64_t DeriveSeed(std::uint64_t root, Stream stream) {
  return MixSeed(root, 0xa5a5000000000000ULL | static_cast<std::uint64_t>(stream));
}

}  // namespace auditvotes

#endif  // AUDITVOTES_RNG_HPP_
