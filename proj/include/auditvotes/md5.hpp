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

#ifndef AUDITVOTES_MD5_HPP_
#define AUDITVOTES_MD5_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace auditvotes {

using Md5Digest = std::array<std::uint8_t, 16>;

// RFC 1321 message digest.
Md5Digest Md5(std::string_view message);
std::string Md5Hex(std::string_view message);

// The digest read as a 128-bit big-endian unsigned integer, reduced mod m.
std::uint64_t DigestMod(const Md5Digest& digest, std::uint64_t m);

}  // namespace auditvotes

#endif  // AUDITVOTES_MD5_HPP_
