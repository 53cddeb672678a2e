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

#ifndef AUDITVOTES_ERROR_HPP_
#define AUDITVOTES_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace auditvotes {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// An index (node id, class id, dimension) outside its declared range.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// A class cannot supply enough nodes for the requested split.
class SplitError : public Error {
 public:
  using Error::Error;
};

// Matrix or vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numeric routine could not produce a finite answer.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace auditvotes

#endif  // AUDITVOTES_ERROR_HPP_
