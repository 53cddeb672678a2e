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

// Independent reference computations used by the tests. Nothing here calls the
// library routine it is meant to check.
#ifndef AUDITVOTES_TESTS_ORACLES_HPP_
#define AUDITVOTES_TESTS_ORACLES_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Core>

namespace oracles {

using Rational = boost::multiprecision::cpp_rational;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string File(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Region masses by enumerating all 2^(ra+rd) noise patterns on the perturbed
// slots. A pattern lands in region i when i slots look like the clean graph's
// flips: added slots that noise switched on plus deleted slots it switched off.
struct EnumeratedRegions {
  std::vector<double> r;
  std::vector<double> r_prime;
  // Per region, the smallest and largest P_G(Z) / P_G'(Z) seen.
  std::vector<double> min_ratio;
  std::vector<double> max_ratio;
};

EnumeratedRegions EnumerateRegions(double p_plus, double p_minus, int r_a, int r_d);

struct RationalRegions {
  std::vector<Rational> r;
  std::vector<Rational> r_prime;
};

// Same enumeration in exact arithmetic, taking the doubles at face value.
RationalRegions EnumerateRegionsExact(double p_plus, double p_minus, int r_a, int r_d);

// min s.r' - max t.r' over s, t in [0,1]^k with s.r = pa and t.r <= pb, by
// enumerating LP vertices (at most one fractional coordinate each).
Rational ExactMargin(const RationalRegions& regions, const Rational& pa, const Rational& pb);

// One-sided Clopper-Pearson bounds by bisection on binomial tail sums.
double BisectionCpLower(std::int64_t k, std::int64_t n, double level);
double BisectionCpUpper(std::int64_t k, std::int64_t n, double level);

// P(X >= k) for X ~ Binomial(n, p), summed term by term.
double BinomialUpperTail(std::int64_t k, std::int64_t n, double p);

// Largest m such that no reassignment of at most m votes changes the winner
// (argmax, ties to the smaller class), found by enumerating every tally with
// the same total. Returns the total when no rival tally exists.
std::int64_t MaxSafeVoteFlips(std::span<const std::int64_t> counts);

// Dense two-layer GCN logits with D^-1/2 (A + I) D^-1/2 built explicitly.
Eigen::MatrixXd DenseGcnLogits(const Eigen::MatrixXd& adjacency, const Eigen::MatrixXd& features,
                               const Eigen::MatrixXd& w1, const Eigen::MatrixXd& w2);

// Central difference of f with respect to *param.
double CentralDifference(const std::function<double()>& f, double* param, double step);

// |a - b| / max(|a|, |b|, floor).
double RelativeError(double a, double b, double floor = 1e-8);

}  // namespace oracles

#endif  // AUDITVOTES_TESTS_ORACLES_HPP_
