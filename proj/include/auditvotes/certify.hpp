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

#ifndef AUDITVOTES_CERTIFY_HPP_
#define AUDITVOTES_CERTIFY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auditvotes/graph.hpp"
#include "auditvotes/smoothing.hpp"
#include "auditvotes/voting.hpp"

namespace auditvotes {

// Distribution of the number of successes among independent Bernoulli trials.
std::vector<double> PoissonBinomialPmf(std::span<const double> probabilities);

// Constant likelihood-ratio regions for a perturbation adding r_a and
// deleting r_d edges. Region i holds the noise outcomes where i of the r_a + r_d
// perturbed slots end up matching the clean graph's noise pattern.
struct RegionTable {
  int r_a = 0;
  int r_d = 0;
  std::vector<double> log_ratios;  // log c_i; +-inf where one side has no mass
  std::vector<double> r;           // region mass under the clean graph
  std::vector<double> r_prime;     // region mass under the perturbed graph

  std::size_t size() const { return r.size(); }
  double ratio(std::size_t i) const;
};

RegionTable BuildRegionTable(const SparseNoiseConfig& noise, int r_a, int r_d);

struct MarginResult {
  double mu = 0.0;
  bool certified = false;
};

// Worst-case margin s.r' - t.r' of the fractional knapsack pair: s spends
// p_a_lower of clean mass on the highest ratios, t spends p_b_upper on the lowest.
MarginResult WorstCaseMargin(const RegionTable& table, const ProbabilityBounds& bounds);

enum class CertStatus { kCertified, kNotCertified, kAbstain };

std::string_view ToString(CertStatus status);

struct CertifyOptions {
  double alpha = 0.001;
  bool bonferroni = true;
};

struct NodeCertificate {
  CertStatus status = CertStatus::kAbstain;
  int predicted = -1;
  double mu = 0.0;
};

// Noise with no flip probability inside (0, 1) certifies only the clean
// graph, budget (0, 0).
NodeCertificate CertifyNode(const VoteTally& tally, const SparseNoiseConfig& noise,
                            int num_classes, int r_a, int r_d, const CertifyOptions& options = {});

// Per-node certificates over 0..max_ra x 0..max_rd. A budget counts as
// certified only when every budget it dominates is, so the grid is downward
// closed by construction.
class CertificateGrid {
 public:
  struct Row {
    NodeId node = 0;
    int label = -1;
    int predicted = -1;  // smoothed argmax, -1 without valid votes
    bool abstained = true;
    // certified_depth[ra] = number of leading r_d values certified at r_a.
    std::vector<int> certified_depth;
  };

  CertificateGrid(int max_ra, int max_rd) : max_ra_(max_ra), max_rd_(max_rd) {}

  int max_ra() const { return max_ra_; }
  int max_rd() const { return max_rd_; }
  const std::vector<Row>& rows() const { return rows_; }
  void AddRow(Row row) { rows_.push_back(std::move(row)); }

  CertStatus Status(std::size_t i, int ra, int rd) const;
  bool Correct(std::size_t i) const {
    return rows_[i].predicted >= 0 && rows_[i].predicted == rows_[i].label;
  }

  double CleanAccuracy() const;
  double AbstainRate() const;
  // Share of nodes both correct and certified at (ra, rd); abstains count as neither.
  double CertifiedAccuracy(int ra, int rd) const;

  // CSV "node,ra,rd,status".
  void WriteCsv(const std::string& path) const;

 private:
  int max_ra_;
  int max_rd_;
  std::vector<Row> rows_;
};

CertificateGrid CertifyGrid(std::span<const NodeId> nodes, std::span<const VoteTally> tallies,
                            std::span<const int> labels, const SparseNoiseConfig& noise,
                            int num_classes, int max_ra, int max_rd,
                            const CertifyOptions& options = {});

// Certified l2 radius (sigma / 2)(Phi^-1(p_a_lower) - Phi^-1(p_b_upper)), 0 when
// not positive.
double GaussianRadius(const ProbabilityBounds& bounds, double sigma);

struct GnnCertResult {
  int predicted = 0;
  // Largest number of edge modifications that cannot change the vote winner.
  std::int64_t budget = 0;
};

GnnCertResult GnnCertCertify(const VoteTally& tally);

}  // namespace auditvotes

#endif  // AUDITVOTES_CERTIFY_HPP_
