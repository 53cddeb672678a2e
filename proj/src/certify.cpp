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

#include "auditvotes/certify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "auditvotes/error.hpp"
#include "auditvotes/logging.hpp"

namespace auditvotes {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// exponent * log(base) with 0 * log(0) taken as 0.
double PowerTerm(double log_base, int exponent) {
  return exponent == 0 ? 0.0 : exponent * log_base;
}

// Orders regions by decreasing ratio; ties by index.
std::vector<std::size_t> DescendingOrder(const RegionTable& table) {
  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.log_ratios[a] > table.log_ratios[b];
  });
  return order;
}

}  // namespace

std::vector<double> PoissonBinomialPmf(std::span<const double> probabilities) {
  std::vector<double> pmf{1.0};
  pmf.reserve(probabilities.size() + 1);
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw BoundsError("Bernoulli probability outside [0, 1]");
    pmf.push_back(0.0);
    for (std::size_t k = pmf.size() - 1; k > 0; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return pmf;
}

double RegionTable::ratio(std::size_t i) const { return std::exp(log_ratios[i]); }

namespace {

bool HasRegions(const SparseNoiseConfig& noise) {
  return (noise.p_plus > 0.0 && noise.p_plus < 1.0) || (noise.p_minus > 0.0 && noise.p_minus < 1.0);
}

}  // namespace

RegionTable BuildRegionTable(const SparseNoiseConfig& noise, int r_a, int r_d) {
  noise.Validate();
  if (r_a < 0 || r_d < 0) throw BoundsError("budgets must be non-negative");
  const double pp = noise.p_plus;
  const double pm = noise.p_minus;
  if (!(pp > 0.0 && pp < 1.0) && !(pm > 0.0 && pm < 1.0)) {
    throw ConfigError("noise must have a flip probability strictly inside (0, 1)");
  }
  RegionTable t;
  t.r_a = r_a;
  t.r_d = r_d;
  std::vector<double> clean(static_cast<std::size_t>(r_a), pp);
  clean.insert(clean.end(), static_cast<std::size_t>(r_d), pm);
  std::vector<double> perturbed(static_cast<std::size_t>(r_a), 1.0 - pm);
  perturbed.insert(perturbed.end(), static_cast<std::size_t>(r_d), 1.0 - pp);
  t.r = PoissonBinomialPmf(clean);
  t.r_prime = PoissonBinomialPmf(perturbed);

  const double log_a = std::log(pp) - std::log(1.0 - pm);  // log(p+ / (1 - p-))
  const double log_d = std::log(pm) - std::log(1.0 - pp);  // log(p- / (1 - p+))
  t.log_ratios.resize(t.r.size());
  for (std::size_t i = 0; i < t.r.size(); ++i) {
    const bool has_r = t.r[i] > 0.0;
    const bool has_rp = t.r_prime[i] > 0.0;
    if (has_r && !has_rp) {
      t.log_ratios[i] = kInf;
    } else if (!has_r) {
      t.log_ratios[i] = -kInf;  // includes empty regions, which carry no mass
    } else {
      const int k = static_cast<int>(i);
      double lr = PowerTerm(log_a, k - r_d) + PowerTerm(log_d, k - r_a);
      if (!std::isfinite(lr)) lr = std::log(t.r[i]) - std::log(t.r_prime[i]);
      t.log_ratios[i] = lr;
    }
  }
  return t;
}

MarginResult WorstCaseMargin(const RegionTable& table, const ProbabilityBounds& bounds) {
  double pa = bounds.p_a_lower;
  double pb = bounds.p_b_upper;
  if (!(pa >= 0.0 && pa <= 1.0) || !(pb >= 0.0 && pb <= 1.0)) {
    throw BoundsError("probability bounds outside [0, 1]");
  }
  if (pa + pb > 1.0) {
    LogWarning("p_a_lower + p_b_upper exceeds 1; clamping p_b_upper");
    pb = 1.0 - pa;
  }
  const std::vector<std::size_t> order = DescendingOrder(table);

  // s: smallest perturbed mass reachable with clean mass pa.
  CompensatedSum s_mass;
  double remaining = pa;
  for (std::size_t i : order) {
    if (remaining <= 0.0) break;
    const double r = table.r[i];
    if (r <= 0.0) continue;
    const double take = std::min(r, remaining);
    s_mass.Add(take / r * table.r_prime[i]);
    remaining -= take;
  }
  // t: largest perturbed mass reachable with clean mass pb. Regions without
  // clean mass are free.
  CompensatedSum t_mass;
  remaining = pb;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t i = *it;
    const double r = table.r[i];
    if (r <= 0.0) {
      t_mass.Add(table.r_prime[i]);
      continue;
    }
    if (remaining <= 0.0) break;
    const double take = std::min(r, remaining);
    t_mass.Add(take / r * table.r_prime[i]);
    remaining -= take;
  }
  MarginResult m;
  m.mu = s_mass.value() - t_mass.value();
  m.certified = m.mu > 0.0;
  return m;
}

std::string_view ToString(CertStatus status) {
  switch (status) {
    case CertStatus::kCertified:
      return "certified";
    case CertStatus::kNotCertified:
      return "not_certified";
    case CertStatus::kAbstain:
      return "abstain";
  }
  return "unknown";
}

NodeCertificate CertifyNode(const VoteTally& tally, const SparseNoiseConfig& noise,
                            int num_classes, int r_a, int r_d, const CertifyOptions& options) {
  NodeCertificate c;
  if (tally.n_valid > 0) c.predicted = TopTwoClasses(tally).top;
  if (AbstainTest(tally, options.alpha) == Decision::kAbstain) return c;
  const auto bounds = ClopperPearsonBounds(tally, options.alpha, num_classes, options.bonferroni);
  if (!bounds) return c;
  if (!HasRegions(noise) && r_a + r_d > 0) {
    // Without randomness nothing beyond the clean graph is certifiable.
    c.status = CertStatus::kNotCertified;
    return c;
  }
  const MarginResult m = r_a + r_d == 0
                             ? MarginResult{bounds->p_a_lower - bounds->p_b_upper,
                                            bounds->p_a_lower > bounds->p_b_upper}
                             : WorstCaseMargin(BuildRegionTable(noise, r_a, r_d), *bounds);
  c.mu = m.mu;
  c.status = m.certified ? CertStatus::kCertified : CertStatus::kNotCertified;
  return c;
}

CertStatus CertificateGrid::Status(std::size_t i, int ra, int rd) const {
  const Row& row = rows_.at(i);
  if (ra < 0 || rd < 0 || ra > max_ra_ || rd > max_rd_) throw BoundsError("budget outside grid");
  if (row.abstained) return CertStatus::kAbstain;
  return rd < row.certified_depth[ra] ? CertStatus::kCertified : CertStatus::kNotCertified;
}

double CertificateGrid::CleanAccuracy() const {
  if (rows_.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) correct += Correct(i);
  return static_cast<double>(correct) / static_cast<double>(rows_.size());
}

double CertificateGrid::AbstainRate() const {
  if (rows_.empty()) return 0.0;
  std::size_t abstained = 0;
  for (const Row& row : rows_) abstained += row.abstained;
  return static_cast<double>(abstained) / static_cast<double>(rows_.size());
}

double CertificateGrid::CertifiedAccuracy(int ra, int rd) const {
  if (rows_.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    hits += Correct(i) && Status(i, ra, rd) == CertStatus::kCertified;
  }
  return static_cast<double>(hits) / static_cast<double>(rows_.size());
}

void CertificateGrid::WriteCsv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "node,ra,rd,status\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (int ra = 0; ra <= max_ra_; ++ra) {
      for (int rd = 0; rd <= max_rd_; ++rd) {
        out << rows_[i].node << ',' << ra << ',' << rd << ',' << ToString(Status(i, ra, rd))
            << '\n';
      }
    }
  }
  if (!out) throw Error("failed writing " + path);
}

CertificateGrid CertifyGrid(std::span<const NodeId> nodes, std::span<const VoteTally> tallies,
                            std::span<const int> labels, const SparseNoiseConfig& noise,
                            int num_classes, int max_ra, int max_rd,
                            const CertifyOptions& options) {
  if (nodes.size() != tallies.size()) throw ShapeError("one tally per node expected");
  if (max_ra < 0 || max_rd < 0) throw BoundsError("budgets must be non-negative");
  CertificateGrid grid(max_ra, max_rd);
  const bool has_regions = HasRegions(noise);

  // One region table per budget, built on first use.
  const std::size_t width = static_cast<std::size_t>(max_rd) + 1;
  std::vector<RegionTable> tables(static_cast<std::size_t>(max_ra + 1) * width);
  std::vector<char> built(tables.size(), 0);
  auto table = [&](int ra, int rd) -> const RegionTable& {
    const std::size_t k = static_cast<std::size_t>(ra) * width + static_cast<std::size_t>(rd);
    if (!built[k]) {
      tables[k] = BuildRegionTable(noise, ra, rd);
      built[k] = 1;
    }
    return tables[k];
  };

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const VoteTally& tally = tallies[i];
    CertificateGrid::Row row;
    row.node = nodes[i];
    const NodeId v = nodes[i];
    row.label = v >= 0 && static_cast<std::size_t>(v) < labels.size() ? labels[v] : -1;
    if (tally.n_valid > 0) row.predicted = TopTwoClasses(tally).top;
    row.certified_depth.assign(static_cast<std::size_t>(max_ra) + 1, 0);
    row.abstained = AbstainTest(tally, options.alpha) == Decision::kAbstain;
    if (!row.abstained) {
      const auto bounds =
          ClopperPearsonBounds(tally, options.alpha, num_classes, options.bonferroni);
      // Staircase walk: each row stops at the first failure or at the depth
      // of the row above.
      int limit = max_rd + 1;
      for (int ra = 0; ra <= max_ra && limit > 0; ++ra) {
        int depth = 0;
        while (depth < limit) {
          const bool ok = ra + depth == 0 ? bounds->p_a_lower > bounds->p_b_upper
                          : has_regions && WorstCaseMargin(table(ra, depth), *bounds).certified;
          if (!ok) break;
          ++depth;
        }
        row.certified_depth[ra] = depth;
        limit = depth;
      }
    }
    grid.AddRow(std::move(row));
  }
  return grid;
}

double GaussianRadius(const ProbabilityBounds& bounds, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const double pa = bounds.p_a_lower;
  const double pb = bounds.p_b_upper;
  if (!(pa >= 0.0 && pa <= 1.0) || !(pb >= 0.0 && pb <= 1.0)) {
    throw BoundsError("probability bounds outside [0, 1]");
  }
  if (pa <= pb) return 0.0;
  const boost::math::normal_distribution<double> normal;
  const double qa = pa >= 1.0 ? kInf : boost::math::quantile(normal, pa);
  const double qb = pb <= 0.0 ? -kInf : boost::math::quantile(normal, pb);
  return std::max(0.0, 0.5 * sigma * (qa - qb));
}

GnnCertResult GnnCertCertify(const VoteTally& tally) {
  if (tally.counts.empty()) throw ShapeError("empty tally");
  GnnCertResult result;
  const TopTwo top = TopTwoClasses(tally);
  result.predicted = top.top;
  if (top.runner_up < 0) {
    // No rival class: no edit can change the winner.
    result.budget = std::numeric_limits<std::int64_t>::max();
    return result;
  }
  std::int64_t m = std::numeric_limits<std::int64_t>::max();
  for (std::size_t y = 0; y < tally.counts.size(); ++y) {
    const int yi = static_cast<int>(y);
    if (yi == top.top) continue;
    const std::int64_t gap = top.n_top - tally.counts[y] - (yi < top.top ? 1 : 0);
    m = std::min(m, gap >= 0 ? gap / 2 : -1);
  }
  result.budget = std::max<std::int64_t>(0, m);
  return result;
}

}  // namespace auditvotes
