#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crround/balancedness.hpp"
#include "crround/core.hpp"
#include "crround/random.hpp"

namespace crround {

/// Result of resolving a realized set: the kept subset, and whether any
/// elements had to be dropped.
struct SchemeOutcome {
  ElementSet selected;
  bool truncated = false;
};

/// Mean coordinate over a non-empty set.
inline double mean_on(const FractionalPoint& x, const ElementSet& set) {
  detail::require_same_ground(x.ground(), set.ground(), "mean_on");
  if (set.is_empty()) throw std::invalid_argument("mean_on: empty set");
  return x.sum_over(set) / static_cast<double>(set.size());
}

namespace detail {

inline double binomial_exact(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(b);
}

// 1 + mean(x over A\B) - mean(x over B), the unnormalized subset weight.
// Always in [0,2] because both means live in [0,1].
inline double relative_weight(double x_A, double x_B, int a, int k) {
  return 1.0 + (x_A - x_B) / static_cast<double>(a - k) - x_B / static_cast<double>(k);
}

}  // namespace detail

/// Probability the scheme keeps exactly B out of realized A when |A| > k:
/// (1/C(|A|,k)) (1 + mean(x, A\B) - mean(x, B)).
inline double q_weight(const FractionalPoint& x, const ElementSet& A, const ElementSet& B,
                       int k) {
  detail::require_same_ground(x.ground(), A.ground(), "q_weight");
  if (!B.subset_of(A)) throw std::invalid_argument("q_weight: B not a subset of A");
  if (B.size() != k) throw std::invalid_argument("q_weight: |B| != k");
  if (A.size() <= k) throw std::invalid_argument("q_weight: requires |A| > k");
  if (k < 1) throw std::invalid_argument("q_weight: requires k >= 1");
  const double w = detail::relative_weight(x.sum_over(A), x.sum_over(B), A.size(), k);
  return w / detail::binomial_exact(A.size(), k);
}

/// Explicit probability table over the k-subsets of A.
struct SubsetDistribution {
  ElementSet base;
  int k = 0;
  std::vector<std::pair<ElementSet, double>> entries;

  double total() const {
    double s = 0.0;
    for (const auto& [set, p] : entries) s += p;
    return s;
  }
};

/// Number of table entries allowed in enumerate_distribution. The table is a
/// desk-scale oracle; the sampler below never materializes it.
inline constexpr double kDistributionTableCap = 1e6;

/// Materializes the full subset distribution for |A| > k >= 1. Throws when
/// C(|A|,k) exceeds the table cap.
inline SubsetDistribution enumerate_distribution(const FractionalPoint& x, const ElementSet& A,
                                                 int k) {
  detail::require_same_ground(x.ground(), A.ground(), "enumerate_distribution");
  if (k < 1) throw std::invalid_argument("enumerate_distribution: requires k >= 1");
  if (A.size() <= k) throw std::invalid_argument("enumerate_distribution: requires |A| > k");
  const int a = A.size();
  const double count = detail::binomial_exact(a, k);
  if (count > kDistributionTableCap)
    throw std::invalid_argument("enumerate_distribution: C(|A|,k) exceeds table cap");

  const double inv_count = 1.0 / count;
  const double x_A = x.sum_over(A);
  const std::vector<int>& elems = A.members();

  SubsetDistribution dist{A, k, {}};
  dist.entries.reserve(static_cast<std::size_t>(count));

  // Lexicographic k-combinations of A's member list.
  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::vector<int> members;
    members.reserve(static_cast<std::size_t>(k));
    double x_B = 0.0;
    for (int idx : pick) {
      members.push_back(elems[static_cast<std::size_t>(idx)]);
      x_B += x[elems[static_cast<std::size_t>(idx)]];
    }
    const double w = detail::relative_weight(x_A, x_B, a, k) * inv_count;
    dist.entries.emplace_back(ElementSet(A.ground(), std::move(members)), w);

    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == a - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }

  // Internal consistency: the weights must form a probability distribution.
  if (std::abs(dist.total() - 1.0) > 1e-12 * count)
    throw std::logic_error("enumerate_distribution: weights do not sum to 1");
  return dist;
}

/// P[e kept from realized A]. Closed form for |A| > k; for |A| <= k the
/// whole set is kept and the marginal is 1.
inline double marginal(const FractionalPoint& x, const ElementSet& A, int e, int k) {
  detail::require_same_ground(x.ground(), A.ground(), "marginal");
  if (!A.contains(e)) throw std::invalid_argument("marginal: e not in A");
  if (A.size() <= k) return 1.0;
  const double a = static_cast<double>(A.size());
  const double x_e = x[e];
  const double x_rest = x.sum_over(A) - x_e;
  return (static_cast<double>(k) - x_e) / a + x_rest / (a * (a - 1.0));
}

namespace detail {

// Exact sampler for the subset distribution, by rejection: propose a uniform
// k-subset (partial Fisher-Yates), accept with probability w/2 where w is the
// relative weight. w is in [0,2], so the envelope is valid and a proposal is
// accepted with probability 1/2 overall.
inline std::vector<int> sample_q_subset(const FractionalPoint& x, const ElementSet& A, int k,
                                        RandomStream& rng) {
  std::vector<int> pool = A.members();
  const double x_A = x.sum_over(A);
  const auto m = static_cast<std::uint64_t>(pool.size());
  while (true) {
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<std::uint64_t>(i) + rng.next_below(m - static_cast<std::uint64_t>(i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    double x_B = 0.0;
    for (int i = 0; i < k; ++i) x_B += x[pool[static_cast<std::size_t>(i)]];
    if (rng.next_unit() < 0.5 * relative_weight(x_A, x_B, A.size(), k)) {
      std::vector<int> members(pool.begin(), pool.begin() + k);
      return members;
    }
  }
}

}  // namespace detail

/// Runs the scheme on a realized set A under a uniform matroid: keep A
/// whole when |A| <= k, otherwise draw a k-subset from the exact subset
/// distribution. The balancedness guarantee presupposes x in the matroid
/// polytope, so points outside it (beyond tol) are rejected.
inline SchemeOutcome select(const FractionalPoint& x, const ElementSet& A,
                            const UniformMatroid& matroid, RandomStream& rng,
                            double tol = kPolytopeTol) {
  detail::require_same_ground(x.ground(), matroid.ground(), "select");
  detail::require_same_ground(A.ground(), matroid.ground(), "select");
  if (!in_polytope(matroid, x, tol))
    throw std::invalid_argument("select: x outside the matroid polytope");
  const int k = matroid.rank_bound();
  if (A.size() <= k) return {A, false};
  if (k == 0) return {ElementSet::empty(A.ground()), true};
  return {ElementSet(A.ground(), detail::sample_q_subset(x, A, k, rng)), true};
}

/// Runs the per-block uniform scheme independently inside each block of a
/// partition matroid and returns the disjoint union of the outputs.
inline SchemeOutcome select_partition(const FractionalPoint& x, const ElementSet& A,
                                      const PartitionMatroid& matroid, RandomStream& rng,
                                      double tol = kPolytopeTol) {
  detail::require_same_ground(x.ground(), matroid.ground(), "select_partition");
  detail::require_same_ground(A.ground(), matroid.ground(), "select_partition");
  if (!in_polytope(matroid, x, tol))
    throw std::invalid_argument("select_partition: x outside the matroid polytope");
  std::vector<int> kept;
  bool truncated = false;
  for (int b = 0; b < matroid.block_count(); ++b) {
    const ElementSet realized = A.intersect(matroid.block(b));
    const int d = matroid.capacity(b);
    if (realized.size() <= d) {
      kept.insert(kept.end(), realized.members().begin(), realized.members().end());
      continue;
    }
    truncated = true;
    if (d == 0) continue;
    const std::vector<int> chosen = detail::sample_q_subset(x, realized, d, rng);
    kept.insert(kept.end(), chosen.begin(), chosen.end());
  }
  return {ElementSet(A.ground(), std::move(kept)), truncated};
}

}  // namespace crround
