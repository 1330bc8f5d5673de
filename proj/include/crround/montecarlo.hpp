#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "crround/balancedness.hpp"
#include "crround/core.hpp"
#include "crround/random.hpp"
#include "crround/scheme.hpp"

namespace crround {

/// Independent Bernoulli rounding of x: element i enters with probability
/// x_i.
inline ElementSet sample_R(const FractionalPoint& x, RandomStream& rng) {
  std::vector<int> members;
  for (int i = 0; i < x.size(); ++i)
    if (rng.bernoulli(x[i])) members.push_back(i);
  return ElementSet(x.ground(), std::move(members));
}

/// Trial-batch configuration. Shard streams are derived deterministically
/// from the seed, so a run is reproducible for a fixed (seed, shards).
struct TrialConfig {
  long trials = 100000;
  std::uint64_t seed = 1;
  double z = 3.0;
  int parallel_shards = 1;
};

/// Per-element conditional keep-rate estimate with a normal-approximation
/// confidence interval. Elements that never entered the realized set carry
/// trials_conditioned == 0 and no estimate.
struct BalancednessEstimate {
  int element = 0;
  double conditional_keep = std::numeric_limits<double>::quiet_NaN();
  long trials_conditioned = 0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double ci_low = 0.0;
  double ci_high = 1.0;

  bool has_data() const { return trials_conditioned > 0; }
};

namespace detail {

struct TrialCounts {
  std::vector<long> realized;
  std::vector<long> kept;

  explicit TrialCounts(int n)
      : realized(static_cast<std::size_t>(n), 0), kept(static_cast<std::size_t>(n), 0) {}

  void merge(const TrialCounts& other) {
    for (std::size_t i = 0; i < realized.size(); ++i) {
      realized[i] += other.realized[i];
      kept[i] += other.kept[i];
    }
  }
};

inline SchemeOutcome resolve(const FractionalPoint& x, const ElementSet& A,
                             const UniformMatroid& m, RandomStream& rng) {
  return select(x, A, m, rng);
}

inline SchemeOutcome resolve(const FractionalPoint& x, const ElementSet& A,
                             const PartitionMatroid& m, RandomStream& rng) {
  return select_partition(x, A, m, rng);
}

template <class Matroid>
TrialCounts run_shard(const Matroid& matroid, const FractionalPoint& x, long trials,
                      RandomStream rng) {
  const int n = x.size();
  TrialCounts counts(n);
  std::vector<int> realized;
  realized.reserve(static_cast<std::size_t>(n));
  for (long t = 0; t < trials; ++t) {
    realized.clear();
    for (int i = 0; i < n; ++i)
      if (rng.bernoulli(x[i])) realized.push_back(i);
    for (int i : realized) ++counts.realized[static_cast<std::size_t>(i)];
    SchemeOutcome out = resolve(x, ElementSet(x.ground(), realized), matroid, rng);
    for (int i : out.selected.members()) ++counts.kept[static_cast<std::size_t>(i)];
  }
  return counts;
}

template <class Matroid>
std::vector<BalancednessEstimate> estimate_balancedness_impl(const Matroid& matroid,
                                                             const FractionalPoint& x,
                                                             const TrialConfig& cfg) {
  require_same_ground(matroid.ground(), x.ground(), "estimate_balancedness");
  if (cfg.trials < 1) throw std::invalid_argument("estimate_balancedness: trials must be >= 1");
  if (cfg.parallel_shards < 1)
    throw std::invalid_argument("estimate_balancedness: shards must be >= 1");
  if (!in_polytope(matroid, x))
    throw std::invalid_argument("estimate_balancedness: x outside the matroid polytope");

  const int shards = cfg.parallel_shards;
  std::vector<TrialCounts> partial(static_cast<std::size_t>(shards), TrialCounts(x.size()));
  {
    std::vector<std::thread> pool;
    for (int s = 0; s < shards; ++s) {
      const long share = cfg.trials / shards + (s < cfg.trials % shards ? 1 : 0);
      pool.emplace_back([&, s, share] {
        partial[static_cast<std::size_t>(s)] =
            run_shard(matroid, x, share, RandomStream::derive(cfg.seed, static_cast<std::uint64_t>(s)));
      });
    }
    for (auto& th : pool) th.join();
  }
  TrialCounts total(x.size());
  for (const TrialCounts& p : partial) total.merge(p);

  std::vector<BalancednessEstimate> estimates;
  for (int i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) continue;  // conditioning undefined off the support
    BalancednessEstimate est;
    est.element = i;
    est.trials_conditioned = total.realized[static_cast<std::size_t>(i)];
    if (est.trials_conditioned > 0) {
      const double m = static_cast<double>(est.trials_conditioned);
      est.conditional_keep = static_cast<double>(total.kept[static_cast<std::size_t>(i)]) / m;
      est.std_error = std::sqrt(est.conditional_keep * (1.0 - est.conditional_keep) / m);
      est.ci_low = est.conditional_keep - cfg.z * est.std_error;
      est.ci_high = est.conditional_keep + cfg.z * est.std_error;
    }
    estimates.push_back(est);
  }
  return estimates;
}

}  // namespace detail

/// Conditional keep-rate P[i kept | i realized] per support element, from
/// cfg.trials independent realizations. Conditioning is by rejection: one
/// trial batch serves every element at once.
inline std::vector<BalancednessEstimate> estimate_balancedness(const UniformMatroid& matroid,
                                                               const FractionalPoint& x,
                                                               const TrialConfig& cfg) {
  return detail::estimate_balancedness_impl(matroid, x, cfg);
}

inline std::vector<BalancednessEstimate> estimate_balancedness(const PartitionMatroid& matroid,
                                                               const FractionalPoint& x,
                                                               const TrialConfig& cfg) {
  return detail::estimate_balancedness_impl(matroid, x, cfg);
}

/// Empirical P[e kept from the fixed realized set A], one frequency per
/// element of A, from repeated scheme runs.
inline std::vector<std::pair<int, double>> estimate_marginal(const FractionalPoint& x,
                                                             const ElementSet& A, int k,
                                                             const TrialConfig& cfg) {
  if (A.size() <= k) throw std::invalid_argument("estimate_marginal: requires |A| > k");
  if (cfg.trials < 1) throw std::invalid_argument("estimate_marginal: trials must be >= 1");
  const UniformMatroid matroid(x.ground(), k);
  RandomStream rng(cfg.seed);
  std::vector<long> kept(static_cast<std::size_t>(x.size()), 0);
  for (long t = 0; t < cfg.trials; ++t) {
    SchemeOutcome out = select(x, A, matroid, rng);
    for (int i : out.selected.members()) ++kept[static_cast<std::size_t>(i)];
  }
  std::vector<std::pair<int, double>> freq;
  freq.reserve(static_cast<std::size_t>(A.size()));
  for (int i : A.members())
    freq.emplace_back(i, static_cast<double>(kept[static_cast<std::size_t>(i)]) /
                             static_cast<double>(cfg.trials));
  return freq;
}

struct ChiSquareFit {
  double statistic = 0.0;
  int dof = 0;
  double critical = 0.0;
  bool pass = false;
  long draws = 0;
  int cells = 0;  // positive-probability cells entering the statistic
};

/// Upper critical value of the chi-square distribution via the
/// Wilson-Hilferty cube approximation, at the 10^-3 significance level.
/// Zero degrees of freedom (a single possible outcome) degenerates to 0.
inline double chi_square_critical(int dof) {
  if (dof < 1) return 0.0;
  constexpr double z_999 = 3.090232306167813;  // standard normal 0.999 quantile
  const double nu = static_cast<double>(dof);
  const double u = 2.0 / (9.0 * nu);
  const double t = 1.0 - u + z_999 * std::sqrt(u);
  return nu * t * t * t;
}

inline constexpr double kChiSquareTableCap = 1e4;
inline constexpr double kChiSquareMinExpected = 5.0;

/// Pearson goodness-of-fit of the sampler's empirical subset frequencies
/// against the enumerated distribution. Zero-probability cells never enter
/// the statistic, but any draw landing in one fails the test outright.
inline ChiSquareFit chi_square_fit(const FractionalPoint& x, const ElementSet& A, int k,
                                   const TrialConfig& cfg) {
  const double table_size = detail::binomial_exact(A.size(), k);
  if (table_size > kChiSquareTableCap)
    throw std::invalid_argument("chi_square_fit: subset table too large");
  const SubsetDistribution dist = enumerate_distribution(x, A, k);

  double min_positive = 1.0;
  int positive_cells = 0;
  for (const auto& [set, p] : dist.entries) {
    if (p > 0.0) {
      ++positive_cells;
      min_positive = std::min(min_positive, p);
    }
  }
  if (static_cast<double>(cfg.trials) * min_positive < kChiSquareMinExpected)
    throw std::invalid_argument("chi_square_fit: expected count per cell below 5");

  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(dist.entries.size());
  for (std::size_t i = 0; i < dist.entries.size(); ++i)
    index.emplace(dist.entries[i].first.mask(), i);

  std::vector<long> observed(dist.entries.size(), 0);
  const UniformMatroid matroid(x.ground(), k);
  RandomStream rng(cfg.seed);
  for (long t = 0; t < cfg.trials; ++t) {
    SchemeOutcome out = select(x, A, matroid, rng);
    ++observed[index.at(out.selected.mask())];
  }

  ChiSquareFit fit;
  fit.draws = cfg.trials;
  fit.cells = positive_cells;
  fit.dof = positive_cells - 1;
  bool zero_cell_hit = false;
  for (std::size_t i = 0; i < dist.entries.size(); ++i) {
    const double expected = dist.entries[i].second * static_cast<double>(cfg.trials);
    if (dist.entries[i].second <= 0.0) {
      if (observed[i] > 0) zero_cell_hit = true;
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - expected;
    fit.statistic += diff * diff / expected;
  }
  fit.critical = chi_square_critical(fit.dof);
  fit.pass = !zero_cell_hit && fit.statistic <= fit.critical;
  return fit;
}

struct MonotonicityReport {
  long chains = 0;
  long violations = 0;
  double min_difference = std::numeric_limits<double>::infinity();
};

inline constexpr double kMonotonicityTol = 1e-12;

/// Samples random chains e in A, A+f and evaluates the closed-form marginal
/// difference P[e kept from A] - P[e kept from A+f], which the scheme keeps
/// nonnegative. Differences below -1e-12 count as violations.
inline MonotonicityReport monotonicity_probe(const FractionalPoint& x, int k, long samples,
                                             RandomStream& rng) {
  const int n = x.size();
  if (n < 2) throw std::invalid_argument("monotonicity_probe: needs at least two elements");
  MonotonicityReport report;
  for (long t = 0; t < samples; ++t) {
    const int e = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    std::vector<int> members{e};
    for (int i = 0; i < n; ++i)
      if (i != e && rng.bernoulli(0.5)) members.push_back(i);
    if (static_cast<int>(members.size()) == n) members.pop_back();  // keep room for f
    const ElementSet A(x.ground(), std::move(members));
    int f;
    do {
      f = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    } while (A.contains(f));
    const double diff = marginal(x, A, e, k) - marginal(x, A.with(f), e, k);
    ++report.chains;
    report.min_difference = std::min(report.min_difference, diff);
    if (diff < -kMonotonicityTol) ++report.violations;
  }
  return report;
}

/// Uniform draw from [0,1]^n pushed into the polytope x(N) <= k by pure
/// rescaling. Scaling only ever shrinks, so the box constraints stay intact.
inline FractionalPoint random_point_in_polytope(GroundSet ground, int k, RandomStream& rng) {
  std::vector<double> coords(static_cast<std::size_t>(ground.size()));
  for (double& v : coords) v = rng.next_unit();
  double sum = 0.0;
  for (double v : coords) sum += v;
  if (sum > static_cast<double>(k) && sum > 0.0) {
    const double scale = static_cast<double>(k) / sum;
    for (double& v : coords) v *= scale;
  }
  return FractionalPoint(std::move(coords));
}

/// Random point on the tight face x(N) = k: scale a uniform draw toward the
/// cap, pinning any coordinate that would pass 1 and rescaling the rest.
/// Each round pins at least one coordinate, so this always lands on the
/// face; rejection would practically never terminate for k close to n.
inline FractionalPoint random_point_on_face(GroundSet ground, int k, RandomStream& rng) {
  const int n = ground.size();
  if (k < 1 || k > n) throw std::invalid_argument("random_point_on_face: requires 1 <= k <= n");
  std::vector<double> coords(static_cast<std::size_t>(n));
  for (double& v : coords) v = rng.next_unit();
  std::vector<bool> pinned(static_cast<std::size_t>(n), false);
  double budget = static_cast<double>(k);
  for (int round = 0; round <= n; ++round) {
    double free_sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (!pinned[static_cast<std::size_t>(i)]) free_sum += coords[static_cast<std::size_t>(i)];
    if (free_sum <= 0.0) break;
    const double scale = budget / free_sum;
    bool pinned_any = false;
    if (scale > 1.0) {
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!pinned[idx] && coords[idx] * scale >= 1.0) {
          coords[idx] = 1.0;
          pinned[idx] = true;
          budget -= 1.0;
          pinned_any = true;
        }
      }
    }
    if (!pinned_any) {
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!pinned[idx]) coords[idx] *= scale;
      }
      break;
    }
  }
  return FractionalPoint(std::move(coords));
}

}  // namespace crround
