#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "crround/balancedness.hpp"
#include "crround/core.hpp"
#include "crround/random.hpp"
#include "crround/scheme.hpp"

namespace crround {

/// Hard caps on brute-force enumeration. Single sums walk all 2^n subsets;
/// the drop-probability polynomial additionally walks every k-subset of each
/// realized set, so it gets a tighter bound.
inline constexpr int kMaxEnumerationElements = 24;
inline constexpr int kMaxDoubleSumElements = 20;

/// Fixes the distinguished element e of an n-element ground set, with
/// n small enough for full subset enumeration.
struct AnalysisContext {
  GroundSet ground;
  int k;
  int e;

  AnalysisContext(GroundSet ground_in, int k_in, int e_in)
      : ground(ground_in), k(k_in), e(e_in) {
    if (ground.size() > kMaxEnumerationElements)
      throw std::invalid_argument("AnalysisContext: ground set too large to enumerate");
    if (!ground.contains(e)) throw std::invalid_argument("AnalysisContext: e outside ground set");
    if (k < 1 || k > ground.size() - 1)
      throw std::invalid_argument("AnalysisContext: requires 1 <= k <= n-1");
  }

  ElementSet rest() const { return ElementSet::full(ground).without(e); }
};

namespace detail {

// Depth-first sum over all subsets of xs. Each leaf sees the subset's
// realization probability, cardinality, and coordinate sum. Returning
// left + right up the recursion gives balanced pairwise accumulation over
// the 2^n terms.
template <class Term>
double realization_sum(const std::vector<double>& xs, std::size_t i, double prob, int count,
                       double xsum, Term& term) {
  if (i == xs.size()) return term(count, xsum, prob);
  const double v = xs[i];
  return realization_sum(xs, i + 1, prob * (1.0 - v), count, xsum, term) +
         realization_sum(xs, i + 1, prob * v, count + 1, xsum + v, term);
}

template <class Term>
double realization_sum(const std::vector<double>& xs, Term&& term) {
  return realization_sum(xs, 0, 1.0, 0, 0.0, term);
}

inline std::vector<double> coords_over(const FractionalPoint& x, const ElementSet& set) {
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(set.size()));
  for (int e : set.members()) xs.push_back(x[e]);
  return xs;
}

inline void require_enumerable(const ElementSet& set, const char* where) {
  if (set.size() > kMaxEnumerationElements)
    throw std::invalid_argument(std::string(where) + ": set too large to enumerate");
}

}  // namespace detail

/// P[the random restriction of x to S realizes exactly A]: the product of
/// x_i over A and (1-x_i) over S\A.
inline double p_weight(const FractionalPoint& x, const ElementSet& S, const ElementSet& A) {
  detail::require_same_ground(x.ground(), S.ground(), "p_weight");
  if (!A.subset_of(S)) throw std::invalid_argument("p_weight: A not a subset of S");
  double p = 1.0;
  for (int e : S.members()) p *= A.contains(e) ? x[e] : 1.0 - x[e];
  return p;
}

/// P[|R_S(x)| = k], by enumeration.
inline double q_level(const FractionalPoint& x, const ElementSet& S, int k) {
  detail::require_same_ground(x.ground(), S.ground(), "q_level");
  detail::require_enumerable(S, "q_level");
  if (k < 0 || k > S.size()) throw std::invalid_argument("q_level: k outside 0..|S|");
  const std::vector<double> xs = detail::coords_over(x, S);
  return detail::realization_sum(xs, [k](int count, double, double prob) {
    return count == k ? prob : 0.0;
  });
}

/// The drop polynomial: sum over k-subsets A of S of p_S(A) (k - x(A)).
/// Zero by convention for the degenerate levels k = 0 and k > |S|.
inline double h_value(const FractionalPoint& x, const ElementSet& S, int k) {
  detail::require_same_ground(x.ground(), S.ground(), "h_value");
  detail::require_enumerable(S, "h_value");
  if (k < 0 || k > S.size() + 1) throw std::invalid_argument("h_value: k outside 0..|S|+1");
  if (k == 0 || k > S.size()) return 0.0;
  const std::vector<double> xs = detail::coords_over(x, S);
  const double kk = static_cast<double>(k);
  return detail::realization_sum(xs, [k, kk](int count, double xsum, double prob) {
    return count == k ? prob * (kk - xsum) : 0.0;
  });
}

/// Same value through the level-probability identity
/// h = sum_{i<k} Q_S^i(x) (x(S) - i), one enumeration per level.
inline double h_value_recursive(const FractionalPoint& x, const ElementSet& S, int k) {
  detail::require_same_ground(x.ground(), S.ground(), "h_value_recursive");
  detail::require_enumerable(S, "h_value_recursive");
  if (k < 0 || k > S.size() + 1)
    throw std::invalid_argument("h_value_recursive: k outside 0..|S|+1");
  const double x_S = x.sum_over(S);
  double total = 0.0;
  for (int i = 0; i < std::min(k, S.size() + 1); ++i)
    total += q_level(x, S, i) * (x_S - static_cast<double>(i));
  return total;
}

namespace detail {

// Inner sum of the drop probability: over all k-subsets B of the realized
// set, the weight the scheme assigns to dropping e, i.e. q_{A+e}(B) summed
// over B avoiding e. Walks combinations of the realized coordinates.
inline double dropped_subset_mass(const std::vector<double>& realized, std::size_t start,
                                  int remaining, double x_B, double inv_rest, double inv_k,
                                  double x_Ae) {
  if (remaining == 0) return 1.0 + (x_Ae - x_B) * inv_rest - x_B * inv_k;
  double s = 0.0;
  for (std::size_t i = start; i + static_cast<std::size_t>(remaining) <= realized.size(); ++i)
    s += dropped_subset_mass(realized, i + 1, remaining - 1, x_B + realized[i], inv_rest, inv_k,
                             x_Ae);
  return s;
}

template <class Leaf>
double realization_sum_with_values(const std::vector<double>& xs, std::size_t i, double prob,
                                   double xsum, std::vector<double>& included, Leaf& leaf) {
  if (i == xs.size()) return leaf(included, xsum, prob);
  const double v = xs[i];
  const double without =
      realization_sum_with_values(xs, i + 1, prob * (1.0 - v), xsum, included, leaf);
  included.push_back(v);
  const double with = realization_sum_with_values(xs, i + 1, prob * v, xsum + v, included, leaf);
  included.pop_back();
  return without + with;
}

}  // namespace detail

/// Conditional drop probability of the distinguished element, as a
/// polynomial in x: sum over realized A in the rest of the ground set with
/// |A| >= k of p(A) times the mass of k-subsets excluding e. Well-defined
/// for any x in [0,1]^n, including x_e = 0.
inline double g_value(const AnalysisContext& ctx, const FractionalPoint& x) {
  detail::require_same_ground(ctx.ground, x.ground(), "g_value");
  if (ctx.ground.size() > kMaxDoubleSumElements)
    throw std::invalid_argument("g_value: ground set too large for the double enumeration");
  const int k = ctx.k;
  const double x_e = x[ctx.e];
  const ElementSet S = ctx.rest();
  const std::vector<double> xs = detail::coords_over(x, S);

  // Per-cardinality constants of q over the set A+e of size a+1.
  const int s = S.size();
  std::vector<double> inv_choose(static_cast<std::size_t>(s) + 1, 0.0);
  std::vector<double> inv_rest(static_cast<std::size_t>(s) + 1, 0.0);
  for (int a = k; a <= s; ++a) {
    inv_choose[static_cast<std::size_t>(a)] = 1.0 / detail::binomial_exact(a + 1, k);
    inv_rest[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(a + 1 - k);
  }
  const double inv_k = 1.0 / static_cast<double>(k);

  std::vector<double> included;
  included.reserve(static_cast<std::size_t>(s));
  const auto leaf = [&](const std::vector<double>& realized, double xsum, double prob) {
    const int a = static_cast<int>(realized.size());
    if (a < k) return 0.0;
    const double mass = detail::dropped_subset_mass(
        realized, 0, k, 0.0, inv_rest[static_cast<std::size_t>(a)], inv_k, xsum + x_e);
    return prob * inv_choose[static_cast<std::size_t>(a)] * mass;
  };
  return detail::realization_sum_with_values(xs, 0, 1.0, 0.0, included, leaf);
}

/// Monte Carlo counterpart of g_value: draw the realized set, condition on
/// the distinguished element being realized, run the scheme, count drops.
/// `trials` counts conditioned draws, so the binomial standard error is
/// sqrt(g(1-g)/trials).
inline double g_via_simulation_consistency(const AnalysisContext& ctx, const FractionalPoint& x,
                                           long trials, RandomStream& rng) {
  detail::require_same_ground(ctx.ground, x.ground(), "g_via_simulation_consistency");
  if (trials < 1) throw std::invalid_argument("g_via_simulation_consistency: trials must be >= 1");
  if (!(x[ctx.e] > 0.0))
    throw std::invalid_argument("g_via_simulation_consistency: conditioning on x_e = 0");
  const int n = ctx.ground.size();
  const UniformMatroid matroid(ctx.ground, ctx.k);
  long drops = 0;
  std::vector<int> realized;
  realized.reserve(static_cast<std::size_t>(n));
  for (long t = 0; t < trials; ++t) {
    do {
      realized.clear();
      for (int i = 0; i < n; ++i)
        if (rng.bernoulli(x[i])) realized.push_back(i);
    } while (!std::binary_search(realized.begin(), realized.end(), ctx.e));
    const SchemeOutcome out =
        select(x, ElementSet(ctx.ground, realized), matroid, rng);
    if (!out.selected.contains(ctx.e)) ++drops;
  }
  return static_cast<double>(drops) / static_cast<double>(trials);
}

/// Analytic gradient of the drop polynomial: the i-th partial is
/// Q_{S-i}^{k-1}(x) (k - x(S) - x_i), one entry per element of S in order.
inline std::vector<double> h_gradient(const FractionalPoint& x, const ElementSet& S, int k) {
  detail::require_same_ground(x.ground(), S.ground(), "h_gradient");
  if (k < 1 || k > S.size()) throw std::invalid_argument("h_gradient: requires 1 <= k <= |S|");
  const double x_S = x.sum_over(S);
  std::vector<double> grad;
  grad.reserve(static_cast<std::size_t>(S.size()));
  for (int i : S.members())
    grad.push_back(q_level(x, S.without(i), k - 1) *
                   (static_cast<double>(k) - x_S - x[i]));
  return grad;
}

/// Analytic gradient next to its central-finite-difference counterpart.
struct GradientReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_abs_diff = 0.0;
  double step = 0.0;
};

inline constexpr double kGradientStep = 1e-5;
inline constexpr double kHessianStep = 1e-3;

inline GradientReport gradient_report(const FractionalPoint& x, const ElementSet& S, int k,
                                      double step = kGradientStep) {
  GradientReport report;
  report.step = step;
  report.analytic = h_gradient(x, S, k);
  std::vector<double> coords = x.coords();
  for (int i : S.members()) {
    const auto idx = static_cast<std::size_t>(i);
    const double saved = coords[idx];
    coords[idx] = saved + step;
    const double up = h_value(FractionalPoint(coords), S, k);
    coords[idx] = saved - step;
    const double down = h_value(FractionalPoint(coords), S, k);
    coords[idx] = saved;
    report.numeric.push_back((up - down) / (2.0 * step));
  }
  for (std::size_t i = 0; i < report.analytic.size(); ++i)
    report.max_abs_diff = std::max(report.max_abs_diff,
                                   std::abs(report.analytic[i] - report.numeric[i]));
  return report;
}

struct SquareMatrix {
  int dim = 0;
  std::vector<double> data;

  explicit SquareMatrix(int dim_in)
      : dim(dim_in), data(static_cast<std::size_t>(dim_in) * static_cast<std::size_t>(dim_in)) {}
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)]; }
};

/// Hessian of the drop polynomial at the symmetric point (k/n,...,k/n):
/// -c (I + ones) of size (n-1)x(n-1) with
/// c = C(n-2,k-1) (k/n)^(k-1) ((n-k)/n)^(n-k-1).
inline double hessian_center_scale(int k, int n) {
  if (n < 2 || k < 1 || k > n - 1)
    throw std::invalid_argument("hessian_center_scale: requires n >= 2 and 1 <= k <= n-1");
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  return detail::binomial_exact(n - 2, k - 1) * std::pow(kk / nn, kk - 1.0) *
         std::pow((nn - kk) / nn, nn - kk - 1.0);
}

inline SquareMatrix hessian_at_center(int k, int n) {
  const double c = hessian_center_scale(k, n);
  SquareMatrix H(n - 1);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) H.at(i, j) = i == j ? -2.0 * c : -c;
  return H;
}

/// Second-order central-difference Hessian of the drop polynomial at the
/// symmetric point, the independent check on the closed form above.
inline SquareMatrix hessian_finite_difference(int k, int n, double step = kHessianStep) {
  if (n < 2 || k < 1 || k > n - 1)
    throw std::invalid_argument("hessian_finite_difference: requires n >= 2 and 1 <= k <= n-1");
  const GroundSet ground(n);
  const ElementSet S = ElementSet::full(ground).without(n - 1);
  const double center = static_cast<double>(k) / static_cast<double>(n);
  std::vector<double> coords(static_cast<std::size_t>(n), center);
  const auto h_at = [&](void) { return h_value(FractionalPoint(coords), S, k); };
  const double f0 = h_at();

  SquareMatrix H(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    coords[ii] = center + step;
    const double up = h_at();
    coords[ii] = center - step;
    const double down = h_at();
    coords[ii] = center;
    H.at(i, i) = (up - 2.0 * f0 + down) / (step * step);
    for (int j = i + 1; j < n - 1; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      double corners = 0.0;
      for (int si = -1; si <= 1; si += 2)
        for (int sj = -1; sj <= 1; sj += 2) {
          coords[ii] = center + si * step;
          coords[jj] = center + sj * step;
          corners += si * sj * h_at();
        }
      coords[ii] = center;
      coords[jj] = center;
      H.at(i, j) = H.at(j, i) = corners / (4.0 * step * step);
    }
  }
  return H;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Plenty for the (n-1)-dimensional Hessians handled here.
inline std::vector<double> symmetric_eigenvalues(SquareMatrix m) {
  const int d = m.dim;
  if (d == 1) return {m.at(0, 0)};
  double frob = 0.0;
  for (double v : m.data) frob += v * v;
  const double threshold = 1e-28 * frob + 1e-300;
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += m.at(i, j) * m.at(i, j);
    if (off < threshold) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        const double apq = m.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < d; ++i) {
          const double aip = m.at(i, p);
          const double aiq = m.at(i, q);
          m.at(i, p) = c * aip - s * aiq;
          m.at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < d; ++i) {
          const double api = m.at(p, i);
          const double aqi = m.at(q, i);
          m.at(p, i) = c * api - s * aqi;
          m.at(q, i) = s * api + c * aqi;
        }
      }
  }
  std::vector<double> eigs;
  eigs.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) eigs.push_back(m.at(i, i));
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

/// E[rank of the realized set] under a uniform matroid, by enumeration:
/// sum over A of p(A) min(|A|, k).
inline double expected_rank(const UniformMatroid& matroid, const FractionalPoint& x) {
  detail::require_same_ground(matroid.ground(), x.ground(), "expected_rank");
  if (matroid.ground().size() > kMaxEnumerationElements)
    throw std::invalid_argument("expected_rank: ground set too large to enumerate");
  const int k = matroid.rank_bound();
  const std::vector<double>& xs = x.coords();
  return detail::realization_sum(xs, [k](int count, double, double prob) {
    return prob * static_cast<double>(std::min(count, k));
  });
}

/// Upper bound on any scheme's balancedness, from the expected rank at the
/// symmetric point: E[r(R)] / k. Coincides with c(k,n).
inline double optimality_bound(int k, int n) {
  if (n < 2 || k < 1 || k > n - 1)
    throw std::invalid_argument("optimality_bound: requires n >= 2 and 1 <= k <= n-1");
  const GroundSet ground(n);
  const FractionalPoint x =
      FractionalPoint::constant(ground, static_cast<double>(k) / static_cast<double>(n));
  return expected_rank(UniformMatroid(ground, k), x) / static_cast<double>(k);
}

struct AlphaViolation {
  int k = 0;
  int n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  int inequality = 0;  // 1: alpha(k,n) > alpha(k-1,n-1); 2: alpha(k,n) > alpha(k,n-1)
};

struct AlphaMonotonicityReport {
  long pairs_checked = 0;
  std::vector<AlphaViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// Sweeps both strict growth inequalities of the hypercube maximum alpha
/// over all 2 <= n <= n_max, 1 <= k <= n-1.
inline AlphaMonotonicityReport alpha_inequality_check(int n_max) {
  if (n_max < 2) throw std::invalid_argument("alpha_inequality_check: n_max must be >= 2");
  AlphaMonotonicityReport report;
  for (int n = 2; n <= n_max; ++n)
    for (int k = 1; k <= n - 1; ++k) {
      const double lhs = alpha(k, n);
      const double diag = alpha(k - 1, n - 1);
      const double same_k = alpha(k, n - 1);
      ++report.pairs_checked;
      if (!(lhs > diag)) report.violations.push_back({k, n, lhs, diag, 1});
      if (!(lhs > same_k)) report.violations.push_back({k, n, lhs, same_k, 2});
    }
  return report;
}

struct GridSearchResult {
  std::vector<int> best_indices;
  std::vector<double> best_point;
  double best_value = 0.0;
  std::uint64_t points_scanned = 0;
};

/// Smallest multiple of n that is >= resolution, so the symmetric point
/// (k/n,...,k/n) lands exactly on the grid.
inline int snap_resolution(int resolution, int n) {
  if (resolution < 2) resolution = 2;
  return (resolution + n - 1) / n * n;
}

inline constexpr int kMaxGridDimension = 6;

namespace detail {

template <class F>
void grid_scan_slice(int dim, int resolution, long cap_scaled, int first_lo, int first_hi,
                     F& objective, GridSearchResult& out) {
  const double inv_res = 1.0 / static_cast<double>(resolution);
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> point(static_cast<std::size_t>(dim), 0.0);
  bool have_best = false;

  // Odometer over idx[1..dim) for each value of idx[0] in the slice,
  // pruning whole subtrees once the index sum exceeds the cap.
  const std::function<void(int, long)> walk = [&](int d, long sum) {
    if (sum > cap_scaled) return;
    if (d == dim) {
      for (int t = 0; t < dim; ++t)
        point[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t)] * inv_res;
      const double value = objective(point);
      ++out.points_scanned;
      if (!have_best || value > out.best_value) {
        have_best = true;
        out.best_value = value;
        out.best_indices = idx;
        out.best_point = point;
      }
      return;
    }
    for (int v = 0; v <= resolution; ++v) {
      idx[static_cast<std::size_t>(d)] = v;
      walk(d + 1, sum + v);
    }
  };
  for (int v0 = first_lo; v0 < first_hi; ++v0) {
    idx[0] = v0;
    walk(1, v0);
  }
}

}  // namespace detail

/// Exhaustive maximization of `objective` over the regular grid with
/// `resolution` intervals per axis on [0,1]^dim, optionally filtered to the
/// simplex sum(x) <= sum_cap. Returns the lexicographically first argmax.
/// Slices of the first axis may run on several threads; the merge order is
/// fixed, so the result does not depend on the thread count.
template <class F>
GridSearchResult grid_maximize(int dim, int resolution, std::optional<double> sum_cap,
                               F&& objective, int threads = 1) {
  if (dim < 1 || dim > kMaxGridDimension)
    throw std::invalid_argument("grid_maximize: dimension too large for a dense grid");
  if (resolution < 2) throw std::invalid_argument("grid_maximize: resolution must be >= 2");
  const long cap_scaled =
      sum_cap ? static_cast<long>(std::floor(*sum_cap * resolution + 1e-9))
              : static_cast<long>(dim) * resolution;

  threads = std::max(1, std::min(threads, resolution + 1));
  std::vector<GridSearchResult> partial(static_cast<std::size_t>(threads));
  {
    std::vector<std::thread> pool;
    const int total = resolution + 1;
    for (int t = 0; t < threads; ++t) {
      const int lo = total * t / threads;
      const int hi = total * (t + 1) / threads;
      pool.emplace_back([&, t, lo, hi] {
        detail::grid_scan_slice(dim, resolution, cap_scaled, lo, hi, objective,
                                partial[static_cast<std::size_t>(t)]);
      });
    }
    for (auto& th : pool) th.join();
  }

  GridSearchResult best;
  bool have_best = false;
  for (const GridSearchResult& p : partial) {
    best.points_scanned += p.points_scanned;
    if (p.best_indices.empty()) continue;
    if (!have_best || p.best_value > best.best_value) {
      have_best = true;
      best.best_value = p.best_value;
      best.best_indices = p.best_indices;
      best.best_point = p.best_point;
    }
  }
  if (!have_best) throw std::invalid_argument("grid_maximize: empty grid after filtering");
  return best;
}

/// Reusable evaluator for the conditional drop probability on a fixed
/// (n, k, e): the subset/k-subset pair list is laid out once, so repeated
/// evaluations (grid scans) only rebuild the realization tables. Same double
/// enumeration as g_value, bounded to grids' dimensions.
class GValueEvaluator {
 public:
  GValueEvaluator(int n, int k, int e) : n_(n), k_(k), e_(e) {
    if (n > kMaxGridDimension + 6)
      throw std::invalid_argument("GValueEvaluator: ground set too large");
    if (k < 1 || k > n - 1) throw std::invalid_argument("GValueEvaluator: requires 1 <= k <= n-1");
    if (e < 0 || e >= n) throw std::invalid_argument("GValueEvaluator: e outside ground set");
    const int s = n - 1;
    inv_k_ = 1.0 / static_cast<double>(k);
    for (std::uint32_t a_mask = 0; a_mask < (1u << s); ++a_mask) {
      const int a = std::popcount(a_mask);
      if (a < k) continue;
      const double inv_choose = 1.0 / detail::binomial_exact(a + 1, k);
      const double inv_rest = 1.0 / static_cast<double>(a + 1 - k);
      // All k-subsets of a_mask, as submasks.
      for (std::uint32_t b_mask = a_mask; b_mask > 0; b_mask = (b_mask - 1) & a_mask) {
        if (std::popcount(b_mask) == k)
          pairs_.push_back({a_mask, b_mask, inv_choose, inv_rest});
      }
    }
  }

  int dimension() const { return n_; }

  /// x indexed over the full ground set, e's coordinate included.
  double value(const std::vector<double>& x) const {
    std::array<double, std::size_t{1} << (kMaxGridDimension + 5)> prob;
    std::array<double, std::size_t{1} << (kMaxGridDimension + 5)> xsum;
    prob[0] = 1.0;
    xsum[0] = 0.0;
    int bit = 0;
    for (int i = 0; i < n_; ++i) {
      if (i == e_) continue;
      const double v = x[static_cast<std::size_t>(i)];
      const std::uint32_t width = 1u << bit;
      for (std::uint32_t m = 0; m < width; ++m) {
        prob[width + m] = prob[m] * v;
        xsum[width + m] = xsum[m] + v;
        prob[m] *= 1.0 - v;
      }
      ++bit;
    }
    const double x_e = x[static_cast<std::size_t>(e_)];
    double total = 0.0;
    for (const Pair& p : pairs_) {
      const double x_B = xsum[p.b_mask];
      total += prob[p.a_mask] * p.inv_choose *
               (1.0 + (xsum[p.a_mask] - x_B + x_e) * p.inv_rest - x_B * inv_k_);
    }
    return total;
  }

 private:
  struct Pair {
    std::uint32_t a_mask;
    std::uint32_t b_mask;
    double inv_choose;
    double inv_rest;
  };
  int n_;
  int k_;
  int e_;
  double inv_k_;
  std::vector<Pair> pairs_;
};

}  // namespace crround
