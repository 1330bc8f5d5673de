#pragma once

#include <cmath>
#include <stdexcept>

#include "crround/core.hpp"

namespace crround {

namespace detail {

/// log C(n,k). For small min(k, n-k) the term-by-term sum of logs avoids the
/// cancellation between huge lgamma values (lgamma(10^6) carries absolute
/// error far above the 1e-12 scale the limit checks need); lgamma covers the
/// central cases where no such cancellation bites.
inline double log_binomial(int n, int k) {
  const int m = std::min(k, n - k);
  if (m <= 40) {
    double sum = -std::lgamma(static_cast<double>(m) + 1.0);
    for (int i = 0; i < m; ++i) sum += std::log(static_cast<double>(n - i));
    return sum;
  }
  return std::lgamma(static_cast<double>(n) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// C(n,k)(1-k/n)^(n+1-k)(k/n)^k, the probability mass a realized element is
/// dropped at the worst-case point. Requires 1 <= k <= n-1. Direct
/// evaluation up to n = 50 (C(50,25) is still exact in a double), log-space
/// beyond that since the binomial coefficient overflows long before the
/// powers underflow.
inline double drop_mass(int k, int n) {
  const double kk = static_cast<double>(k);
  const double nn = static_cast<double>(n);
  if (n <= 50) {
    double binom = 1.0;
    for (int i = 1; i <= k; ++i)
      binom *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return binom * std::pow(1.0 - kk / nn, nn + 1.0 - kk) * std::pow(kk / nn, kk);
  }
  const double log_mass = log_binomial(n, k) +
                          (nn + 1.0 - kk) * std::log1p(-kk / nn) +
                          kk * std::log(kk / nn);
  return std::exp(log_mass);
}

}  // namespace detail

/// Balancedness constant c(k,n) of the scheme on the rank-k uniform matroid
/// over n elements: 1 - C(n,k)(1-k/n)^(n+1-k)(k/n)^k. For k >= n the
/// cardinality constraint never binds and the value is 1.
inline double balancedness_c(int k, int n) {
  if (k < 1 || n < 1) throw std::domain_error("balancedness_c: requires k >= 1 and n >= 1");
  if (k >= n) return 1.0;
  return 1.0 - detail::drop_mass(k, n);
}

/// Limit of c(k,n) as n grows with k fixed: 1 - e^-k k^k / k!.
inline double balancedness_limit(int k) {
  if (k < 1) throw std::domain_error("balancedness_limit: requires k >= 1");
  const double kk = static_cast<double>(k);
  return 1.0 - std::exp(-kk + kk * std::log(kk) - std::lgamma(kk + 1.0));
}

/// alpha(k,n) = k C(n,k)(1-k/n)^(n+1-k)(k/n)^k, the maximum of the drop
/// polynomial h over the unit hypercube. Zero at both ends k = 0 and k = n.
inline double alpha(int k, int n) {
  if (n < 1 || k < 0 || k > n) throw std::domain_error("alpha: requires 0 <= k <= n, n >= 1");
  if (k == 0 || k == n) return 0.0;
  return static_cast<double>(k) * detail::drop_mass(k, n);
}

/// Guaranteed balancedness of the composed per-block scheme: the minimum of
/// c(d_i, |D_i|) over blocks. A block whose capacity is 0 or >= |D_i| never
/// constrains any realized element and contributes 1.
inline double partition_balancedness(const PartitionMatroid& m) {
  double worst = 1.0;
  for (int b = 0; b < m.block_count(); ++b) {
    const int d = m.capacity(b);
    const int size = m.block(b).size();
    if (d >= 1 && d < size) worst = std::min(worst, balancedness_c(d, size));
  }
  return worst;
}

}  // namespace crround
