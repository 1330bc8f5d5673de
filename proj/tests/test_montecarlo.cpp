#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "crround/montecarlo.hpp"

using namespace crround;

TEST_CASE("independent rounding of x") {
  const GroundSet g(6);
  RandomStream rng(12);
  REQUIRE(sample_R(FractionalPoint::constant(g, 0.0), rng).is_empty());
  REQUIRE(sample_R(FractionalPoint::constant(g, 1.0), rng) == ElementSet::full(g));

  const long trials = 200000;
  std::vector<long> hits(6, 0);
  const FractionalPoint half = FractionalPoint::constant(g, 0.5);
  for (long t = 0; t < trials; ++t) {
    const ElementSet realized = sample_R(half, rng);
    for (int i : realized.members()) ++hits[static_cast<std::size_t>(i)];
  }
  const double se = std::sqrt(0.25 / trials);
  for (long h : hits)
    REQUIRE(std::abs(static_cast<double>(h) / trials - 0.5) <= 4.0 * se);
}

TEST_CASE("balancedness estimates at the tight point") {
  const int n = 5, k = 2;
  const GroundSet g(n);
  const UniformMatroid matroid(g, k);
  const FractionalPoint sym = FractionalPoint::constant(g, double(k) / n);

  TrialConfig cfg;
  cfg.trials = 200000;
  cfg.seed = 71;
  const std::vector<BalancednessEstimate> estimates = estimate_balancedness(matroid, sym, cfg);
  REQUIRE(estimates.size() == 5);
  const double c = balancedness_c(k, n);
  for (const BalancednessEstimate& est : estimates) {
    REQUIRE(est.has_data());
    REQUIRE(est.ci_low <= est.conditional_keep);
    REQUIRE(est.conditional_keep <= est.ci_high);
    REQUIRE(est.std_error ==
            Catch::Approx(std::sqrt(est.conditional_keep * (1.0 - est.conditional_keep) /
                                    static_cast<double>(est.trials_conditioned)))
                .margin(1e-15));
    // The scheme is tight here: the z=3 interval should cover c(k,n).
    REQUIRE(est.ci_low <= c);
    REQUIRE(est.ci_high >= c);
  }
}

TEST_CASE("no truncation means certain keeps") {
  const GroundSet g(5);
  const UniformMatroid matroid(g, 2);
  const FractionalPoint x({0.4, 0.3, 0.0, 0.0, 0.0});
  TrialConfig cfg;
  cfg.trials = 20000;
  cfg.seed = 5;
  const std::vector<BalancednessEstimate> estimates = estimate_balancedness(matroid, x, cfg);
  REQUIRE(estimates.size() == 2);  // zero-coordinate elements are skipped
  for (const BalancednessEstimate& est : estimates) {
    REQUIRE(est.has_data());
    REQUIRE(est.conditional_keep == 1.0);
  }
}

TEST_CASE("elements that never realize are flagged, not fabricated") {
  const GroundSet g(3);
  const UniformMatroid matroid(g, 1);
  const FractionalPoint x({0.5, 1e-12, 0.0});
  TrialConfig cfg;
  cfg.trials = 1000;
  cfg.seed = 13;
  const auto estimates = estimate_balancedness(matroid, x, cfg);
  REQUIRE(estimates.size() == 2);  // the zero coordinate is skipped outright
  REQUIRE(estimates[0].has_data());
  REQUIRE_FALSE(estimates[1].has_data());
  REQUIRE(std::isnan(estimates[1].conditional_keep));
  REQUIRE(estimates[1].trials_conditioned == 0);
}

TEST_CASE("partition estimates respect the worst block") {
  const GroundSet g(5);
  const PartitionMatroid m(g, {ElementSet(g, {0, 1}), ElementSet(g, {2, 3, 4})}, {1, 1});
  const FractionalPoint x({0.5, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3});

  TrialConfig cfg;
  cfg.trials = 200000;
  cfg.seed = 2025;
  const double floor = partition_balancedness(m);
  for (const BalancednessEstimate& est : estimate_balancedness(m, x, cfg))
    REQUIRE(est.conditional_keep + 4.0 * est.std_error >= floor);
}

TEST_CASE("estimates are reproducible and shard-consistent") {
  const GroundSet g(4);
  const UniformMatroid matroid(g, 2);
  const FractionalPoint x = FractionalPoint::constant(g, 0.5);

  TrialConfig cfg;
  cfg.trials = 30001;  // odd on purpose: uneven shard shares
  cfg.seed = 99;
  cfg.parallel_shards = 3;
  const auto a = estimate_balancedness(matroid, x, cfg);
  const auto b = estimate_balancedness(matroid, x, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].conditional_keep == b[i].conditional_keep);
    REQUIRE(a[i].trials_conditioned == b[i].trials_conditioned);
    REQUIRE(a[i].std_error == b[i].std_error);
  }

  // Manually running the derived shard streams in sequence gives the same
  // counts as the threaded run.
  std::vector<long> realized(4, 0), kept(4, 0);
  for (int s = 0; s < 3; ++s) {
    RandomStream rng = RandomStream::derive(cfg.seed, static_cast<std::uint64_t>(s));
    const long share = cfg.trials / 3 + (s < cfg.trials % 3 ? 1 : 0);
    for (long t = 0; t < share; ++t) {
      const ElementSet R = sample_R(x, rng);
      for (int i : R.members()) ++realized[static_cast<std::size_t>(i)];
      const SchemeOutcome out = select(x, R, matroid, rng);
      for (int i : out.selected.members()) ++kept[static_cast<std::size_t>(i)];
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].trials_conditioned == realized[i]);
    REQUIRE(a[i].conditional_keep ==
            static_cast<double>(kept[i]) / static_cast<double>(realized[i]));
  }
}

TEST_CASE("marginal frequencies from repeated runs") {
  const GroundSet g(6);
  const FractionalPoint x({0.3, 0.2, 0.4, 0.1, 0.5, 0.4});
  const ElementSet A(g, {0, 1, 2, 4, 5});
  const int k = 2;

  TrialConfig cfg;
  cfg.trials = 150000;
  cfg.seed = 31415;
  const auto freqs = estimate_marginal(x, A, k, cfg);
  REQUIRE(freqs.size() == 5);

  double total = 0.0;
  for (const auto& [e, freq] : freqs) {
    total += freq;
    const double expected = marginal(x, A, e, k);
    const double se = std::sqrt(expected * (1.0 - expected) / cfg.trials);
    REQUIRE(std::abs(freq - expected) <= 4.0 * se);
  }
  // Exactly k elements survive each trial.
  REQUIRE(total == Catch::Approx(static_cast<double>(k)).margin(1e-9));

  REQUIRE_THROWS_AS(estimate_marginal(x, ElementSet(g, {0, 1}), 2, cfg), std::invalid_argument);
}

TEST_CASE("sampler goodness of fit") {
  TrialConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 8080;

  const GroundSet g4(4);
  const ChiSquareFit uniform_fit =
      chi_square_fit(FractionalPoint::constant(g4, 0.5), ElementSet::full(g4), 2, cfg);
  REQUIRE(uniform_fit.dof == 5);
  REQUIRE(uniform_fit.pass);

  const GroundSet g6(6);
  const FractionalPoint skewed({0.9, 0.1, 0.55, 0.25, 0.7, 0.5});
  const ChiSquareFit skew_fit = chi_square_fit(skewed, ElementSet::full(g6), 3, cfg);
  REQUIRE(skew_fit.dof == 19);
  REQUIRE(skew_fit.pass);

  // Realized set strictly inside the ground set.
  const ChiSquareFit subset_fit =
      chi_square_fit(FractionalPoint::constant(g6, 0.3), ElementSet(g6, {0, 2, 3, 5}), 2, cfg);
  REQUIRE(subset_fit.dof == 5);
  REQUIRE(subset_fit.pass);

  // A zero-probability subset is never drawn: the lone positive cell takes
  // every draw and the statistic degenerates to zero.
  const GroundSet g2(2);
  const ChiSquareFit extreme =
      chi_square_fit(FractionalPoint({1.0, 0.0}), ElementSet::full(g2), 1, cfg);
  REQUIRE(extreme.cells == 1);
  REQUIRE(extreme.dof == 0);
  REQUIRE(extreme.statistic == 0.0);
  REQUIRE(extreme.pass);

  cfg.trials = 10;
  REQUIRE_THROWS_AS(chi_square_fit(skewed, ElementSet::full(g6), 3, cfg), std::invalid_argument);
}

TEST_CASE("critical values track the exact chi-square quantiles") {
  // Exact 0.999 quantiles: 27.877 (dof 9), 43.820 (dof 19), 55.476 (dof 27).
  REQUIRE(chi_square_critical(9) == Catch::Approx(27.877).margin(0.5));
  REQUIRE(chi_square_critical(19) == Catch::Approx(43.820).margin(0.5));
  REQUIRE(chi_square_critical(27) == Catch::Approx(55.476).margin(0.5));
}

TEST_CASE("monotonicity probe finds no violations in the polytope") {
  RandomStream rng(70707);
  for (int round = 0; round < 20; ++round) {
    const int n = 4 + static_cast<int>(rng.next_below(6));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const FractionalPoint x = random_point_in_polytope(GroundSet(n), k, rng);
    const MonotonicityReport report = monotonicity_probe(x, k, 2000, rng);
    REQUIRE(report.chains == 2000);
    REQUIRE(report.violations == 0);
    REQUIRE(report.min_difference >= -1e-12);
  }
}

TEST_CASE("random polytope points are feasible") {
  RandomStream rng(2222);
  const GroundSet g(7);
  const UniformMatroid matroid(g, 3);
  for (int i = 0; i < 200; ++i) {
    REQUIRE(in_polytope(matroid, random_point_in_polytope(g, 3, rng)));
    const FractionalPoint face = random_point_on_face(g, 3, rng);
    REQUIRE(face.sum() == Catch::Approx(3.0).margin(1e-9));
    REQUIRE(in_polytope(matroid, face));
  }
}
