#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "crround/analysis.hpp"
#include "crround/montecarlo.hpp"

using namespace crround;

namespace {

FractionalPoint random_point(int n, RandomStream& rng) {
  std::vector<double> coords(static_cast<std::size_t>(n));
  for (double& v : coords) v = rng.next_unit();
  return FractionalPoint(std::move(coords));
}

FractionalPoint random_interior_point(int n, RandomStream& rng) {
  std::vector<double> coords(static_cast<std::size_t>(n));
  for (double& v : coords) v = 0.05 + 0.9 * rng.next_unit();
  return FractionalPoint(std::move(coords));
}

}  // namespace

TEST_CASE("realization weight p") {
  const GroundSet g4(4);
  const ElementSet S(g4, {0, 1, 2});
  const FractionalPoint half = FractionalPoint::constant(g4, 0.5);
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    REQUIRE(p_weight(half, S, ElementSet::from_mask(g4, mask)) ==
            Catch::Approx(0.125).margin(1e-15));

  REQUIRE(p_weight(FractionalPoint::constant(g4, 1.0), S, S) == 1.0);
  REQUIRE_THROWS_AS(p_weight(half, S, ElementSet(g4, {3})), std::invalid_argument);

  RandomStream rng(3);
  const FractionalPoint x = random_point(4, rng);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    total += p_weight(x, S, ElementSet::from_mask(g4, mask));
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("level probabilities") {
  const GroundSet g2(2);
  REQUIRE(q_level(FractionalPoint::constant(g2, 0.5), ElementSet::full(g2), 1) ==
          Catch::Approx(0.5).margin(1e-15));

  const GroundSet g3(3);
  REQUIRE(q_level(FractionalPoint::constant(g3, 1.0), ElementSet::full(g3), 3) == 1.0);
  REQUIRE(q_level(FractionalPoint::constant(g3, 1.0 / 3.0), ElementSet::full(g3), 0) ==
          Catch::Approx(8.0 / 27.0).margin(1e-15));
  REQUIRE_THROWS_AS(q_level(FractionalPoint::constant(g3, 0.5), ElementSet::full(g3), 4),
                    std::invalid_argument);

  RandomStream rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(9));
    const GroundSet g(n);
    const FractionalPoint x = random_point(n, rng);
    double total = 0.0;
    for (int k = 0; k <= n; ++k) total += q_level(x, ElementSet::full(g), k);
    REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("drop polynomial h: base case, symmetric value, duality") {
  const GroundSet g2(2);
  const ElementSet single(g2, {0});
  for (double t : {0.1, 0.5, 0.9}) {
    const FractionalPoint x({t, 0.0});
    REQUIRE(h_value(x, single, 1) == Catch::Approx(t * (1.0 - t)).margin(1e-15));
  }

  // At the symmetric point over |S| = n-1 coordinates, h attains alpha(k,n).
  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 5}, {3, 7}}) {
    const GroundSet g(n);
    const ElementSet S = ElementSet::full(g).without(n - 1);
    const FractionalPoint x = FractionalPoint::constant(g, double(k) / n);
    REQUIRE(h_value(x, S, k) == Catch::Approx(alpha(k, n)).epsilon(1e-12));
  }

  // Degenerate levels vanish identically.
  RandomStream rng(8);
  const GroundSet g5(5);
  const ElementSet S = ElementSet(g5, {0, 1, 2, 3});
  const FractionalPoint x = random_point(5, rng);
  REQUIRE(h_value(x, S, 0) == 0.0);
  REQUIRE(h_value(x, S, 5) == 0.0);

  // Duality: h_S^k(x) = h_S^(n-k)(1-x) with n = |S|+1.
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(7));
    const GroundSet g(n);
    const ElementSet full_S = ElementSet::full(g).without(n - 1);
    const FractionalPoint y = random_point(n, rng);
    std::vector<double> flipped(y.coords());
    for (double& v : flipped) v = 1.0 - v;
    const FractionalPoint y_flip(flipped);
    for (int k = 0; k <= n; ++k)
      REQUIRE(h_value(y, full_S, k) ==
              Catch::Approx(h_value(y_flip, full_S, n - k)).margin(1e-12));
  }
}

TEST_CASE("level-sum route agrees with direct enumeration of h") {
  RandomStream rng(99);
  const GroundSet g2(2);
  const FractionalPoint x0({0.3, 0.8});
  const ElementSet s0(g2, {0, 1});
  REQUIRE(h_value_recursive(x0, s0, 1) ==
          Catch::Approx(q_level(x0, s0, 0) * x0.sum_over(s0)).margin(1e-15));

  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(9));
    const GroundSet g(n);
    const int s_size = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    std::vector<int> members;
    for (int i = 0; i < s_size; ++i) members.push_back(i);
    const ElementSet S(g, std::move(members));
    const FractionalPoint x = random_point(n, rng);
    const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(s_size + 2)));
    REQUIRE(h_value_recursive(x, S, k) == Catch::Approx(h_value(x, S, k)).margin(1e-10));
  }
}

TEST_CASE("boundary reductions of h") {
  RandomStream rng(1984);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(5));
    const GroundSet g(n);
    const ElementSet S = ElementSet::full(g).without(n - 1);
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 2)));
    const int pinned = S.members()[rng.next_below(static_cast<std::uint64_t>(S.size()))];

    std::vector<double> coords = random_point(n, rng).coords();
    coords[static_cast<std::size_t>(pinned)] = 0.0;
    const FractionalPoint at_zero(coords);
    REQUIRE(h_value(at_zero, S, k) ==
            Catch::Approx(h_value(at_zero, S.without(pinned), k)).margin(1e-12));

    coords[static_cast<std::size_t>(pinned)] = 1.0;
    const FractionalPoint at_one(coords);
    REQUIRE(h_value(at_one, S, k) ==
            Catch::Approx(h_value(at_one, S.without(pinned), k - 1)).margin(1e-12));
  }
}

TEST_CASE("conditional drop probability: symmetric point and equality case") {
  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{1, 3}, {2, 4}, {2, 5}, {3, 6}}) {
    const AnalysisContext ctx(GroundSet(n), k, 0);
    const FractionalPoint sym = FractionalPoint::constant(GroundSet(n), double(k) / n);
    REQUIRE(g_value(ctx, sym) ==
            Catch::Approx(1.0 - balancedness_c(k, n)).margin(1e-12));
  }

  // Only e realizable: nothing else can be realized, so e is never dropped.
  const AnalysisContext lone(GroundSet(4), 2, 1);
  REQUIRE(g_value(lone, FractionalPoint({0.0, 0.8, 0.0, 0.0})) == 0.0);

  // With x_e = k - x(S) the bound h/k is attained exactly.
  RandomStream rng(555);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(4));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const AnalysisContext ctx(GroundSet(n), k, n - 1);
    const ElementSet S = ctx.rest();

    std::vector<double> coords(static_cast<std::size_t>(n), 0.0);
    double x_S;
    do {
      x_S = 0.0;
      for (int i : S.members()) {
        coords[static_cast<std::size_t>(i)] = rng.next_unit();
        x_S += coords[static_cast<std::size_t>(i)];
      }
    } while (x_S < k - 1 || x_S > k);
    coords[static_cast<std::size_t>(n - 1)] = double(k) - x_S;
    const FractionalPoint x(coords);

    REQUIRE(g_value(ctx, x) == Catch::Approx(h_value(x, S, k) / k).margin(1e-9));
  }

  // The choice of the distinguished element is immaterial up to relabeling.
  const FractionalPoint base({0.1, 0.4, 0.3, 0.2, 0.5});
  const AnalysisContext at0(GroundSet(5), 2, 0);
  const AnalysisContext at3(GroundSet(5), 2, 3);
  const FractionalPoint swapped({0.2, 0.4, 0.3, 0.1, 0.5});  // coords 0 and 3 exchanged
  REQUIRE(g_value(at0, base) == Catch::Approx(g_value(at3, swapped)).margin(1e-13));

  REQUIRE_THROWS_AS(g_value(AnalysisContext(GroundSet(22), 2, 0),
                            FractionalPoint::constant(GroundSet(22), 0.05)),
                    std::invalid_argument);
}

TEST_CASE("simulation route tracks the enumerated drop probability") {
  RandomStream rng(2024);
  const struct {
    int n, k;
  } cases[] = {{4, 1}, {5, 2}, {6, 3}};
  for (const auto& c : cases) {
    const AnalysisContext ctx(GroundSet(c.n), c.k, 0);
    FractionalPoint x = random_point(c.n, rng);
    std::vector<double> coords = x.coords();
    double sum = 0.0;
    for (double v : coords) sum += v;
    if (sum > c.k)
      for (double& v : coords) v *= c.k / sum;
    coords[0] = std::max(coords[0], 0.25);  // keep the conditioning cheap
    sum = 0.0;
    for (double v : coords) sum += v;
    if (sum > c.k)
      for (double& v : coords) v *= c.k / sum;
    x = FractionalPoint(coords);

    const double exact = g_value(ctx, x);
    const long trials = 40000;
    const double estimate = g_via_simulation_consistency(ctx, x, trials, rng);
    const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / trials);
    REQUIRE(std::abs(estimate - exact) <= 4.0 * se);
  }

  // Deterministic realizations below the rank bound never drop.
  const AnalysisContext ctx(GroundSet(4), 2, 0);
  REQUIRE(g_via_simulation_consistency(ctx, FractionalPoint({1.0, 1.0, 0.0, 0.0}), 1000, rng) ==
          0.0);
  REQUIRE_THROWS_AS(
      g_via_simulation_consistency(ctx, FractionalPoint({0.0, 1.0, 0.0, 0.0}), 10, rng),
      std::invalid_argument);
}

TEST_CASE("analytic gradient of h") {
  // One variable: d/dx of x(1-x) is 1-2x.
  const GroundSet g2(2);
  const ElementSet single(g2, {0});
  for (double t : {0.2, 0.5, 0.8}) {
    const std::vector<double> grad = h_gradient(FractionalPoint({t, 0.3}), single, 1);
    REQUIRE(grad.size() == 1);
    REQUIRE(grad[0] == Catch::Approx(1.0 - 2.0 * t).margin(1e-14));
  }

  // Stationary at the symmetric point.
  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{1, 4}, {2, 5}, {3, 6}}) {
    const GroundSet g(n);
    const ElementSet S = ElementSet::full(g).without(n - 1);
    const std::vector<double> grad =
        h_gradient(FractionalPoint::constant(g, double(k) / n), S, k);
    for (double v : grad) REQUIRE(std::abs(v) <= 1e-14);
  }

  RandomStream rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(8));
    const GroundSet g(n);
    const ElementSet S = ElementSet::full(g).without(n - 1);
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const GradientReport report = gradient_report(random_interior_point(n, rng), S, k);
    REQUIRE(report.max_abs_diff <= 1e-6);
  }
}

TEST_CASE("hessian at the symmetric point") {
  const SquareMatrix tiny = hessian_at_center(1, 2);
  REQUIRE(tiny.dim == 1);
  REQUIRE(tiny.at(0, 0) == Catch::Approx(-2.0).margin(1e-15));

  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{1, 4}, {2, 5}, {3, 6}, {2, 8}}) {
    const double c = hessian_center_scale(k, n);
    const SquareMatrix H = hessian_at_center(k, n);
    REQUIRE(H.dim == n - 1);

    // Spectrum of -H/c is {1 with multiplicity n-2, n with multiplicity 1};
    // everything is negative, so the point is a strict local maximum.
    const std::vector<double> eigs = symmetric_eigenvalues(H);
    for (int i = 0; i < n - 2; ++i)
      REQUIRE(eigs[static_cast<std::size_t>(i) + 1] == Catch::Approx(-c).epsilon(1e-12));
    REQUIRE(eigs[0] == Catch::Approx(-c * n).epsilon(1e-12));
    for (double v : eigs) REQUIRE(v < 0.0);

    const SquareMatrix fd = hessian_finite_difference(k, n);
    for (int i = 0; i < H.dim; ++i)
      for (int j = 0; j < H.dim; ++j)
        REQUIRE(fd.at(i, j) == Catch::Approx(H.at(i, j)).margin(1e-4));
  }

  REQUIRE_THROWS_AS(hessian_at_center(3, 3), std::invalid_argument);
}

TEST_CASE("expected rank identities") {
  for (int n = 2; n <= 10; ++n)
    for (int k = 1; k <= n - 1; ++k) {
      const GroundSet g(n);
      const FractionalPoint sym = FractionalPoint::constant(g, double(k) / n);
      REQUIRE(expected_rank(UniformMatroid(g, k), sym) ==
              Catch::Approx(k * balancedness_c(k, n)).margin(1e-12));
    }

  const GroundSet g6(6);
  REQUIRE(expected_rank(UniformMatroid(g6, 2), FractionalPoint::constant(g6, 1.0)) ==
          Catch::Approx(2.0).margin(1e-12));
  REQUIRE(expected_rank(UniformMatroid(g6, 2), FractionalPoint::constant(g6, 0.0)) == 0.0);

  // On the tight face x(N) = k the shortfall is exactly the drop polynomial.
  RandomStream rng(4242);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(8));
    const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const GroundSet g(n);
    const FractionalPoint x = random_point_on_face(g, k, rng);
    const double er = expected_rank(UniformMatroid(g, k), x);
    const double hv = h_value(x, ElementSet::full(g), k);
    REQUIRE(er + hv == Catch::Approx(static_cast<double>(k)).margin(1e-10));
  }
}

TEST_CASE("optimality bound equals the balancedness") {
  REQUIRE(optimality_bound(1, 2) == Catch::Approx(0.75).margin(1e-12));
  for (int n = 2; n <= 10; ++n)
    for (int k = 1; k <= n - 1; ++k)
      REQUIRE(optimality_bound(k, n) == Catch::Approx(balancedness_c(k, n)).margin(1e-9));
  for (int n : {3, 7, 10})
    REQUIRE(optimality_bound(1, n) ==
            Catch::Approx(1.0 - std::pow(1.0 - 1.0 / n, n)).margin(1e-12));
}

TEST_CASE("alpha growth inequalities sweep") {
  REQUIRE(alpha(1, 3) > alpha(1, 2));
  const AlphaMonotonicityReport report = alpha_inequality_check(60);
  REQUIRE(report.passed());
  REQUIRE(report.pairs_checked == 59 * 60 / 2);
}

TEST_CASE("grid search locates the hypercube maximum of h") {
  const GroundSet g2(2);
  const ElementSet S = ElementSet::full(g2);

  const auto h_objective = [&](int k) {
    return [&, k](const std::vector<double>& point) {
      return h_value(FractionalPoint(point), S, k);
    };
  };

  const GridSearchResult max1 = grid_maximize(2, 300, std::nullopt, h_objective(1));
  REQUIRE(max1.best_indices == std::vector<int>{100, 100});
  REQUIRE(max1.best_value == Catch::Approx(alpha(1, 3)).epsilon(1e-12));

  const GridSearchResult max2 = grid_maximize(2, 300, std::nullopt, h_objective(2));
  REQUIRE(max2.best_indices == std::vector<int>{200, 200});
  REQUIRE(max2.best_value == Catch::Approx(alpha(2, 3)).epsilon(1e-12));

  // Thread count must not change the result.
  const GridSearchResult threaded = grid_maximize(2, 300, std::nullopt, h_objective(1), 3);
  REQUIRE(threaded.best_indices == max1.best_indices);
  REQUIRE(threaded.best_value == max1.best_value);
  REQUIRE(threaded.points_scanned == max1.points_scanned);

  REQUIRE(snap_resolution(60, 7) == 63);
  REQUIRE(snap_resolution(60, 4) == 60);
  REQUIRE_THROWS_AS(grid_maximize(7, 10, std::nullopt, h_objective(1)), std::invalid_argument);
}

TEST_CASE("grid search over the polytope finds the symmetric drop maximum") {
  const int n = 4, k = 2;
  const AnalysisContext ctx(GroundSet(n), k, 0);
  const auto objective = [&](const std::vector<double>& point) {
    return g_value(ctx, FractionalPoint(point));
  };
  const int res = snap_resolution(32, n);
  const GridSearchResult best = grid_maximize(n, res, double(k), objective, 2);
  REQUIRE(best.best_indices == std::vector<int>(4, res * k / n));
  REQUIRE(best.best_value == Catch::Approx(1.0 - balancedness_c(k, n)).margin(1e-9));
}

TEST_CASE("packed evaluator matches the recursive drop enumeration") {
  RandomStream rng(31337);
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{{4, 2}, {5, 2}, {5, 3}, {6, 1}}) {
    const GValueEvaluator eval(n, k, 0);
    const AnalysisContext ctx(GroundSet(n), k, 0);
    for (int trial = 0; trial < 50; ++trial) {
      const FractionalPoint x = random_point(n, rng);
      REQUIRE(eval.value(x.coords()) == Catch::Approx(g_value(ctx, x)).margin(1e-13));
    }
  }
}
