// Tests for the HK metric primitives: truncated cosine, cone cost between
// weighted Diracs, the Dirac-to-discrete closed form, KL divergence, the
// soft-marginal transport cost and the scaling solver for grid measures.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hkb/hk_metric.hpp"
#include "hkb/measures.hpp"

namespace {

std::vector<double> bump_values(std::size_t n, double center, double width) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    double t = (static_cast<double>(k) / static_cast<double>(n - 1) - center) / width;
    v[k] = std::exp(-t * t);
  }
  return v;
}

void normalize_mass(std::vector<double>& v, double target) {
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x *= target / s;
}

}  // namespace

TEST_CASE("truncated cosine") {
  CHECK(hkb::cos_trunc(0.0) == 1.0);
  CHECK(hkb::cos_trunc(0.3) == std::cos(0.3));
  CHECK(hkb::cos_trunc(-0.3) == std::cos(0.3));
  // Exactly zero from pi/2 on, not just small.
  CHECK(hkb::cos_trunc(hkb::half_pi) == 0.0);
  CHECK(hkb::cos_trunc(hkb::half_pi + 1e-300) == 0.0);
  CHECK(hkb::cos_trunc(2.0) == 0.0);
  CHECK(hkb::cos_trunc(1e9) == 0.0);
  // Continuous at the truncation point.
  CHECK(hkb::cos_trunc(hkb::half_pi - 1e-9) == Catch::Approx(0.0).margin(2e-9));
}

TEST_CASE("cone cost between weighted Diracs") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> upos(-2.0, 2.0), umass(0.0, 10.0);

  SECTION("matches the defining formula in dimensions 1..3") {
    for (int dim = 1; dim <= 3; ++dim) {
      for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x1(dim), x2(dim);
        for (int k = 0; k < dim; ++k) {
          x1[k] = upos(gen);
          x2[k] = upos(gen);
        }
        double m1 = umass(gen), m2 = umass(gen);
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) d2 += (x1[k] - x2[k]) * (x1[k] - x2[k]);
        double d = std::sqrt(d2);
        double expected =
            m1 + m2 - 2.0 * std::sqrt(m1 * m2) * (d >= hkb::half_pi ? 0.0 : std::cos(d));
        CHECK(hkb::cone_cost(x1, m1, x2, m2) == expected);
      }
    }
  }

  SECTION("symmetry is exact") {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x1{upos(gen), upos(gen)}, x2{upos(gen), upos(gen)};
      double m1 = umass(gen), m2 = umass(gen);
      CHECK(hkb::cone_cost(x1, m1, x2, m2) == hkb::cone_cost(x2, m2, x1, m1));
    }
  }

  SECTION("joint 1-homogeneity in the masses") {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x1{upos(gen)}, x2{upos(gen)};
      double m1 = umass(gen) + 0.1, m2 = umass(gen) + 0.1;
      double t = std::uniform_real_distribution<double>(0.1, 7.0)(gen);
      double base = hkb::cone_cost(x1, m1, x2, m2);
      double scaled = hkb::cone_cost(x1, t * m1, x2, t * m2);
      CHECK(scaled == Catch::Approx(t * base).epsilon(1e-12));
    }
  }

  SECTION("nonnegative, zero exactly on equal cone points") {
    // Same position, same mass: zero.
    CHECK(hkb::cone_cost({0.4, -0.2}, 3.0, {0.4, -0.2}, 3.0) == 0.0);
    // Both masses zero is the cone apex regardless of position.
    CHECK(hkb::cone_cost({0.0}, 0.0, {10.0}, 0.0) == 0.0);
    // Distinct points with positive mass cost strictly more than zero.
    CHECK(hkb::cone_cost({0.0}, 1.0, {0.1}, 1.0) > 0.0);
    CHECK(hkb::cone_cost({0.0}, 1.0, {0.0}, 2.0) > 0.0);
    CHECK(hkb::cone_cost({0.0}, 0.0, {0.0}, 2.0) == 2.0);
    // Lower bound (sqrt(m1)-sqrt(m2))^2 over random draws.
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> x1{upos(gen)}, x2{upos(gen)};
      double m1 = umass(gen), m2 = umass(gen);
      double lb = hkb::detail::sq(std::sqrt(m1) - std::sqrt(m2));
      CHECK(hkb::cone_cost(x1, m1, x2, m2) >= lb - 1e-12 * (1.0 + lb));
    }
  }

  SECTION("unit masses half-pi apart cost exactly 2") {
    CHECK(hkb::cone_cost({0.0}, 1.0, {hkb::half_pi}, 1.0) == 2.0);
    CHECK(hkb::hk_dirac_sq({0.0}, 1.0, {hkb::half_pi}, 1.0) == 2.0);
    // Beyond the truncation radius the cost saturates at m1 + m2.
    CHECK(hkb::cone_cost({0.0}, 1.5, {3.0}, 2.5) == 4.0);
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(hkb::cone_cost({0.0}, 1.0, {0.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hkb::cone_cost({0.0}, -1.0, {0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hkb::cone_cost({0.0}, 1.0, {0.0}, -0.5), std::invalid_argument);
  }

  SECTION("ConePoint overload agrees") {
    hkb::ConePoint p{{0.3, 0.1}, 2.0}, q{{-0.4, 0.6}, 0.7};
    CHECK(hkb::cone_cost(p, q) == hkb::cone_cost(p.position, p.mass, q.position, q.mass));
  }
}

TEST_CASE("Dirac to discrete closed form") {
  SECTION("single target reduces to the cone cost") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> upos(-1.5, 1.5), umass(0.01, 5.0);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x{upos(gen), upos(gen)};
      hkb::Atom a{{upos(gen), upos(gen)}, umass(gen)};
      double m = umass(gen);
      double direct = hkb::hk_dirac_to_discrete_sq(x, m, {a});
      CHECK(direct == Catch::Approx(hkb::cone_cost(x, m, a.position, a.mass)).epsilon(1e-14));
    }
  }

  SECTION("matches a dense scan over the mass split for two targets") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> upos(-1.2, 1.2), umass(0.05, 4.0);
    for (int rep = 0; rep < 40; ++rep) {
      std::vector<double> x{upos(gen)};
      std::vector<hkb::Atom> atoms{{{upos(gen)}, umass(gen)}, {{upos(gen)}, umass(gen)}};
      double m = umass(gen);
      // Split m = m_1 + m_2 over the targets and take the best pairing cost.
      double best = hkb::inf;
      const int n = 20000;
      for (int k = 0; k <= n; ++k) {
        double r = static_cast<double>(k) / n;
        double v = hkb::cone_cost(x, r * m, atoms[0].position, atoms[0].mass) +
                   hkb::cone_cost(x, (1.0 - r) * m, atoms[1].position, atoms[1].mass);
        best = std::min(best, v);
      }
      double closed = hkb::hk_dirac_to_discrete_sq(x, m, atoms);
      CHECK(closed == Catch::Approx(best).margin(1e-7));
      CHECK(closed <= best + 1e-12);
    }
  }

  SECTION("edge cases") {
    // Zero source mass: everything on the target side is annihilated.
    CHECK(hkb::hk_dirac_to_discrete_sq({0.0}, 0.0, {{{0.2}, 1.5}, {{0.4}, 0.5}}) == 2.0);
    // Empty target list: the source is annihilated.
    CHECK(hkb::hk_dirac_to_discrete_sq({0.0}, 3.0, {}) == 3.0);
    // Targets beyond the truncation radius contribute mass but no reach.
    double v = hkb::hk_dirac_to_discrete_sq({0.0}, 1.0, {{{2.0}, 5.0}});
    CHECK(v == 6.0);
    // Mixed near/far targets: only the near one enters the square root.
    double mixed = hkb::hk_dirac_to_discrete_sq({0.0}, 1.0, {{{0.5}, 2.0}, {{3.0}, 1.0}});
    double expected = 1.0 + 3.0 - 2.0 * std::sqrt(2.0 * hkb::detail::sq(std::cos(0.5)));
    CHECK(mixed == Catch::Approx(expected).epsilon(1e-15));
    CHECK_THROWS_AS(hkb::hk_dirac_to_discrete_sq({0.0}, -1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(hkb::hk_dirac_to_discrete_sq({0.0}, 1.0, {{{0.0, 0.0}, 1.0}}),
                    std::invalid_argument);
  }
}

TEST_CASE("KL divergence between grid measures") {
  hkb::Domain dom({0.0}, {1.0});
  auto grid = [&](std::vector<double> v) {
    std::vector<std::size_t> shape{v.size()};
    return hkb::GridMeasure(dom, shape, std::move(v));
  };

  SECTION("zero on equal measures, positive otherwise") {
    auto mu = grid({0.5, 1.0, 0.25});
    CHECK(hkb::kl_divergence(mu, mu) == 0.0);
    auto nu = grid({0.4, 1.2, 0.25});
    CHECK(hkb::kl_divergence(mu, nu) > 0.0);
  }

  SECTION("hand-computed value") {
    auto mu = grid({2.0, 1.0});
    auto nu = grid({1.0, 1.0});
    // 2 log 2 - 2 + 1 + 0
    CHECK(hkb::kl_divergence(mu, nu) == Catch::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-15));
  }

  SECTION("conventions at zero") {
    // mu vanishing where nu does not contributes nu's mass.
    CHECK(hkb::kl_divergence(grid({0.0, 1.0}), grid({0.7, 1.0})) == 0.7);
    // mu putting mass where nu vanishes gives +inf.
    CHECK(hkb::kl_divergence(grid({0.5, 1.0}), grid({0.0, 1.0})) == hkb::inf);
    // Both zero at a node contributes nothing.
    CHECK(hkb::kl_divergence(grid({0.0, 1.0}), grid({0.0, 1.0})) == 0.0);
  }

  SECTION("layout mismatch throws") {
    auto mu = grid({1.0, 1.0});
    hkb::GridMeasure other(hkb::Domain({0.0}, {2.0}), {2}, {1.0, 1.0});
    CHECK_THROWS_AS(hkb::kl_divergence(mu, other), std::invalid_argument);
  }
}

TEST_CASE("soft-marginal transport cost") {
  CHECK(hkb::hk_kl_cost({0.0}, {0.0}) == 0.0);
  CHECK(hkb::hk_kl_cost({0.0}, {0.5}) == Catch::Approx(-2.0 * std::log(std::cos(0.5))).epsilon(1e-15));
  CHECK(hkb::hk_kl_cost({0.0}, {hkb::half_pi}) == hkb::inf);
  CHECK(hkb::hk_kl_cost({0.0}, {5.0}) == hkb::inf);
  // Monotone in the distance on [0, pi/2).
  CHECK(hkb::hk_kl_cost({0.0}, {1.2}) > hkb::hk_kl_cost({0.0}, {1.1}));
}

TEST_CASE("scaling solver configuration") {
  SECTION("validation") {
    hkb::SinkhornConfig ok;
    CHECK_NOTHROW(ok.validate());

    hkb::SinkhornConfig c = ok;
    c.epsilon_start = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.epsilon_final = 2.0 * c.epsilon_start;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.epsilon_decay = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.epsilon_decay = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.max_iter_per_epsilon = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.marginal_tol = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = ok;
    c.cost_cutoff = hkb::half_pi;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  SECTION("epsilon schedule is geometric and ends exactly at the target") {
    hkb::SinkhornConfig c;
    c.epsilon_start = 1.0;
    c.epsilon_final = 1e-3;
    c.epsilon_decay = 0.1;
    auto es = c.epsilon_schedule();
    REQUIRE(es.size() >= 4);
    CHECK(es[0] == 1.0);
    CHECK(es[1] == 0.1);
    CHECK(es[2] == Catch::Approx(0.01).epsilon(1e-15));
    CHECK(es.back() == 1e-3);
    for (std::size_t k = 1; k < es.size(); ++k) {
      CHECK(es[k] < es[k - 1]);
      CHECK(es[k] >= es[k - 1] * c.epsilon_decay * (1.0 - 1e-12));
    }

    c.epsilon_final = c.epsilon_start;
    es = c.epsilon_schedule();
    REQUIRE(es.size() == 1);
    CHECK(es[0] == 1.0);

    // A final value off the geometric lattice is clamped, not overshot.
    c.epsilon_final = 0.35;
    es = c.epsilon_schedule();
    REQUIRE(es.size() == 2);
    CHECK(es[1] == 0.35);
  }
}

TEST_CASE("squared distance between grid measures") {
  // 1-d grid with spacing exactly 0.01 so selected nodes sit at round positions.
  hkb::Domain dom({0.0}, {2.55});
  const std::size_t n = 256;

  auto dirac_at = [&](std::size_t idx, double mass) {
    std::vector<double> v(n, 0.0);
    v[idx] = mass;
    return hkb::GridMeasure(dom, {n}, std::move(v));
  };

  SECTION("identical measures are at squared distance near zero") {
    auto v = bump_values(64, 0.5, 0.2);
    normalize_mass(v, 1.0);
    hkb::GridMeasure mu(hkb::Domain({0.0}, {1.0}), {64}, v);
    auto res = hkb::hk_distance_sq(mu, mu);
    CHECK(res.converged);
    CHECK(res.value >= -1e-9);
    CHECK(res.value < 1e-3);
    // The plan marginals reproduce the input masses.
    CHECK(hkb::total_mass(res.plan_marginal_first) == Catch::Approx(1.0).margin(2e-3));
    CHECK(hkb::total_mass(res.plan_marginal_second) == Catch::Approx(1.0).margin(2e-3));
  }

  SECTION("two unit Diracs one unit apart") {
    auto mu1 = dirac_at(50, 1.0);   // node at 0.50
    auto mu2 = dirac_at(150, 1.0);  // node at 1.50
    auto res = hkb::hk_distance_sq(mu1, mu2);
    double exact = 2.0 - 2.0 * std::cos(1.0);
    CHECK(res.converged);
    CHECK(res.value == Catch::Approx(exact).epsilon(0.02));
    // Plan mass concentrates on the two support nodes with equal marginals.
    CHECK(res.plan_marginal_first.values()[50] == Catch::Approx(std::cos(1.0)).epsilon(0.05));
    CHECK(res.plan_marginal_second.values()[150] ==
          Catch::Approx(res.plan_marginal_first.values()[50]).epsilon(1e-6));
  }

  SECTION("Diracs beyond the transport radius only annihilate") {
    auto mu1 = dirac_at(10, 1.5);  // node at 0.10
    auto mu2 = dirac_at(210, 2.5); // node at 2.10, distance 2 > pi/2
    auto res = hkb::hk_distance_sq(mu1, mu2);
    CHECK(res.converged);
    CHECK(res.value == Catch::Approx(4.0).margin(1e-12));
    CHECK(hkb::total_mass(res.plan_marginal_first) == 0.0);
    CHECK(hkb::total_mass(res.plan_marginal_second) == 0.0);
  }

  SECTION("one empty side gives full annihilation exactly") {
    auto mu1 = dirac_at(100, 0.75);
    hkb::GridMeasure zero(dom, {n}, std::vector<double>(n, 0.0));
    auto res = hkb::hk_distance_sq(mu1, zero);
    CHECK(res.converged);
    CHECK(res.value == 0.75);
    CHECK(hkb::total_mass(res.plan_marginal_first) == 0.0);
    auto res2 = hkb::hk_distance_sq(zero, mu1);
    CHECK(res2.value == 0.75);
    CHECK_THROWS_AS(hkb::hk_distance_sq(zero, zero), std::invalid_argument);
  }

  SECTION("symmetry within solver tolerance") {
    auto v1 = bump_values(48, 0.35, 0.15);
    normalize_mass(v1, 1.0);
    auto v2 = bump_values(48, 0.65, 0.25);
    normalize_mass(v2, 1.7);
    hkb::Domain d01({0.0}, {1.0});
    hkb::GridMeasure mu1(d01, {48}, v1), mu2(d01, {48}, v2);
    auto r12 = hkb::hk_distance_sq(mu1, mu2);
    auto r21 = hkb::hk_distance_sq(mu2, mu1);
    CHECK(r12.converged);
    CHECK(r21.converged);
    CHECK(r12.value == Catch::Approx(r21.value).margin(1e-4 * (1.0 + r12.value)));
  }

  SECTION("lower bound from the total masses") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> umass(0.2, 3.0), uc(0.2, 0.8), uw(0.05, 0.3);
    hkb::Domain d01({0.0}, {1.0});
    for (int rep = 0; rep < 5; ++rep) {
      auto v1 = bump_values(32, uc(gen), uw(gen));
      normalize_mass(v1, umass(gen));
      auto v2 = bump_values(32, uc(gen), uw(gen));
      normalize_mass(v2, umass(gen));
      hkb::GridMeasure mu1(d01, {32}, v1), mu2(d01, {32}, v2);
      auto res = hkb::hk_distance_sq(mu1, mu2);
      REQUIRE(res.converged);
      double lb = hkb::detail::sq(std::sqrt(hkb::total_mass(mu1)) - std::sqrt(hkb::total_mass(mu2)));
      CHECK(res.value >= lb - 1e-6 * (1.0 + lb));
    }
  }

  SECTION("layout mismatch throws") {
    auto mu1 = dirac_at(10, 1.0);
    hkb::GridMeasure other(hkb::Domain({0.0}, {1.0}), {n}, std::vector<double>(n, 1.0));
    CHECK_THROWS_AS(hkb::hk_distance_sq(mu1, other), std::invalid_argument);
  }
}
