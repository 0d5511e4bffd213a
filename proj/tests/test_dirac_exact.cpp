// Tests for the exact Dirac barycenter routines: the two-marginal geodesic
// construction, the complete three-marginal case analysis on the line, the
// general hull-decomposition route, and the shared optimality invariants.
#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "hkb/dirac_exact.hpp"
#include "oracles.hpp"

namespace {

const hkb::Weights kThirds({1.0 / 3, 1.0 / 3, 1.0 / 3});

// One-parameter family of three collinear marginals: scaling t moves the
// configuration through every regime of the case analysis (single window,
// intermediate with all its stages, pair-plus-lone, fully separated).
hkb::PointConfig three_line(double t) {
  return hkb::PointConfig({{-t * (2.0 / 3.0) * hkb::half_pi},
                           {0.0},
                           {t * 0.5 * hkb::half_pi}},
                          {1.0, 1.0, 1.0}, kThirds);
}

std::vector<double> fd_value_gradient(const hkb::PointConfig& cfg) {
  std::vector<double> g(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    double h = 1e-6 * (1.0 + cfg.masses[i]);
    auto up = cfg.masses, dn = cfg.masses;
    up[i] += h;
    dn[i] -= h;
    g[i] = (hkb::barycenter_n3_1d(cfg.with_masses(up)).value -
            hkb::barycenter_n3_1d(cfg.with_masses(dn)).value) /
           (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("two-marginal barycenter") {
  SECTION("input validation") {
    CHECK_THROWS_AS(hkb::barycenter_n2({0.0}, 1.0, {1.0}, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_n2({0.0}, 1.0, {1.0}, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_n2({0.0}, 0.0, {1.0}, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_n2({0.0}, 1.0, {1.0, 0.0}, 1.0, 0.5),
                    std::invalid_argument);
  }

  SECTION("unit masses at distance one meet at the midpoint") {
    auto out = hkb::barycenter_n2({0.0, 0.0}, 1.0, {0.6, 0.8}, 1.0, 0.5);
    REQUIRE(out.atoms.size() == 1);
    CHECK(out.regime == hkb::BarycenterRegime::single);
    CHECK(out.valid);
    CHECK(out.atoms[0].position[0] == Catch::Approx(0.3).margin(1e-12));
    CHECK(out.atoms[0].position[1] == Catch::Approx(0.4).margin(1e-12));
    CHECK(out.atoms[0].mass ==
          Catch::Approx(hkb::detail::sq(std::cos(0.5))).epsilon(1e-12));
    CHECK(out.value == Catch::Approx(1.0 - hkb::detail::sq(std::cos(0.5))).margin(1e-12));
    REQUIRE(out.parts.parts.size() == 1);
    CHECK(out.parts.parts[0][0] == 1.0);
    CHECK(out.parts.parts[0][1] == 1.0);
  }

  SECTION("beyond the cut the marginals stop interacting") {
    auto out = hkb::barycenter_n2({0.0}, 2.0, {2.0}, 0.5, 0.5);
    REQUIRE(out.atoms.size() == 2);
    CHECK(out.regime == hkb::BarycenterRegime::far_product);
    CHECK(out.valid);
    CHECK(out.atoms[0].position[0] == 0.0);
    CHECK(out.atoms[0].mass == Catch::Approx(0.5).epsilon(1e-14));   // (1/2)^2 * 2
    CHECK(out.atoms[1].position[0] == 2.0);
    CHECK(out.atoms[1].mass == Catch::Approx(0.125).epsilon(1e-14));  // (1/2)^2 * 1/2
    CHECK(out.value == Catch::Approx(0.625).epsilon(1e-14));
    // Certificate is the product-regime vector.
    CHECK(out.certificate.psi[0] == Catch::Approx(0.25).epsilon(1e-14));
    CHECK(out.certificate.psi[1] == Catch::Approx(0.25).epsilon(1e-14));
  }

  SECTION("vanishing weight collapses onto the first marginal") {
    auto out = hkb::barycenter_n2({0.2}, 1.0, {1.2}, 1.0, 1e-6);
    REQUIRE(out.atoms.size() == 1);
    CHECK(std::abs(out.atoms[0].position[0] - 0.2) < 1e-6);
    CHECK(std::abs(out.atoms[0].mass - 1.0) < 1e-6);
  }

  SECTION("exactly at the cut the result is flagged diffuse") {
    auto out = hkb::barycenter_n2({0.0}, 1.0, {hkb::half_pi}, 1.0, 0.5);
    CHECK(out.boundary);
    CHECK(out.regime == hkb::BarycenterRegime::diffuse);
    REQUIRE(out.atoms.size() == 1);
    CHECK(out.valid);
  }

  SECTION("the output is the constant-speed geodesic point") {
    std::mt19937_64 gen(211);
    std::uniform_real_distribution<double> um(0.2, 3.0), ut(0.1, 0.9), ud(0.1, 1.5);
    for (int rep = 0; rep < 50; ++rep) {
      double m1 = um(gen), m2 = um(gen), t = ut(gen), d = ud(gen);
      auto out = hkb::barycenter_n2({0.0}, m1, {d}, m2, t);
      REQUIRE(out.atoms.size() == 1);
      double full = std::sqrt(hkb::cone_cost({0.0}, m1, {d}, m2));
      double leg1 = std::sqrt(hkb::cone_cost({0.0}, m1, out.atoms[0].position,
                                             out.atoms[0].mass));
      double leg2 = std::sqrt(hkb::cone_cost(out.atoms[0].position, out.atoms[0].mass,
                                             {d}, m2));
      CHECK(leg1 == Catch::Approx(t * full).margin(1e-9));
      CHECK(leg2 == Catch::Approx((1.0 - t) * full).margin(1e-9));
    }
  }

  SECTION("planar isometries map the output atom") {
    auto base = hkb::barycenter_n2({0.0, 0.0}, 1.3, {0.9, 0.2}, 0.6, 0.35);
    double c = std::cos(0.7), s = std::sin(0.7);
    auto rot = [&](const std::vector<double>& p) {
      return std::vector<double>{c * p[0] - s * p[1] + 4.0, s * p[0] + c * p[1] - 2.5};
    };
    auto moved = hkb::barycenter_n2(rot({0.0, 0.0}), 1.3, rot({0.9, 0.2}), 0.6, 0.35);
    REQUIRE(base.atoms.size() == 1);
    REQUIRE(moved.atoms.size() == 1);
    auto expected = rot(base.atoms[0].position);
    CHECK(moved.atoms[0].position[0] == Catch::Approx(expected[0]).margin(1e-9));
    CHECK(moved.atoms[0].position[1] == Catch::Approx(expected[1]).margin(1e-9));
    CHECK(moved.atoms[0].mass == Catch::Approx(base.atoms[0].mass).epsilon(1e-12));
  }
}

TEST_CASE("three-marginal case analysis on the line") {
  SECTION("input validation") {
    CHECK_THROWS_AS(hkb::barycenter_n3_1d(hkb::PointConfig(
                        {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}, {1.0, 1.0, 1.0}, kThirds)),
                    std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_n3_1d(hkb::PointConfig(
                        {{0.0}, {1.0}}, {1.0, 1.0}, hkb::Weights({0.5, 0.5}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_n3_1d(hkb::PointConfig(
                        {{0.0}, {1.0}, {2.0}}, {1.0, 0.0, 1.0}, kThirds)),
                    std::invalid_argument);
  }

  SECTION("narrow window gives the single closed-form atom") {
    hkb::PointConfig cfg({{1.0}, {1.2}, {1.4}}, {1.0, 2.0, 0.5},
                         hkb::Weights({0.3, 0.4, 0.3}));
    auto out = hkb::barycenter_n3_1d(cfg);
    REQUIRE(out.atoms.size() == 1);
    CHECK(out.regime == hkb::BarycenterRegime::single);
    CHECK(out.valid);
    auto closed = hkb::c_mm_1d_closed(cfg);
    CHECK(out.atoms[0].position[0] == Catch::Approx(closed.minimizer.position[0]).margin(1e-12));
    CHECK(out.atoms[0].mass == Catch::Approx(closed.minimizer.mass).epsilon(1e-12));
    CHECK(out.value == Catch::Approx(closed.value).margin(1e-12));
  }

  SECTION("fully separated marginals keep reduced point masses") {
    hkb::PointConfig cfg({{0.0}, {2.0}, {4.0}}, {9.0, 9.0, 9.0}, kThirds);
    auto out = hkb::barycenter_n3_1d(cfg);
    REQUIRE(out.atoms.size() == 3);
    CHECK(out.regime == hkb::BarycenterRegime::far_product);
    CHECK(out.valid);
    for (int i = 0; i < 3; ++i) {
      CHECK(out.atoms[static_cast<std::size_t>(i)].position[0] ==
            Catch::Approx(2.0 * i).margin(1e-12));
      CHECK(out.atoms[static_cast<std::size_t>(i)].mass == Catch::Approx(1.0).epsilon(1e-12));
    }
  }

  SECTION("pair-plus-lone matches the two-marginal route") {
    hkb::PointConfig cfg({{0.3}, {1.2}, {3.0}}, {2.0, 1.0, 0.5},
                         hkb::Weights({0.5, 0.2, 0.3}));
    auto out = hkb::barycenter_n3_1d(cfg);
    REQUIRE(out.atoms.size() == 2);
    CHECK(out.regime == hkb::BarycenterRegime::split);
    CHECK(out.valid);
    // Merged pair: same phase construction as the two-marginal solver with
    // renormalized weights; the pairing mass scales by the squared weight sum.
    double wp = 0.5 + 0.2;
    auto pair = hkb::barycenter_n2({0.3}, 2.0, {1.2}, 1.0, 0.2 / wp);
    REQUIRE(pair.atoms.size() == 1);
    CHECK(out.atoms[0].position[0] == Catch::Approx(pair.atoms[0].position[0]).margin(1e-12));
    CHECK(out.atoms[0].mass == Catch::Approx(wp * wp * pair.atoms[0].mass).epsilon(1e-12));
    // Lone marginal keeps its reduced mass at its own position.
    CHECK(out.atoms[1].position[0] == Catch::Approx(3.0).margin(1e-12));
    CHECK(out.atoms[1].mass == Catch::Approx(0.3 * 0.3 * 0.5).epsilon(1e-12));
    // The same holds in the mirrored configuration.
    hkb::PointConfig mirror({{-0.3}, {-1.2}, {-3.0}}, {2.0, 1.0, 0.5},
                            hkb::Weights({0.5, 0.2, 0.3}));
    auto mout = hkb::barycenter_n3_1d(mirror);
    REQUIRE(mout.atoms.size() == 2);
    CHECK(mout.atoms[1].position[0] == Catch::Approx(-pair.atoms[0].position[0]).margin(1e-12));
    CHECK(mout.atoms[0].position[0] == Catch::Approx(-3.0).margin(1e-12));
    CHECK(mout.value == Catch::Approx(out.value).epsilon(1e-12));
  }

  SECTION("scaling family walks through every regime") {
    auto regime_at = [&](double t) { return hkb::barycenter_n3_1d(three_line(t)); };

    auto r050 = regime_at(0.5);
    CHECK(r050.regime == hkb::BarycenterRegime::single);
    CHECK(r050.atoms.size() == 1);

    auto r095 = regime_at(0.95);  // intermediate window, single still optimal
    CHECK(r095.regime == hkb::BarycenterRegime::single);
    CHECK(r095.atoms.size() == 1);

    auto r103 = regime_at(1.03);  // inside the measured diffuse band
    CHECK(r103.regime == hkb::BarycenterRegime::diffuse);
    CHECK(r103.valid);
    REQUIRE(r103.diffuse_interval.size() == 2);
    double a = 1.03 * 0.5 * hkb::half_pi - hkb::half_pi;
    double b = -1.03 * (2.0 / 3.0) * hkb::half_pi + hkb::half_pi;
    CHECK(r103.diffuse_interval[0] == Catch::Approx(a).margin(1e-12));
    CHECK(r103.diffuse_interval[1] == Catch::Approx(b).margin(1e-12));
    REQUIRE(!r103.atoms.empty());
    for (const auto& atom : r103.atoms) {
      CHECK(atom.position[0] >= a - 1e-9);
      CHECK(atom.position[0] <= b + 1e-9);
    }

    auto r120 = regime_at(1.2);
    CHECK(r120.regime == hkb::BarycenterRegime::split);
    CHECK(r120.atoms.size() == 2);

    auto r175 = regime_at(1.75);
    CHECK(r175.regime == hkb::BarycenterRegime::split);
    CHECK(r175.atoms.size() == 2);

    auto r250 = regime_at(2.5);
    CHECK(r250.regime == hkb::BarycenterRegime::far_product);
    CHECK(r250.atoms.size() == 3);

    for (const auto* r : {&r050, &r095, &r103, &r120, &r175, &r250}) CHECK(r->valid);
  }

  SECTION("values agree with the barrier oracle across the family") {
    for (double t : {0.5, 0.95, 1.03, 1.2, 1.75, 2.5}) {
      auto cfg = three_line(t);
      auto out = hkb::barycenter_n3_1d(cfg);
      auto ref = oracle::dual_oracle_n3(cfg);
      CHECK(out.value == Catch::Approx(ref.value).margin(1e-5 * (1.0 + ref.value)));
    }
  }

  SECTION("certificates are mass gradients of the value") {
    // Central differences of the optimal value in each mass reproduce psi in
    // every regime (envelope theorem); the diffuse value is linear in m.
    for (double t : {0.5, 0.95, 1.03, 1.2, 1.75, 2.5}) {
      auto cfg = three_line(t);
      auto out = hkb::barycenter_n3_1d(cfg);
      auto fd = fd_value_gradient(cfg);
      for (std::size_t i = 0; i < 3; ++i)
        CHECK(out.certificate.psi[i] == Catch::Approx(fd[i]).margin(1e-5));
    }
  }

  SECTION("exact cut distances resolve with the boundary flag") {
    hkb::PointConfig cfg({{0.0}, {0.3}, {hkb::half_pi}}, {1.0, 1.0, 1.0}, kThirds);
    auto out = hkb::barycenter_n3_1d(cfg);
    CHECK(out.boundary);
    CHECK(out.regime == hkb::BarycenterRegime::single);
    CHECK(out.valid);
  }

  SECTION("outputs follow the input order, not the sorted one") {
    hkb::PointConfig shuffled({{3.0}, {0.3}, {1.2}}, {0.5, 2.0, 1.0},
                              hkb::Weights({0.3, 0.5, 0.2}));
    hkb::PointConfig sorted({{0.3}, {1.2}, {3.0}}, {2.0, 1.0, 0.5},
                            hkb::Weights({0.5, 0.2, 0.3}));
    auto a = hkb::barycenter_n3_1d(shuffled);
    auto b = hkb::barycenter_n3_1d(sorted);
    CHECK(a.value == Catch::Approx(b.value).epsilon(1e-14));
    REQUIRE(a.atoms.size() == b.atoms.size());
    for (std::size_t j = 0; j < a.atoms.size(); ++j) {
      CHECK(a.atoms[j].position[0] == Catch::Approx(b.atoms[j].position[0]).margin(1e-14));
      CHECK(a.atoms[j].mass == Catch::Approx(b.atoms[j].mass).epsilon(1e-14));
    }
    // Certificate follows the marginal order: shuffled = (x3, x1, x2).
    CHECK(a.certificate.psi[0] == Catch::Approx(b.certificate.psi[2]).margin(1e-14));
    CHECK(a.certificate.psi[1] == Catch::Approx(b.certificate.psi[0]).margin(1e-14));
    CHECK(a.certificate.psi[2] == Catch::Approx(b.certificate.psi[1]).margin(1e-14));
  }

  SECTION("isometries of the line move the atoms rigidly") {
    hkb::PointConfig base({{0.3}, {1.2}, {3.0}}, {2.0, 1.0, 0.5},
                          hkb::Weights({0.5, 0.2, 0.3}));
    auto out = hkb::barycenter_n3_1d(base);
    for (double shift : {0.7, -12.25, 50.7}) {
      hkb::PointConfig moved({{0.3 + shift}, {1.2 + shift}, {3.0 + shift}},
                             {2.0, 1.0, 0.5}, hkb::Weights({0.5, 0.2, 0.3}));
      auto mout = hkb::barycenter_n3_1d(moved);
      CHECK(mout.value == Catch::Approx(out.value).margin(1e-9));
      REQUIRE(mout.atoms.size() == out.atoms.size());
      for (std::size_t j = 0; j < out.atoms.size(); ++j) {
        CHECK(mout.atoms[j].position[0] ==
              Catch::Approx(out.atoms[j].position[0] + shift).margin(1e-9));
        CHECK(mout.atoms[j].mass == Catch::Approx(out.atoms[j].mass).epsilon(1e-9));
      }
    }
  }

  SECTION("mass scaling acts linearly on atom masses and the value") {
    std::mt19937_64 gen(223);
    std::uniform_real_distribution<double> ua(0.2, 4.0);
    for (double t : {0.5, 1.2, 2.5}) {
      auto cfg = three_line(t);
      auto base = hkb::barycenter_n3_1d(cfg);
      double alpha = ua(gen);
      std::vector<double> scaled = cfg.masses;
      for (double& m : scaled) m *= alpha;
      auto out = hkb::barycenter_n3_1d(cfg.with_masses(scaled));
      CHECK(out.value == Catch::Approx(alpha * base.value).epsilon(1e-9));
      REQUIRE(out.atoms.size() == base.atoms.size());
      for (std::size_t j = 0; j < out.atoms.size(); ++j) {
        CHECK(out.atoms[j].position[0] ==
              Catch::Approx(base.atoms[j].position[0]).margin(1e-9));
        CHECK(out.atoms[j].mass == Catch::Approx(alpha * base.atoms[j].mass).epsilon(1e-9));
      }
    }
  }

  SECTION("support stays within the cut radius of its sources") {
    for (double t : {0.5, 0.95, 1.03, 1.2, 1.75, 2.5}) {
      auto cfg = three_line(t);
      auto out = hkb::barycenter_n3_1d(cfg);
      REQUIRE(out.parts.parts.size() == out.atoms.size());
      for (std::size_t j = 0; j < out.atoms.size(); ++j)
        for (std::size_t i = 0; i < 3; ++i)
          if (out.parts.parts[j][i] > 1e-12)
            CHECK(std::abs(out.atoms[j].position[0] - cfg.positions[i][0]) <=
                  hkb::half_pi + 1e-9);
    }
  }

  SECTION("every marginal keeps positive mass somewhere") {
    for (double t : {0.5, 1.03, 1.2, 1.75, 2.5}) {
      auto out = hkb::barycenter_n3_1d(three_line(t));
      for (std::size_t i = 0; i < 3; ++i) {
        double received = 0.0;
        for (std::size_t j = 0; j < out.parts.parts.size(); ++j)
          if (out.atoms[j].mass > 0.0) received += out.parts.parts[j][i];
        CHECK(received > 1e-9);
      }
    }
  }
}

TEST_CASE("general hull-decomposition route") {
  SECTION("input validation") {
    std::vector<std::vector<double>> many(7, {0.0});
    many[1] = {1.0};
    CHECK_THROWS_AS(
        hkb::barycenter_diracs(hkb::PointConfig(
            many, std::vector<double>(7, 1.0),
            hkb::Weights(std::vector<double>(7, 1.0 / 7)))),
        std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_diracs(hkb::PointConfig(
                        {{0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}}, {1.0, 1.0},
                        hkb::Weights({0.5, 0.5}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(hkb::barycenter_diracs(hkb::PointConfig(
                        {{0.0}, {1.0}}, {1.0, 0.0}, hkb::Weights({0.5, 0.5}))),
                    std::invalid_argument);
  }

  SECTION("two marginals reproduce the dedicated solver") {
    std::mt19937_64 gen(227);
    std::uniform_real_distribution<double> um(0.3, 2.0), ut(0.2, 0.8);
    for (double d : {0.9, 2.2}) {
      double m1 = um(gen), m2 = um(gen), t = ut(gen);
      auto direct = hkb::barycenter_n2({0.0}, m1, {d}, m2, t);
      auto general = hkb::barycenter_diracs(
          hkb::PointConfig({{0.0}, {d}}, {m1, m2}, hkb::Weights({1.0 - t, t})));
      CHECK(general.valid);
      CHECK(general.value == Catch::Approx(direct.value).margin(1e-9 * (1.0 + direct.value)));
      REQUIRE(general.atoms.size() == direct.atoms.size());
      for (std::size_t j = 0; j < direct.atoms.size(); ++j) {
        CHECK(general.atoms[j].position[0] ==
              Catch::Approx(direct.atoms[j].position[0]).margin(1e-6));
        CHECK(general.atoms[j].mass == Catch::Approx(direct.atoms[j].mass).margin(1e-6));
      }
    }
  }

  SECTION("three collinear marginals reproduce the case analysis") {
    for (double t : {0.5, 1.2, 2.5}) {  // away from the diffuse band
      auto cfg = three_line(t);
      auto direct = hkb::barycenter_n3_1d(cfg);
      auto general = hkb::barycenter_diracs(cfg);
      CHECK(general.valid);
      CHECK(general.value == Catch::Approx(direct.value).margin(1e-6 * (1.0 + direct.value)));
      REQUIRE(general.atoms.size() == direct.atoms.size());
      for (std::size_t j = 0; j < direct.atoms.size(); ++j) {
        CHECK(general.atoms[j].position[0] ==
              Catch::Approx(direct.atoms[j].position[0]).margin(1e-4));
        CHECK(general.atoms[j].mass == Catch::Approx(direct.atoms[j].mass).margin(1e-4));
      }
      CHECK(general.regime == direct.regime);
    }
  }

  SECTION("planar cluster collapses to one atom, separated clusters do not") {
    hkb::PointConfig tight({{0.0, 0.0}, {0.3, 0.1}, {0.1, 0.35}}, {1.0, 0.8, 1.2},
                           hkb::Weights({0.4, 0.3, 0.3}));
    auto out = hkb::barycenter_diracs(tight);
    CHECK(out.valid);
    CHECK(out.regime == hkb::BarycenterRegime::single);
    REQUIRE(out.atoms.size() == 1);
    // The atom lies within the cut radius of every marginal.
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(hkb::detail::euclidean_distance(out.atoms[0].position, tight.positions[i]) <
            hkb::half_pi);

    hkb::PointConfig spread({{0.0, 0.0}, {4.0, 0.0}, {0.0, 4.0}}, {1.0, 0.8, 1.2},
                            hkb::Weights({0.4, 0.3, 0.3}));
    auto far = hkb::barycenter_diracs(spread);
    CHECK(far.valid);
    CHECK(far.regime == hkb::BarycenterRegime::far_product);
    REQUIRE(far.atoms.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      double received = 0.0;
      for (std::size_t j = 0; j < far.parts.parts.size(); ++j)
        received += far.parts.parts[j][i];
      CHECK(received == Catch::Approx(spread.masses[i]).margin(1e-9));
    }
  }

  SECTION("four marginals split into the expected pair structure") {
    // Two tight pairs far from each other: each pair merges, the pairs ignore
    // each other.
    hkb::PointConfig cfg({{0.0}, {0.4}, {3.0}, {3.5}}, {1.0, 1.0, 1.0, 1.0},
                         hkb::Weights({0.25, 0.25, 0.25, 0.25}));
    auto out = hkb::barycenter_diracs(cfg);
    CHECK(out.valid);
    CHECK(out.regime == hkb::BarycenterRegime::split);
    REQUIRE(out.atoms.size() == 2);
    CHECK(out.atoms[0].position[0] > 0.0);
    CHECK(out.atoms[0].position[0] < 0.4);
    CHECK(out.atoms[1].position[0] > 3.0);
    CHECK(out.atoms[1].position[0] < 3.5);
    // Certificate pairing equals the value (complementary slackness).
    double dual = 0.0;
    for (std::size_t i = 0; i < 4; ++i) dual += out.certificate.psi[i] * cfg.masses[i];
    CHECK(dual == Catch::Approx(out.value).margin(1e-6 * (1.0 + out.value)));
  }

  SECTION("objective certificate holds on random mixed configurations") {
    std::mt19937_64 gen(229);
    std::uniform_real_distribution<double> ux(0.0, 2.4), um(0.2, 2.0);
    for (int rep = 0; rep < 12; ++rep) {
      std::size_t n = 2 + static_cast<std::size_t>(rep % 3);
      std::vector<std::vector<double>> pos;
      std::vector<double> m;
      std::vector<double> w;
      double ws = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        pos.push_back({ux(gen)});
        m.push_back(um(gen));
        ws += w.emplace_back(std::uniform_real_distribution<double>(0.2, 1.0)(gen));
      }
      for (double& x : w) x /= ws;
      hkb::PointConfig cfg(pos, m, hkb::Weights(w));
      auto out = hkb::barycenter_diracs(cfg);
      if (!out.valid) continue;  // hull solver could not certify; skip
      double primal = hkb::dirac_objective(cfg, out.atoms);
      double dual = 0.0;
      for (std::size_t i = 0; i < n; ++i) dual += out.certificate.psi[i] * cfg.masses[i];
      CHECK(primal == Catch::Approx(dual).margin(1e-6 * (1.0 + std::abs(dual))));
      CHECK(out.value == Catch::Approx(primal).margin(1e-6 * (1.0 + std::abs(primal))));
    }
  }
}
