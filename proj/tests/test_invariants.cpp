#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <random>

#include "agwp/flow.hpp"
#include "agwp/invariants.hpp"

using namespace agwp;
using Catch::Approx;

namespace {

CMat cmat1(Complex z) {
  CMat m(1, 1);
  m(0, 0) = z;
  return m;
}

}  // namespace

TEST_CASE("initial data satisfies every relation exactly", "[invariants]") {
  for (int d : {1, 2, 3}) {
    CMat A = CMat::Identity(d, d);
    CMat B = iunit * CMat::Identity(d, d);
    RelationReport rep = relation_residuals(A, B);
    CHECK(rep.z_defined);
    CHECK(rep.max_residual() < 1e-14);
    CHECK(rep.siegel_pos == Approx(1.0));
  }
}

TEST_CASE("harmonic solution satisfies the relations for any t", "[invariants]") {
  for (double t : {0.3, 1.7, 4.4}) {
    CMat A = cmat1(std::exp(iunit * t));
    CMat B = cmat1(iunit * std::exp(iunit * t));
    RelationReport rep = relation_residuals(A, B);
    CHECK(rep.max_residual() < 1e-14);
  }
}

TEST_CASE("violation shows up at its own magnitude", "[invariants]") {
  for (int d : {1, 2}) {
    CMat A = CMat::Identity(d, d);
    CMat B = CMat::Identity(d, d);  // violates B(t0) = i I
    RelationReport rep = relation_residuals(A, B);
    CHECK(rep.lagrange == Approx(2.0 * std::sqrt(double(d))));
  }
}

TEST_CASE("relations hold along integrated trajectories", "[invariants]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uq(-1.5, 1.5);
  std::uniform_real_distribution<double> ut(0.2, 2.5);

  auto check_model = [&](const Hamiltonian& m, int d) {
    for (int rep = 0; rep < 12; ++rep) {
      Vec q0(d), p0(d);
      for (int i = 0; i < d; ++i) {
        q0[i] = uq(rng);
        p0[i] = uq(rng);
      }
      double t1 = ut(rng);
      Trajectory tr = integrate_characteristics(
          m, PhasePoint{q0, p0}, 0.0, t1, std::vector<double>{t1});
      RelationReport r = relation_residuals(tr.back().A, tr.back().B);
      REQUIRE(r.z_defined);
      CHECK(r.max_relative_residual() < 1e-8);
      CHECK(r.siegel_pos > 0.0);
      CHECK(r.det_identity < 1e-10);
    }
  };
  check_model(FreeParticle(1), 1);
  check_model(HarmonicOscillator(2, 1.3), 2);
  check_model(QuarticAnharmonic(1, 1.0, 0.1), 1);
  check_model(DrivenOscillator(1, 1.0, 0.5, 1.7), 1);
}

TEST_CASE("square root correspondence", "[invariants]") {
  SECTION("Z = i I gives the initial data") {
    auto [A, B] = square_root_correspondence(iunit * CMat::Identity(2, 2));
    CHECK((A - CMat::Identity(2, 2)).norm() < 1e-14);
    CHECK((B - iunit * CMat::Identity(2, 2)).norm() < 1e-14);
  }
  SECTION("scalar Z = 2i") {
    auto [A, B] = square_root_correspondence(cmat1(Complex{0.0, 2.0}));
    CHECK(std::abs(A(0, 0) - 1.0 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(B(0, 0) - iunit * std::sqrt(2.0)) < 1e-14);
    // Im(-Z^{-1}) = 1/2 = (B B*)^{-1}
    CHECK(std::abs(std::norm(B(0, 0)) - 2.0) < 1e-14);
  }
  SECTION("free-particle Z differs from the dynamical A by a unit phase") {
    Complex z{0.4, 0.2};  // (2 + i) / 5
    auto [A, B] = square_root_correspondence(cmat1(z));
    CHECK(std::abs(A(0, 0) - std::sqrt(5.0)) < 1e-12);
    Complex dynamical{1.0, 2.0};
    Complex phase = dynamical / A(0, 0);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    // Both squares have the same modulus |det A|.
    CHECK(std::abs(std::abs(dynamical) - std::abs(A(0, 0))) < 1e-12);
  }
  SECTION("the canonical pair is a retraction") {
    CMat Z(2, 2);
    Z << Complex{0.3, 1.2}, Complex{-0.1, 0.2}, Complex{-0.1, 0.2},
        Complex{0.7, 0.9};
    auto [A, B] = square_root_correspondence(Z);
    RelationReport rep = relation_residuals(A, B);
    CHECK(rep.max_residual() < 1e-12);
    CHECK((B * A.inverse() - Z).norm() < 1e-12);
  }
  SECTION("rejects non-Siegel input") {
    CMat bad(2, 2);
    bad << Complex{0.0, 1.0}, Complex{0.5, 0.0}, Complex{-0.5, 0.0},
        Complex{0.0, 1.0};
    CHECK_THROWS_AS(square_root_correspondence(bad), SiegelViolationError);
    CMat neg = -iunit * CMat::Identity(2, 2);
    CHECK_THROWS_AS(square_root_correspondence(neg), SiegelViolationError);
  }
}

TEST_CASE("gauge invariance under SU(d)", "[invariants]") {
  SECTION("U = I and the d = 1 group are trivial") {
    CMat A = CMat::Identity(2, 2);
    CMat B = iunit * CMat::Identity(2, 2);
    GaugeCheck g = gauge_orbit_check(A, B, CMat::Identity(2, 2));
    CHECK(g.z_residual == 0.0);
    CHECK(g.a_residual == 0.0);

    GaugeCheck g1 = gauge_orbit_check(cmat1(Complex{1.0, 2.0}),
                                      cmat1(Complex{0.0, 1.0}), cmat1(1.0));
    CHECK(g1.z_residual < 1e-15);
    CHECK(g1.a_residual < 1e-15);
  }
  SECTION("real rotation at theta = 0.7") {
    double th = 0.7;
    CMat U(2, 2);
    U << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    GaugeCheck g = gauge_orbit_check(CMat::Identity(2, 2),
                                     iunit * CMat::Identity(2, 2), U);
    CHECK(g.z_residual < 1e-14);
    CHECK(g.a_residual < 1e-14);
  }
  SECTION("random SU(d) on trajectory states") {
    QuarticAnharmonic m(2, 1.0, 0.05);
    Vec q0(2), p0(2);
    q0 << 0.9, -0.4;
    p0 << 0.3, 0.5;
    Trajectory tr = integrate_characteristics(m, PhasePoint{q0, p0}, 0.0, 1.1,
                                              std::vector<double>{1.1});
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      CMat U = random_special_unitary(2, seed);
      GaugeCheck g = gauge_orbit_check(tr.back().A, tr.back().B, U);
      CHECK(g.z_residual < 1e-12);
      CHECK(g.a_residual < 1e-12);
    }
  }
  SECTION("non-unitary input is rejected") {
    CMat notU = 2.0 * CMat::Identity(2, 2);
    CHECK_THROWS_AS(gauge_orbit_check(CMat::Identity(2, 2),
                                      iunit * CMat::Identity(2, 2), notU),
                    NotUnitaryError);
  }
}

TEST_CASE("random special unitary postconditions", "[invariants]") {
  for (int d : {1, 2, 3}) {
    CMat U = random_special_unitary(d, 42);
    CHECK((U.adjoint() * U - CMat::Identity(d, d)).norm() < 1e-12);
    CHECK(std::abs(U.determinant() - Complex{1.0, 0.0}) < 1e-12);
    // deterministic per seed
    CMat U2 = random_special_unitary(d, 42);
    CHECK((U - U2).norm() == 0.0);
  }
  CHECK(std::abs(random_special_unitary(1, 3)(0, 0) -
                 random_special_unitary(1, 4)(0, 0)) +
            (random_special_unitary(3, 3) - random_special_unitary(3, 4)).norm() >
        1e-6);
}
