#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "agwp/propagator.hpp"
#include "agwp/reference.hpp"
#include "support/oracles.hpp"

using namespace agwp;
using Catch::Approx;

namespace {
constexpr double pi = std::numbers::pi;

Box box1d(double lo, double hi) {
  return Box{Vec::Constant(1, lo), Vec::Constant(1, hi)};
}
}  // namespace

TEST_CASE("cutoff bump", "[propagator]") {
  CHECK(cutoff_radial(0.0, 4.0, 1.0) == 1.0);
  CHECK(cutoff_radial(3.0, 4.0, 1.0) == 1.0);
  CHECK(cutoff_radial(5.0, 4.0, 1.0) == 0.0);
  double mid = cutoff_radial(3.5, 4.0, 1.0);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  double prev = 1.0;
  for (double r = 3.0; r <= 4.01; r += 0.01) {
    double v = cutoff_radial(r, 4.0, 1.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  CHECK_THROWS_AS(cutoff_radial(1.0, 0.5, 1.0), Error);
}

TEST_CASE("quadrature lattice construction", "[propagator]") {
  PhaseSpaceQuadrature quad = build_quadrature(1, 4.0, 1.0, 0.25, 0.5);
  CHECK(quad.h_q == Approx(0.25));
  CHECK(quad.points_per_axis == 33);  // [-4, 4] at spacing 0.25
  CHECK(quad.node_weight ==
        Approx(0.25 * 0.25 / (2.0 * pi * 0.25)));
  // ball filter keeps ~ pi/4 of the 33x33 lattice
  CHECK(quad.nodes.size() < 33 * 33);
  CHECK(quad.nodes.size() > 700);
  for (const PhasePoint& node : quad.nodes)
    CHECK(node.radius() <= 4.0 + 1e-9);

  SECTION("halving c quadruples the lattice") {
    PhaseSpaceQuadrature fine = build_quadrature(1, 4.0, 1.0, 0.25, 0.25);
    double ratio = static_cast<double>(fine.nodes.size()) /
                   static_cast<double>(quad.nodes.size());
    CHECK(ratio == Approx(4.0).epsilon(0.1));
  }
  SECTION("node cap") {
    CHECK_THROWS_AS(build_quadrature(1, 4.0, 1.0, 0.25, 0.5, 100.0),
                    BudgetExceededError);
  }
  SECTION("invalid cutoff geometry") {
    CHECK_THROWS_AS(build_quadrature(1, 0.5, 1.0, 0.25, 0.5), Error);
  }
}

TEST_CASE("identity resolution at t0", "[propagator]") {
  double hbar = 0.5;
  FreeParticle model(1);
  Box box = box1d(-10.0, 10.0);
  GridFunction psi0 = coherent_state(box, 512, Vec::Zero(1), Vec::Zero(1), hbar);

  auto reconstruct = [&](double c) {
    PhaseSpaceQuadrature quad = build_quadrature(1, 6.0, 1.0, hbar, c);
    PropagatorContext ctx(model, std::move(quad), 0.0, 0.0);
    return propagate_state(ctx, psi0, hbar, 2);
  };

  GridFunction rec_c10 = reconstruct(1.0);
  GridFunction rec_c05 = reconstruct(0.5);
  double e10 = l2_distance(rec_c10, psi0);
  double e05 = l2_distance(rec_c05, psi0);
  CHECK(e05 < 1e-3);
  CHECK(e05 < e10);
}

TEST_CASE("reconstruction improves as the cutoff ball grows", "[propagator]") {
  double hbar = 0.5;
  FreeParticle model(1);
  Box box = box1d(-10.0, 10.0);
  GridFunction psi0 = coherent_state(box, 512, Vec::Zero(1), Vec::Zero(1), hbar);
  auto err_for_rho = [&](double rho) {
    PhaseSpaceQuadrature quad = build_quadrature(1, rho, 1.0, hbar, 0.5);
    PropagatorContext ctx(model, std::move(quad), 0.0, 0.0);
    return l2_distance(propagate_state(ctx, psi0, hbar, 2), psi0);
  };
  double e_small = err_for_rho(3.0);
  double e_large = err_for_rho(6.0);
  CHECK(e_large < e_small);
}

TEST_CASE("kernel with shrunk cutoff support vanishes", "[propagator]") {
  FreeParticle model(1);
  auto kernel_for_rho = [&](double rho) {
    PhaseSpaceQuadrature quad = build_quadrature(1, rho, rho / 2.0, 0.5, 0.5);
    PropagatorContext ctx(model, std::move(quad), 0.0, 0.0);
    return kernel_quadrature(ctx, Vec::Constant(1, 2.0),
                             Vec::Constant(1, 2.0), 0.5, 2);
  };
  // The full kernel at coinciding points is O((pi hbar)^{-1/2}) ~ 0.8; with
  // the support shrunk far from (2, 0) it collapses by orders of magnitude.
  double k04 = std::abs(kernel_for_rho(0.4));
  double k02 = std::abs(kernel_for_rho(0.2));
  CHECK(k04 < 1e-4);
  CHECK(k02 < k04);
}

TEST_CASE("propagated coherent state matches the single packet", "[propagator]") {
  double hbar = 0.1;
  FreeParticle model(1);
  Box box = box1d(-4.0, 6.0);
  GridFunction psi0 = coherent_state(box, 512, Vec::Zero(1),
                                     Vec::Constant(1, 1.0), hbar);
  PhaseSpaceQuadrature quad = build_quadrature(1, 6.0, 1.0, hbar, 0.5);
  PropagatorContext ctx(model, std::move(quad), 0.0, 1.0);
  GridFunction psi = propagate_state(ctx, psi0, hbar, 2);

  Trajectory tr = integrate_characteristics(model, PhasePoint(0.0, 1.0), 0.0,
                                            1.0, std::vector<double>{1.0});
  AnisotropicPacket pk =
      AnisotropicPacket::from_state(tr.back(), PhasePoint(0.0, 1.0), hbar);
  GridFunction exact = packet_eval(box, 512, pk);
  CHECK(l2_distance(psi, exact) < 1e-3);

  SECTION("kernel approaches the exact free kernel") {
    // Quadratic model: the exact kernel is the Van Vleck closed form; the
    // cutoff frame kernel matches it up to the semiclassical 1 + o(hbar).
    for (double x : {0.4, 1.0}) {
      for (double y : {-0.2, 0.3}) {
        Complex got = kernel_quadrature(ctx, Vec::Constant(1, x),
                                        Vec::Constant(1, y), hbar, 2);
        Complex want = oracles::free_kernel(x, y, 1.0, hbar);
        CHECK(std::abs(got - want) / std::abs(want) < 0.05);
      }
    }
  }
}

TEST_CASE("superposition propagates linearly", "[propagator]") {
  double hbar = 0.25;
  FreeParticle model(1);
  Box box = box1d(-8.0, 8.0);
  GridFunction a = coherent_state(box, 512, Vec::Constant(1, 2.0),
                                  Vec::Zero(1), hbar);
  GridFunction b = coherent_state(box, 512, Vec::Constant(1, -2.0),
                                  Vec::Zero(1), hbar);
  GridFunction sum(box, 512);
  sum.values() = (a.values() + b.values());
  double nrm = sum.norm();
  sum.values() /= nrm;

  PhaseSpaceQuadrature quad = build_quadrature(1, 6.0, 1.0, hbar, 0.5);
  PropagatorContext ctx(model, std::move(quad), 0.0, 0.8);
  GridFunction psi_sum = propagate_state(ctx, sum, hbar, 2);
  GridFunction psi_a = propagate_state(ctx, a, hbar, 2);
  GridFunction psi_b = propagate_state(ctx, b, hbar, 2);

  SECTION("linearity to rounding") {
    GridFunction combo(box, 512);
    combo.values() = (psi_a.values() + psi_b.values()) / nrm;
    CHECK(l2_distance(psi_sum, combo) < 1e-12);
  }
  SECTION("agrees with independently propagated packets") {
    auto packet_of = [&](double q0) {
      Trajectory tr = integrate_characteristics(model, PhasePoint(q0, 0.0), 0.0,
                                                0.8, std::vector<double>{0.8});
      return AnisotropicPacket::from_state(tr.back(), PhasePoint(q0, 0.0), hbar);
    };
    GridFunction exact(box, 512);
    AnisotropicPacket pa = packet_of(2.0), pb = packet_of(-2.0);
    for (Eigen::Index i = 0; i < exact.size(); ++i)
      exact.values()[i] = (packet_eval_at(exact.coords(i), pa) +
                           packet_eval_at(exact.coords(i), pb)) /
                          nrm;
    CHECK(l2_distance(psi_sum, exact) < 1e-3);
  }
}

TEST_CASE("harmonic oscillator quarter period", "[propagator]") {
  double hbar = 0.5;
  HarmonicOscillator model(1, 1.0);
  Box box = box1d(-8.0, 8.0);
  GridFunction psi0 = coherent_state(box, 512, Vec::Constant(1, 1.0),
                                     Vec::Zero(1), hbar);
  PhaseSpaceQuadrature quad = build_quadrature(1, 6.0, 1.0, hbar, 0.5);
  PropagatorContext ctx(model, std::move(quad), 0.0, pi / 2);
  GridFunction psi = propagate_state(ctx, psi0, hbar, 2);

  Trajectory tr = integrate_characteristics(model, PhasePoint(1.0, 0.0), 0.0,
                                            pi / 2, std::vector<double>{pi / 2});
  AnisotropicPacket pk =
      AnisotropicPacket::from_state(tr.back(), PhasePoint(1.0, 0.0), hbar);
  GridFunction exact = packet_eval(box, 512, pk);
  CHECK(l2_distance(psi, exact) < 1e-3);
}

TEST_CASE("node sum is reproducible across thread counts", "[propagator]") {
  double hbar = 0.5;
  FreeParticle model(1);
  Box box = box1d(-9.0, 9.0);
  GridFunction psi0 = coherent_state(box, 256, Vec::Zero(1), Vec::Zero(1), hbar);
  auto run_jobs = [&](int jobs) {
    PhaseSpaceQuadrature quad = build_quadrature(1, 5.0, 1.0, hbar, 0.6);
    PropagatorContext ctx(model, std::move(quad), 0.0, 0.5);
    return propagate_state(ctx, psi0, hbar, jobs);
  };
  GridFunction one = run_jobs(1);
  GridFunction two = run_jobs(2);
  GridFunction four = run_jobs(4);
  CHECK((one.values() - two.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((one.values() - four.values()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coverage error when the output grid is too small", "[propagator]") {
  double hbar = 0.25;
  FreeParticle model(1);
  Box box = box1d(-2.0, 2.0);
  GridFunction psi0 = coherent_state(box, 256, Vec::Zero(1),
                                     Vec::Constant(1, 2.0), hbar);
  PhaseSpaceQuadrature quad = build_quadrature(1, 5.0, 1.0, hbar, 0.5);
  PropagatorContext ctx(model, std::move(quad), 0.0, 2.0);
  CHECK_THROWS_AS(propagate_state(ctx, psi0, hbar, 2), DomainCoverageError);
}
