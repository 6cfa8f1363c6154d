#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "agwp/packet.hpp"
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

TEST_CASE("free evolution matches the exact spreading Gaussian", "[reference]") {
  double hbar = 0.1;
  Box box = box1d(-6.0, 8.0);
  FreeParticle model(1);
  SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 1024, 1e-3, hbar);
  GridFunction psi0 = coherent_state(box, 1024, Vec::Zero(1),
                                     Vec::Constant(1, 1.0), hbar);
  GridFunction psi = split_step_solve(cfg, psi0, 0.0, 1.0);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-12);

  GridFunction exact(box, 1024);
  for (Eigen::Index i = 0; i < exact.size(); ++i)
    exact.values()[i] =
        oracles::free_gaussian_at(exact.coords(i)[0], 1.0, 0.0, 1.0, hbar);
  CHECK(l2_distance(psi, exact) < 1e-8);
}

TEST_CASE("harmonic coherent state returns after one period", "[reference]") {
  double hbar = 0.25;
  Box box = box1d(-8.0, 8.0);
  HarmonicOscillator model(1, 1.0);
  SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 512, 1e-3, hbar);
  GridFunction psi0 = coherent_state(box, 512, Vec::Constant(1, 1.0),
                                     Vec::Zero(1), hbar);
  GridFunction psi = split_step_solve(cfg, psi0, 0.0, 2.0 * pi);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-10);
  CHECK(std::abs(std::abs(overlap(psi, psi0)) - 1.0) < 1e-8);
}

TEST_CASE("driven oscillator: time-dependent quadratic model is exact",
          "[reference]") {
  // Quadratic-plus-linear H keeps the characteristic packet exact, so the
  // split-step solver (with per-step midpoint resampling of V) must agree.
  double hbar = 0.1;
  DrivenOscillator model(1, 1.0, 0.4, 1.3);
  Box box = box1d(-7.0, 7.0);
  SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 1024, 1e-4, hbar);
  CHECK(cfg.time_dependent);
  GridFunction psi0 = coherent_state(box, 1024, Vec::Constant(1, 1.0),
                                     Vec::Zero(1), hbar);
  GridFunction psi = split_step_solve(cfg, psi0, 0.0, 2.0);

  FlowOptions flow;
  flow.tolerance = 1e-11;
  Trajectory tr = integrate_characteristics(model, PhasePoint(1.0, 0.0), 0.0,
                                            2.0, std::vector<double>{2.0}, flow);
  AnisotropicPacket pk =
      AnisotropicPacket::from_state(tr.back(), PhasePoint(1.0, 0.0), hbar, flow);
  GridFunction gz = packet_eval(box, 1024, pk);
  CHECK(l2_distance(psi, gz) < 1e-6);

  // residual meter agrees that the model is exact
  CHECK(residual_norm(model, tr.back(), hbar, 1024, flow) < 1e-8);
}

TEST_CASE("Strang splitting is second order in dt", "[reference]") {
  double hbar = 0.2;
  Box box = box1d(-7.0, 7.0);
  QuarticAnharmonic model(1, 1.0, 0.1);
  GridFunction psi0 = coherent_state(box, 256, Vec::Constant(1, 1.0),
                                     Vec::Zero(1), hbar);
  auto solve_dt = [&](double dt) {
    SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 256, dt, hbar);
    return split_step_solve(cfg, psi0, 0.0, 1.0);
  };
  GridFunction a = solve_dt(4e-3), b = solve_dt(2e-3), c = solve_dt(1e-3);
  double e1 = l2_distance(a, b);
  double e2 = l2_distance(b, c);
  CHECK(e1 / e2 == Approx(4.0).epsilon(0.2));
}

TEST_CASE("split step guards", "[reference]") {
  FreeParticle model(1);
  Box box = box1d(-5.0, 5.0);
  SECTION("kinetic phase cap") {
    SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 1024, 0.5, 1.0);
    GridFunction psi0 = coherent_state(box, 1024, Vec::Zero(1), Vec::Zero(1), 1.0);
    CHECK_THROWS_AS(split_step_solve(cfg, psi0, 0.0, 1.0), StabilityGuardError);
  }
  SECTION("boundary mass") {
    SplitStepConfig cfg = SplitStepConfig::from_model(model, box, 128, 1e-3, 1.0);
    GridFunction psi0 = coherent_state(box, 128, Vec::Constant(1, 4.9),
                                       Vec::Zero(1), 1.0);
    CHECK_THROWS_AS(split_step_solve(cfg, psi0, 0.0, 0.5), DomainCoverageError);
  }
  SECTION("non-mechanical models are rejected") {
    class Nonmechanical final : public Hamiltonian {
     public:
      int dim() const override { return 1; }
      std::string name() const override { return "nonmech"; }
      double value(const Vec& q, const Vec& p, double) const override {
        return 0.5 * p.squaredNorm() * (1.0 + q.squaredNorm());
      }
      void gradient(const Vec& q, const Vec& p, double, Vec& dq,
                    Vec& dp) const override {
        dq = p.squaredNorm() * q;
        dp = (1.0 + q.squaredNorm()) * p;
      }
      HessianBlocks hessian(const Vec& q, const Vec& p, double) const override {
        Mat qq = p.squaredNorm() * Mat::Identity(1, 1);
        Mat qp = 2.0 * q * p.transpose();
        Mat pp = (1.0 + q.squaredNorm()) * Mat::Identity(1, 1);
        return {qq, qp, qp.transpose(), pp};
      }
    };
    Nonmechanical nm;
    CHECK_THROWS_AS(
        SplitStepConfig::from_model(nm, box, 256, 1e-3, 1.0),
        ModelEvaluationError);
  }
}

TEST_CASE("residual floor on quadratic models", "[reference]") {
  double hbar = 0.1;
  SECTION("free particle") {
    FreeParticle model(1);
    Trajectory tr = integrate_characteristics(model, PhasePoint(0.0, 1.0), 0.0,
                                              2.0, std::vector<double>{2.0});
    CHECK(residual_norm(model, tr.back(), hbar) < 1e-8);
  }
  SECTION("harmonic oscillator at several times") {
    HarmonicOscillator model(1, 1.0);
    std::vector<double> times = {0.5, 1.5, 3.0};
    Trajectory tr = integrate_characteristics(model, PhasePoint(1.0, 0.0), 0.0,
                                              3.0, times);
    for (const auto& s : tr.states())
      CHECK(residual_norm(model, s, hbar) < 1e-8);
  }
}

TEST_CASE("quartic residual scales like hbar^{3/2}", "[reference]") {
  QuarticAnharmonic model(1, 1.0, 0.1);
  Trajectory tr = integrate_characteristics(model, PhasePoint(1.0, 0.0), 0.0,
                                            0.5, std::vector<double>{0.5});
  std::vector<double> hbars = {0.4, 0.2, 0.1, 0.05};
  std::vector<double> res;
  for (double hb : hbars) res.push_back(residual_norm(model, tr.back(), hb));

  // Least-squares slope of log r against log hbar.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = static_cast<int>(hbars.size());
  for (int i = 0; i < n; ++i) {
    double lx = std::log(hbars[i]), ly = std::log(res[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope > 1.35);
  CHECK(slope < 1.65);
}
