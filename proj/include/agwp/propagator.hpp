#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "agwp/flow.hpp"
#include "agwp/grid.hpp"
#include "agwp/packet.hpp"
#include "agwp/parallel.hpp"
#include "agwp/types.hpp"

namespace agwp {

/// Smooth radial bump: 1 on |x| <= rho - w, 0 on |x| >= rho, glued by the
/// standard exp(-1/s) partition in between. C-infinity and monotone in r.
inline double cutoff_radial(double r, double rho, double w) {
  if (!(w > 0.0) || !(w < rho)) throw Error("cutoff: need 0 < w < rho");
  if (r <= rho - w) return 1.0;
  if (r >= rho) return 0.0;
  auto glue = [](double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); };
  double up = glue((rho - r) / w);
  double down = glue((r - (rho - w)) / w);
  return up / (up + down);
}

inline double cutoff(const PhasePoint& x, double rho, double w) {
  return cutoff_radial(x.radius(), rho, w);
}

/// Uniform 2d-dimensional lattice over the cutoff ball, with the
/// midpoint-rule weight (2 pi hbar)^{-d} h_q^d h_p^d per node.
struct PhaseSpaceQuadrature {
  std::vector<PhasePoint> nodes;
  int dim = 1;              // configuration dimension d
  double h_q = 0.0;
  double h_p = 0.0;
  double rho = 0.0;
  double width = 0.0;
  double hbar = 0.0;
  int points_per_axis = 0;  // lattice extent before the ball filter
  double node_weight = 0.0;

  double cutoff_at(std::size_t i) const {
    return cutoff(nodes[i], rho, width);
  }
};

/// Lattice spacing c sqrt(hbar) per axis, covering the ball of radius rho.
inline PhaseSpaceQuadrature build_quadrature(int d, double rho, double w,
                                             double hbar, double spacing_factor,
                                             double node_cap = 1e7) {
  if (!(w > 0.0) || !(w < rho)) throw Error("build_quadrature: need 0 < w < rho");
  if (!(hbar > 0.0)) throw Error("build_quadrature: hbar must be > 0");
  if (!(spacing_factor > 0.0))
    throw Error("build_quadrature: spacing factor must be > 0");

  PhaseSpaceQuadrature quad;
  quad.dim = d;
  quad.rho = rho;
  quad.width = w;
  quad.hbar = hbar;
  quad.h_q = quad.h_p = spacing_factor * std::sqrt(hbar);
  const int K = static_cast<int>(std::ceil(rho / quad.h_q - 1e-12));
  quad.points_per_axis = 2 * K + 1;
  quad.node_weight = std::pow(quad.h_q, d) * std::pow(quad.h_p, d) *
                     std::pow(2.0 * std::numbers::pi * hbar, -d);

  double full = std::pow(static_cast<double>(quad.points_per_axis), 2 * d);
  if (full > node_cap)
    throw BudgetExceededError("build_quadrature: lattice of " +
                              std::to_string(full) + " nodes exceeds cap");

  // Odometer over the 2d lattice axes; nodes outside the ball carry zero
  // cutoff and are dropped.
  std::vector<int> idx(2 * d, -K);
  Vec point(2 * d);
  for (;;) {
    for (int a = 0; a < 2 * d; ++a) point[a] = idx[a] * quad.h_q;
    if (point.norm() <= rho + 1e-12) {
      Vec q = point.head(d), p = point.tail(d);
      quad.nodes.emplace_back(q, p);
    }
    int a = 2 * d - 1;
    while (a >= 0 && ++idx[a] > K) idx[a--] = -K;
    if (a < 0) break;
  }
  if (static_cast<double>(quad.nodes.size()) > node_cap)
    throw BudgetExceededError("build_quadrature: node count exceeds cap");
  return quad;
}

/// Shared trajectory cache for one (model, t0, t, quadrature) choice.
/// Node trajectories are classical and hbar-independent, so one context
/// serves every hbar at equal times; packets are formed per call.
class PropagatorContext {
 public:
  PropagatorContext(const Hamiltonian& model, PhaseSpaceQuadrature quad,
                    double t0, double t, FlowOptions flow = {})
      : model_(model),
        quad_(std::move(quad)),
        t0_(t0),
        t_(t),
        flow_(flow),
        states_(quad_.nodes.size()) {
    if (t_ < t0_) throw Error("PropagatorContext: t must be >= t0");
  }

  const PhaseSpaceQuadrature& quadrature() const { return quad_; }
  double t0() const { return t0_; }
  double t() const { return t_; }
  std::size_t node_count() const { return quad_.nodes.size(); }

  /// Integrates every node trajectory that is not cached yet.
  void prefetch(int jobs = default_jobs()) {
    parallel_for(node_count(), jobs, [this](std::size_t i) { node_state(i); });
  }

  const CharacteristicState& node_state(std::size_t i) {
    if (!states_[i]) {
      CharacteristicState s;
      if (t_ <= t0_ + 1e-15) {
        s = CharacteristicState::initial(quad_.nodes[i], t0_);
      } else {
        try {
          Trajectory tr =
              integrate_characteristics(model_, quad_.nodes[i], t0_, t_ - t0_,
                                        std::vector<double>{t_}, flow_);
          s = tr.back();
        } catch (const Error& e) {
          throw Error("propagator node " + std::to_string(i) + " at (q,p)=(" +
                      std::to_string(quad_.nodes[i].q[0]) + ",...): " +
                      e.what());
        }
      }
      states_[i] = std::make_unique<CharacteristicState>(std::move(s));
    }
    return *states_[i];
  }

  AnisotropicPacket node_packet(std::size_t i, double hbar) {
    return AnisotropicPacket::from_state(node_state(i), quad_.nodes[i], hbar,
                                         flow_);
  }

 private:
  const Hamiltonian& model_;
  PhaseSpaceQuadrature quad_;
  double t0_;
  double t_;
  FlowOptions flow_;
  std::vector<std::unique_ptr<CharacteristicState>> states_;
};

inline constexpr int reduction_partitions = 64;

/// Cutoff-kernel value K^Z_chi(x, y): discrete phase-space sum of
/// conj(G_(q,p))(y) G^Z_(q,p)(x, t) over the lattice.
inline Complex kernel_quadrature(PropagatorContext& ctx, const Vec& x,
                                 const Vec& y, double hbar,
                                 int jobs = default_jobs()) {
  ctx.prefetch(jobs);
  const PhaseSpaceQuadrature& quad = ctx.quadrature();
  auto acc = [&](Complex& sum, std::size_t i) {
    double chi = quad.cutoff_at(i);
    if (chi == 0.0) return;
    AnisotropicPacket pk = ctx.node_packet(i, hbar);
    Complex frame = coherent_state_at(y, quad.nodes[i].q, quad.nodes[i].p, hbar);
    sum += quad.node_weight * chi * std::conj(frame) * packet_eval_at(x, pk);
  };
  return partitioned_reduce<Complex>(
      ctx.node_count(), reduction_partitions, jobs, Complex{0.0, 0.0}, acc,
      [](Complex& a, const Complex& b) { a += b; });
}

/// U^Z applied to a grid state: psi(t) = sum_nodes w chi <G_(q,p), psi0>
/// G^Z_(q,p)(., t). The node sum uses the deterministic partition tree, so
/// results are bit-for-bit reproducible at a fixed partition count.
inline GridFunction propagate_state(PropagatorContext& ctx,
                                    const GridFunction& psi0, double hbar,
                                    int jobs = default_jobs(),
                                    std::vector<std::string>* warnings = nullptr,
                                    double coverage_tol = 1e-6) {
  double norm0 = psi0.norm();
  if (std::abs(norm0 - 1.0) > 1e-6 && warnings)
    warnings->push_back("propagate_state: input norm " + std::to_string(norm0) +
                        " deviates from 1");
  ctx.prefetch(jobs);
  const PhaseSpaceQuadrature& quad = ctx.quadrature();
  const std::size_t count = ctx.node_count();

  // Frame coefficients.
  std::vector<Complex> coeff(count, Complex{0.0, 0.0});
  parallel_for(count, jobs, [&](std::size_t i) {
    double chi = quad.cutoff_at(i);
    if (chi == 0.0) return;
    GridFunction frame(psi0.box(), psi0.points_per_axis());
    for (Eigen::Index k = 0; k < frame.size(); ++k)
      frame.values()[k] =
          coherent_state_at(frame.coords(k), quad.nodes[i].q, quad.nodes[i].p,
                            hbar);
    coeff[i] = quad.node_weight * chi * overlap(frame, psi0);
  });

  // Coverage: amplitude-weighted escaped mass over all contributing nodes.
  // Individually negligible packets may spill; the sum must stay below the
  // output-state tolerance.
  double escaped = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    double c = std::abs(coeff[i]);
    if (c == 0.0) continue;
    AnisotropicPacket pk = ctx.node_packet(i, hbar);
    escaped += c * std::sqrt(std::min(1.0, mass_outside(pk, psi0.box())));
  }
  if (escaped > coverage_tol)
    throw DomainCoverageError(
        "propagate_state: propagated mass escapes the output grid "
        "(amplitude-weighted escape " +
        std::to_string(escaped) + ")");

  auto acc = [&](CVec& sum, std::size_t i) {
    if (coeff[i] == Complex{0.0, 0.0}) return;
    AnisotropicPacket pk = ctx.node_packet(i, hbar);
    GridFunction probe(psi0.box(), psi0.points_per_axis());
    for (Eigen::Index k = 0; k < probe.size(); ++k)
      sum[k] += coeff[i] * packet_eval_at(probe.coords(k), pk);
  };
  CVec values = partitioned_reduce<CVec>(
      count, reduction_partitions, jobs, CVec::Zero(psi0.size()).eval(), acc,
      [](CVec& a, const CVec& b) { a += b; });

  GridFunction out(psi0.box(), psi0.points_per_axis());
  out.values() = std::move(values);
  return out;
}

}  // namespace agwp
