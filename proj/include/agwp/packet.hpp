#pragma once

#include <cmath>
#include <numbers>

#include "agwp/flow.hpp"
#include "agwp/grid.hpp"
#include "agwp/types.hpp"

namespace agwp {

/// Full parameter set of the anisotropic Gaussian packet G^Z: centers,
/// anisotropy matrix, amplitude, action, and hbar. The static phase
/// p.q/2 always refers to the initial center.
struct AnisotropicPacket {
  double hbar = 1.0;
  PhasePoint initial_center;
  PhasePoint current_center;
  CMat Z;
  Complex a{1.0, 0.0};
  double S = 0.0;

  int dim() const { return initial_center.dim(); }

  /// Packet at t = t0: Z = i I, a = 1, S = 0, centers coincide.
  static AnisotropicPacket initial(const PhasePoint& x0, double hbar) {
    if (!(hbar > 0.0)) throw Error("AnisotropicPacket: hbar must be > 0");
    AnisotropicPacket pk;
    pk.hbar = hbar;
    pk.initial_center = x0;
    pk.current_center = x0;
    pk.Z = iunit * CMat::Identity(x0.dim(), x0.dim());
    pk.a = Complex{1.0, 0.0};
    pk.S = 0.0;
    return pk;
  }

  /// Packet carried along a characteristic trajectory sample.
  static AnisotropicPacket from_state(const CharacteristicState& s,
                                      const PhasePoint& x0, double hbar,
                                      const FlowOptions& opt = {}) {
    if (!(hbar > 0.0)) throw Error("AnisotropicPacket: hbar must be > 0");
    AnisotropicPacket pk;
    pk.hbar = hbar;
    pk.initial_center = x0;
    pk.current_center = PhasePoint{s.q, s.p};
    pk.Z = anisotropy(s, opt);
    pk.a = amplitude(s);
    pk.S = s.S;
    return pk;
  }

  /// Checks Z^T = Z, Im Z > 0, and |a|^4 = det Im Z (the norm-one
  /// compatibility of amplitude and anisotropy).
  void validate(double tol = 1e-8) const {
    if (Z.rows() != dim() || Z.cols() != dim())
      throw Error("AnisotropicPacket: Z dimension mismatch");
    double scale = std::max(1.0, Z.norm());
    if ((Z - Z.transpose()).norm() > tol * scale)
      throw SiegelViolationError("AnisotropicPacket: Z is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(Z.imag());
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw SiegelViolationError("AnisotropicPacket: Im Z not positive definite");
    double det_imZ = es.eigenvalues().prod();
    double amp4 = std::pow(std::abs(a), 4.0);
    if (std::abs(amp4 - det_imZ) > tol * std::max(1.0, det_imZ))
      throw Error("AnisotropicPacket: |a|^4 != det Im Z");
  }
};

/// Coherent state value at one point.
inline Complex coherent_state_at(const Vec& x, const Vec& q, const Vec& p,
                                 double hbar) {
  const int d = static_cast<int>(q.size());
  Vec u = x - q;
  Complex phase = p.dot(q) / 2.0 + p.dot(u) + iunit * 0.5 * u.squaredNorm();
  return std::pow(std::numbers::pi * hbar, -0.25 * d) *
         std::exp(iunit / hbar * phase);
}

/// Anisotropic packet value at one point.
inline Complex packet_eval_at(const Vec& x, const AnisotropicPacket& pk) {
  const int d = pk.dim();
  Vec u = x - pk.current_center.q;
  CVec zu = pk.Z * u.cast<Complex>();
  Complex quad{0.0, 0.0};  // (1/2) u . Z u, unconjugated bilinear form
  for (int j = 0; j < d; ++j) quad += 0.5 * u[j] * zu[j];
  Complex phase = pk.initial_center.p.dot(pk.initial_center.q) / 2.0 + pk.S +
                  pk.current_center.p.dot(u) + quad;
  return std::pow(std::numbers::pi * pk.hbar, -0.25 * d) * pk.a *
         std::exp(iunit / pk.hbar * phase);
}

/// Marginal standard deviations of |G^Z|^2 per axis:
/// sigma_j = sqrt((hbar/2) [(Im Z)^{-1}]_{jj}).
inline Vec packet_sigmas(const AnisotropicPacket& pk) {
  Mat cov = 0.5 * pk.hbar * pk.Z.imag().inverse();
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

/// Fraction of packet mass outside the box, by marginal Gaussian tails.
inline double mass_outside(const AnisotropicPacket& pk, const Box& box) {
  Vec sigma = packet_sigmas(pk);
  double total = 0.0;
  for (int j = 0; j < pk.dim(); ++j) {
    double lo_gap = (pk.current_center.q[j] - box.lo[j]) / sigma[j];
    double hi_gap = (box.hi[j] - pk.current_center.q[j]) / sigma[j];
    total += 0.5 * std::erfc(lo_gap / std::numbers::sqrt2);
    total += 0.5 * std::erfc(hi_gap / std::numbers::sqrt2);
  }
  return total;
}

/// Box placing the boundary n_sigma marginal deviations from the center.
inline Box auto_domain(const AnisotropicPacket& pk, double n_sigma = 8.0) {
  Vec sigma = packet_sigmas(pk);
  return Box::centered(pk.current_center.q, n_sigma * sigma);
}

inline Box auto_domain_coherent(const PhasePoint& x0, double hbar,
                                double n_sigma = 8.0) {
  return auto_domain(AnisotropicPacket::initial(x0, hbar), n_sigma);
}

/// Coherent state sampled on a grid.
inline GridFunction coherent_state(const Box& box, int n, const Vec& q,
                                   const Vec& p, double hbar) {
  if (!(hbar > 0.0)) throw Error("coherent_state: hbar must be > 0");
  GridFunction f(box, n);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    f.values()[i] = coherent_state_at(f.coords(i), q, p, hbar);
  return f;
}

/// Packet sampled on a grid; refuses boxes that truncate more than
/// `coverage_tol` of the packet mass.
inline GridFunction packet_eval(const Box& box, int n,
                                const AnisotropicPacket& pk,
                                double coverage_tol = 1e-8) {
  double outside = mass_outside(pk, box);
  if (outside > coverage_tol)
    throw DomainCoverageError("packet_eval: packet mass outside box = " +
                              std::to_string(outside));
  GridFunction f(box, n);
  for (Eigen::Index i = 0; i < f.size(); ++i)
    f.values()[i] = packet_eval_at(f.coords(i), pk);
  return f;
}

/// Closed-form observables of G^Z: means are the classical centers,
/// covariances come from Z alone (position (hbar/2)(Im Z)^{-1} = (hbar/2) AA*,
/// momentum (hbar/2) Z (Im Z)^{-1} Z* = (hbar/2) BB*).
struct Observables {
  Vec mean_q;
  Vec mean_p;
  Mat cov_q;
  Mat cov_p;
  Vec uncertainty_product;  // Delta q_j * Delta p_j per component
};

inline Observables observables(const AnisotropicPacket& pk) {
  Observables out;
  out.mean_q = pk.current_center.q;
  out.mean_p = pk.current_center.p;
  Mat im_inv = pk.Z.imag().inverse();
  out.cov_q = 0.5 * pk.hbar * im_inv;
  CMat bbstar = pk.Z * im_inv.cast<Complex>() * pk.Z.adjoint();
  out.cov_p = 0.5 * pk.hbar * bbstar.real();
  out.uncertainty_product =
      (out.cov_q.diagonal().array() * out.cov_p.diagonal().array())
          .sqrt()
          .matrix();
  return out;
}

}  // namespace agwp
