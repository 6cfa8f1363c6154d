#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include "agwp/model.hpp"
#include "agwp/ode.hpp"
#include "agwp/types.hpp"

namespace agwp {

/// Trajectory sample of the characteristic system: classical point,
/// action, variational matrices, and the continuously tracked branch of
/// log det A.
struct CharacteristicState {
  double t = 0.0;
  Vec q;
  Vec p;
  double S = 0.0;
  CMat A;
  CMat B;
  Complex log_det_A{0.0, 0.0};

  int dim() const { return static_cast<int>(q.size()); }

  static CharacteristicState initial(const PhasePoint& x0, double t0) {
    CharacteristicState s;
    s.t = t0;
    s.q = x0.q;
    s.p = x0.p;
    s.S = 0.0;
    s.A = CMat::Identity(x0.dim(), x0.dim());
    s.B = iunit * CMat::Identity(x0.dim(), x0.dim());
    s.log_det_A = Complex{0.0, 0.0};
    return s;
  }
};

/// Time derivatives of every CharacteristicState field.
struct CharacteristicRates {
  Vec dq;
  Vec dp;
  double dS = 0.0;
  CMat dA;
  CMat dB;
  Complex dlog_det_A{0.0, 0.0};
};

struct FlowOptions {
  double tolerance = 1e-10;     // integrator relative tolerance
  double condition_cap = 1e8;   // cond(A) above this raises CausticProximityError
  // Per accepted step, |delta arg det A| must stay below this (branch safety).
  double max_step_rotation = std::numbers::pi / 2;
};

namespace detail {

inline Eigen::Index packed_size(int d) { return 2 * d + 1 + 4 * d * d + 2; }

inline void pack(const CharacteristicState& s, Vec& y) {
  const int d = s.dim();
  const int dd = d * d;
  y.resize(packed_size(d));
  y.segment(0, d) = s.q;
  y.segment(d, d) = s.p;
  y[2 * d] = s.S;
  Eigen::Index o = 2 * d + 1;
  Eigen::Map<Mat>(y.data() + o, d, d) = s.A.real();
  Eigen::Map<Mat>(y.data() + o + dd, d, d) = s.A.imag();
  Eigen::Map<Mat>(y.data() + o + 2 * dd, d, d) = s.B.real();
  Eigen::Map<Mat>(y.data() + o + 3 * dd, d, d) = s.B.imag();
  y[o + 4 * dd] = s.log_det_A.real();
  y[o + 4 * dd + 1] = s.log_det_A.imag();
}

inline CharacteristicState unpack(int d, double t, const Vec& y) {
  const int dd = d * d;
  CharacteristicState s;
  s.t = t;
  s.q = y.segment(0, d);
  s.p = y.segment(d, d);
  s.S = y[2 * d];
  Eigen::Index o = 2 * d + 1;
  Mat re = Eigen::Map<const Mat>(y.data() + o, d, d);
  Mat im = Eigen::Map<const Mat>(y.data() + o + dd, d, d);
  s.A = re.cast<Complex>() + iunit * im.cast<Complex>();
  re = Eigen::Map<const Mat>(y.data() + o + 2 * dd, d, d);
  im = Eigen::Map<const Mat>(y.data() + o + 3 * dd, d, d);
  s.B = re.cast<Complex>() + iunit * im.cast<Complex>();
  s.log_det_A = Complex{y[o + 4 * dd], y[o + 4 * dd + 1]};
  return s;
}

/// Frobenius-based condition estimate; cheap and adequate for d <= 3.
inline double condition_estimate(const CMat& a, const CMat& a_inv) {
  return a.norm() * a_inv.norm();
}

}  // namespace detail

/// Right-hand side of the characteristic system: Hamilton's equations,
/// the action rate p . dq/dt - H, the linear variational system, and the
/// transport identity d(log det A)/dt = tr(dA/dt A^{-1}).
inline CharacteristicRates characteristic_rhs(const Hamiltonian& model,
                                              const CharacteristicState& s,
                                              const FlowOptions& opt = {},
                                              double* cond_out = nullptr) {
  ModelEval ev = evaluate(model, PhasePoint{s.q, s.p}, s.t);
  CharacteristicRates r;
  r.dq = ev.grad_p;
  r.dp = -ev.grad_q;
  r.dS = s.p.dot(ev.grad_p) - ev.value;
  const CMat hpq = ev.hess.pq.cast<Complex>();
  const CMat hpp = ev.hess.pp.cast<Complex>();
  const CMat hqq = ev.hess.qq.cast<Complex>();
  const CMat hqp = ev.hess.qp.cast<Complex>();
  r.dA = hpq * s.A + hpp * s.B;
  r.dB = -hqq * s.A - hqp * s.B;

  Eigen::PartialPivLU<CMat> lu(s.A);
  CMat a_inv = lu.inverse();
  double cond = detail::condition_estimate(s.A, a_inv);
  if (cond_out) *cond_out = cond;
  if (!std::isfinite(cond) || cond > opt.condition_cap)
    throw CausticProximityError(
        "characteristic_rhs: cond(A) exceeds cap, branch tracking unreliable");
  r.dlog_det_A = (r.dA * a_inv).trace();
  return r;
}

/// Ordered characteristic states at the requested output times plus
/// integrator metadata. `dense` retains the accepted steps for
/// interpolation (Maslov scans, caustic refinement).
class Trajectory {
 public:
  Trajectory(int dim, std::vector<CharacteristicState> states,
             std::shared_ptr<const OdeSolution> dense, double max_cond)
      : dim_(dim),
        states_(std::move(states)),
        dense_(std::move(dense)),
        max_condition_A_(max_cond) {}

  int dim() const { return dim_; }
  const std::vector<CharacteristicState>& states() const { return states_; }
  const CharacteristicState& front() const { return states_.front(); }
  const CharacteristicState& back() const { return states_.back(); }
  std::size_t size() const { return states_.size(); }
  const CharacteristicState& operator[](std::size_t i) const {
    return states_[i];
  }

  std::int64_t accepted_steps() const { return dense_->accepted; }
  std::int64_t rejected_steps() const { return dense_->rejected; }
  double max_condition_A() const { return max_condition_A_; }

  /// Dense evaluation anywhere inside the integration interval.
  CharacteristicState at_time(double t) const {
    return detail::unpack(dim_, t, dense_->interpolate(t));
  }

 private:
  int dim_;
  std::vector<CharacteristicState> states_;
  std::shared_ptr<const OdeSolution> dense_;
  double max_condition_A_;
};

/// Integrates the characteristic system from (x0, t0) to t0 + T.
///
/// The adaptive controller additionally rejects any step that would
/// rotate arg det A by pi/2 or more, so the tracked branch of log det A
/// cannot skip a sheet. At every output time the tracked value is
/// re-anchored to the principal data of det A on the sheet selected by
/// the ODE (real part exactly, imaginary part up to the nearest 2 pi k),
/// keeping exp(log_det_A) = det A at machine precision.
inline Trajectory integrate_characteristics(const Hamiltonian& model,
                                            const PhasePoint& x0, double t0,
                                            double T,
                                            std::span<const double> output_times,
                                            const FlowOptions& opt = {}) {
  if (!(T > 0.0)) throw Error("integrate_characteristics: T must be > 0");
  if (opt.tolerance < 1e-13 || opt.tolerance > 1e-6)
    throw Error("integrate_characteristics: tolerance must lie in [1e-13, 1e-6]");
  const int d = x0.dim();
  if (model.dim() != d)
    throw Error("integrate_characteristics: model and x0 dimension mismatch");
  for (std::size_t i = 1; i < output_times.size(); ++i)
    if (!(output_times[i] > output_times[i - 1]))
      throw Error("integrate_characteristics: output times must increase strictly");

  Vec y0;
  detail::pack(CharacteristicState::initial(x0, t0), y0);

  double max_cond = 1.0;
  auto rhs = [&](double t, const Vec& y) {
    CharacteristicState s = detail::unpack(d, t, y);
    double cond = 1.0;
    CharacteristicRates r = characteristic_rhs(model, s, opt, &cond);
    max_cond = std::max(max_cond, cond);
    Vec dy(y.size());
    const int dd = d * d;
    dy.segment(0, d) = r.dq;
    dy.segment(d, d) = r.dp;
    dy[2 * d] = r.dS;
    Eigen::Index o = 2 * d + 1;
    Eigen::Map<Mat>(dy.data() + o, d, d) = r.dA.real();
    Eigen::Map<Mat>(dy.data() + o + dd, d, d) = r.dA.imag();
    Eigen::Map<Mat>(dy.data() + o + 2 * dd, d, d) = r.dB.real();
    Eigen::Map<Mat>(dy.data() + o + 3 * dd, d, d) = r.dB.imag();
    dy[o + 4 * dd] = r.dlog_det_A.real();
    dy[o + 4 * dd + 1] = r.dlog_det_A.imag();
    return dy;
  };

  const Eigen::Index ilog_im = detail::packed_size(d) - 1;
  auto branch_guard = [&](const Vec& y_old, const Vec& y_new) {
    return std::abs(y_new[ilog_im] - y_old[ilog_im]) < opt.max_step_rotation;
  };

  OdeOptions ode;
  ode.rtol = opt.tolerance;
  auto dense = std::make_shared<OdeSolution>(
      integrate_ode(rhs, std::move(y0), t0, t0 + T, output_times, ode,
                    branch_guard));

  std::vector<CharacteristicState> states;
  states.reserve(dense->times.size());
  for (std::size_t i = 0; i < dense->times.size(); ++i) {
    CharacteristicState s = detail::unpack(d, dense->times[i], dense->states[i]);
    Complex det = s.A.determinant();
    double two_pi = 2.0 * std::numbers::pi;
    double k = std::round((s.log_det_A.imag() - std::arg(det)) / two_pi);
    s.log_det_A = Complex{std::log(std::abs(det)),
                          std::arg(det) + two_pi * k};
    states.push_back(std::move(s));
  }
  return Trajectory(d, std::move(states), std::move(dense), max_cond);
}

/// Anisotropy matrix Z = B A^{-1}.
inline CMat anisotropy(const CharacteristicState& s,
                       const FlowOptions& opt = {}) {
  Eigen::PartialPivLU<CMat> lu(s.A);
  CMat a_inv = lu.inverse();
  double cond = detail::condition_estimate(s.A, a_inv);
  if (!std::isfinite(cond) || cond > opt.condition_cap)
    throw CausticProximityError("anisotropy: A numerically singular");
  return s.B * a_inv;
}

/// Amplitude a = det(A)^{-1/2} on the branch continuously connected to
/// a(t0) = 1, via the tracked log det A.
inline Complex amplitude(const CharacteristicState& s) {
  return std::exp(-0.5 * s.log_det_A);
}

/// Symplectic Jacobian of the flow map, recovered from the variational
/// matrices: dq_t/dq = Re A, dq_t/dp = Im A, dp_t/dq = Re B, dp_t/dp = Im B.
inline Mat monodromy(const CharacteristicState& s) {
  const int d = s.dim();
  Mat sigma(2 * d, 2 * d);
  sigma.topLeftCorner(d, d) = s.A.real();
  sigma.topRightCorner(d, d) = s.A.imag();
  sigma.bottomLeftCorner(d, d) = s.B.real();
  sigma.bottomRightCorner(d, d) = s.B.imag();
  return sigma;
}

}  // namespace agwp
