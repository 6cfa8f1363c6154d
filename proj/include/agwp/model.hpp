#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "agwp/types.hpp"

namespace agwp {

/// Second derivatives of H at a phase-space point, split into the four
/// d x d blocks. (H_pq)_{jk} = d^2 H / dp_j dq_k, so H_pq = H_qp^T.
struct HessianBlocks {
  Mat qq;
  Mat qp;
  Mat pq;
  Mat pp;
};

/// Mechanical decomposition H = |p|^2 / (2m) + V(q, t). Only models that
/// expose it are admissible to the split-step reference solver.
struct MechanicalForm {
  double mass = 1.0;
  std::function<double(const Vec&, double)> potential;
};

/// Hamiltonian interface: value, gradient, and Hessian blocks at a
/// phase-space point and time. Implementations must be pure functions of
/// (q, p, t) and safe to call concurrently.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  virtual double value(const Vec& q, const Vec& p, double t) const = 0;
  virtual void gradient(const Vec& q, const Vec& p, double t, Vec& dq,
                        Vec& dp) const = 0;
  virtual HessianBlocks hessian(const Vec& q, const Vec& p, double t) const = 0;

  /// Optional capability; empty for non-mechanical Hamiltonians.
  virtual std::optional<MechanicalForm> mechanical_form() const {
    return std::nullopt;
  }

  /// True when H depends on t explicitly (drives per-step potential
  /// resampling in the split-step solver).
  virtual bool time_dependent() const { return false; }
};

/// Bundled evaluation of value, gradient, and Hessian blocks in one call.
struct ModelEval {
  double value = 0.0;
  Vec grad_q;
  Vec grad_p;
  HessianBlocks hess;
};

namespace detail {

inline void require_finite(const Mat& m, const char* what) {
  if (!m.allFinite())
    throw ModelEvaluationError(std::string("non-finite ") + what);
}

inline void require_symmetric(const Mat& m, const Mat& mt, const char* what) {
  double scale = std::max(1.0, m.norm());
  if ((m - mt).norm() > 1e-12 * scale)
    throw ModelEvaluationError(std::string("Hessian block symmetry violated: ") +
                               what);
}

}  // namespace detail

/// Evaluates all derivative data at once and enforces the HessianBlocks
/// invariants (finiteness, H_qq = H_qq^T, H_pp = H_pp^T, H_pq = H_qp^T).
inline ModelEval evaluate(const Hamiltonian& model, const PhasePoint& x,
                          double t) {
  ModelEval out;
  out.value = model.value(x.q, x.p, t);
  if (!std::isfinite(out.value))
    throw ModelEvaluationError("non-finite Hamiltonian value");
  model.gradient(x.q, x.p, t, out.grad_q, out.grad_p);
  if (!out.grad_q.allFinite()) throw ModelEvaluationError("non-finite H_q");
  if (!out.grad_p.allFinite()) throw ModelEvaluationError("non-finite H_p");
  out.hess = model.hessian(x.q, x.p, t);
  detail::require_finite(out.hess.qq, "H_qq");
  detail::require_finite(out.hess.qp, "H_qp");
  detail::require_finite(out.hess.pq, "H_pq");
  detail::require_finite(out.hess.pp, "H_pp");
  detail::require_symmetric(out.hess.qq, out.hess.qq.transpose(), "H_qq");
  detail::require_symmetric(out.hess.pp, out.hess.pp.transpose(), "H_pp");
  detail::require_symmetric(out.hess.pq, out.hess.qp.transpose(),
                            "H_pq = H_qp^T");
  return out;
}

/// H = |p|^2 / (2m).
class FreeParticle final : public Hamiltonian {
 public:
  explicit FreeParticle(int dim, double mass = 1.0) : d_(dim), m_(mass) {}

  int dim() const override { return d_; }
  std::string name() const override { return "free_particle"; }

  double value(const Vec&, const Vec& p, double) const override {
    return p.squaredNorm() / (2.0 * m_);
  }
  void gradient(const Vec& q, const Vec& p, double, Vec& dq,
                Vec& dp) const override {
    dq = Vec::Zero(q.size());
    dp = p / m_;
  }
  HessianBlocks hessian(const Vec&, const Vec&, double) const override {
    return {Mat::Zero(d_, d_), Mat::Zero(d_, d_), Mat::Zero(d_, d_),
            Mat::Identity(d_, d_) / m_};
  }
  std::optional<MechanicalForm> mechanical_form() const override {
    return MechanicalForm{m_, [](const Vec&, double) { return 0.0; }};
  }

 private:
  int d_;
  double m_;
};

/// H = |p|^2 / (2m) + (1/2) q . Omega2 q with Omega2 symmetric positive.
class HarmonicOscillator final : public Hamiltonian {
 public:
  HarmonicOscillator(Mat omega2, double mass = 1.0)
      : omega2_(std::move(omega2)), m_(mass) {
    if (omega2_.rows() != omega2_.cols())
      throw Error("HarmonicOscillator: Omega2 must be square");
    if ((omega2_ - omega2_.transpose()).norm() >
        1e-12 * std::max(1.0, omega2_.norm()))
      throw Error("HarmonicOscillator: Omega2 must be symmetric");
  }
  /// Isotropic convenience: Omega2 = omega2 * I.
  HarmonicOscillator(int dim, double omega2, double mass = 1.0)
      : HarmonicOscillator(Mat::Identity(dim, dim) * omega2, mass) {}

  int dim() const override { return static_cast<int>(omega2_.rows()); }
  std::string name() const override { return "harmonic_oscillator"; }

  double value(const Vec& q, const Vec& p, double) const override {
    return p.squaredNorm() / (2.0 * m_) + 0.5 * q.dot(omega2_ * q);
  }
  void gradient(const Vec& q, const Vec& p, double, Vec& dq,
                Vec& dp) const override {
    dq = omega2_ * q;
    dp = p / m_;
  }
  HessianBlocks hessian(const Vec&, const Vec&, double) const override {
    int d = dim();
    return {omega2_, Mat::Zero(d, d), Mat::Zero(d, d),
            Mat::Identity(d, d) / m_};
  }
  std::optional<MechanicalForm> mechanical_form() const override {
    Mat w = omega2_;
    return MechanicalForm{
        m_, [w](const Vec& q, double) { return 0.5 * q.dot(w * q); }};
  }

 private:
  Mat omega2_;
  double m_;
};

/// H = |p|^2 / 2 + omega2 |q|^2 / 2 + lambda sum_j q_j^4.
class QuarticAnharmonic final : public Hamiltonian {
 public:
  QuarticAnharmonic(int dim, double omega2, double lambda)
      : d_(dim), omega2_(omega2), lambda_(lambda) {}

  int dim() const override { return d_; }
  std::string name() const override { return "quartic_anharmonic"; }

  double value(const Vec& q, const Vec& p, double) const override {
    return 0.5 * p.squaredNorm() + 0.5 * omega2_ * q.squaredNorm() +
           lambda_ * q.array().pow(4).sum();
  }
  void gradient(const Vec& q, const Vec& p, double, Vec& dq,
                Vec& dp) const override {
    dq = omega2_ * q + 4.0 * lambda_ * q.array().pow(3).matrix();
    dp = p;
  }
  HessianBlocks hessian(const Vec& q, const Vec&, double) const override {
    Mat qq = Mat::Identity(d_, d_) * omega2_;
    qq.diagonal() += 12.0 * lambda_ * q.array().square().matrix();
    return {std::move(qq), Mat::Zero(d_, d_), Mat::Zero(d_, d_),
            Mat::Identity(d_, d_)};
  }
  std::optional<MechanicalForm> mechanical_form() const override {
    double w = omega2_, l = lambda_;
    return MechanicalForm{1.0, [w, l](const Vec& q, double) {
                            return 0.5 * w * q.squaredNorm() +
                                   l * q.array().pow(4).sum();
                          }};
  }

 private:
  int d_;
  double omega2_;
  double lambda_;
};

/// H = |p|^2 / 2 + omega2 |q|^2 / 2 - f0 cos(nu t) sum_j q_j.
class DrivenOscillator final : public Hamiltonian {
 public:
  DrivenOscillator(int dim, double omega2, double f0, double nu)
      : d_(dim), omega2_(omega2), f0_(f0), nu_(nu) {}

  int dim() const override { return d_; }
  std::string name() const override { return "driven_oscillator"; }

  double value(const Vec& q, const Vec& p, double t) const override {
    return 0.5 * p.squaredNorm() + 0.5 * omega2_ * q.squaredNorm() -
           f0_ * std::cos(nu_ * t) * q.sum();
  }
  void gradient(const Vec& q, const Vec& p, double t, Vec& dq,
                Vec& dp) const override {
    dq = omega2_ * q - Vec::Constant(d_, f0_ * std::cos(nu_ * t));
    dp = p;
  }
  HessianBlocks hessian(const Vec&, const Vec&, double) const override {
    return {Mat::Identity(d_, d_) * omega2_, Mat::Zero(d_, d_),
            Mat::Zero(d_, d_), Mat::Identity(d_, d_)};
  }
  std::optional<MechanicalForm> mechanical_form() const override {
    double w = omega2_, f0 = f0_, nu = nu_;
    return MechanicalForm{1.0, [w, f0, nu](const Vec& q, double t) {
                            return 0.5 * w * q.squaredNorm() -
                                   f0 * std::cos(nu * t) * q.sum();
                          }};
  }
  bool time_dependent() const override { return f0_ != 0.0; }

 private:
  int d_;
  double omega2_;
  double f0_;
  double nu_;
};

/// Max relative deviation between analytic derivatives and central
/// differences. Reports only; guards user-supplied models.
struct AuditReport {
  double gradient_residual = 0.0;  // analytic gradient vs differenced value
  double hessian_residual = 0.0;   // analytic Hessian vs differenced gradient

  double max_residual() const {
    return std::max(gradient_residual, hessian_residual);
  }
};

inline AuditReport finite_difference_audit(const Hamiltonian& model,
                                           const PhasePoint& x, double t,
                                           double step) {
  if (!(step > 0.0)) throw Error("finite_difference_audit: step must be > 0");
  const int d = x.dim();
  ModelEval ev = evaluate(model, x, t);

  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
  };

  AuditReport rep;
  Vec gq(d), gp(d);
  Mat hqq(d, d), hqp(d, d), hpq(d, d), hpp(d, d);
  for (int j = 0; j < d; ++j) {
    Vec qp_ = x.q, qm = x.q, pp_ = x.p, pm = x.p;
    qp_[j] += step;
    qm[j] -= step;
    pp_[j] += step;
    pm[j] -= step;

    gq[j] = (model.value(qp_, x.p, t) - model.value(qm, x.p, t)) / (2 * step);
    gp[j] = (model.value(x.q, pp_, t) - model.value(x.q, pm, t)) / (2 * step);

    Vec dq1, dp1, dq2, dp2;
    model.gradient(qp_, x.p, t, dq1, dp1);
    model.gradient(qm, x.p, t, dq2, dp2);
    hqq.col(j) = (dq1 - dq2) / (2 * step);   // d H_q / d q_j
    hpq.row(j) = ((dp1 - dp2) / (2 * step)).transpose();  // d H_p / d q_j

    model.gradient(x.q, pp_, t, dq1, dp1);
    model.gradient(x.q, pm, t, dq2, dp2);
    hqp.col(j).noalias() = (dq1 - dq2) / (2 * step);  // d H_q / d p_j
    hpp.col(j) = (dp1 - dp2) / (2 * step);
  }
  for (int j = 0; j < d; ++j) {
    rep.gradient_residual = std::max(rep.gradient_residual,
                                     std::max(rel(ev.grad_q[j], gq[j]),
                                              rel(ev.grad_p[j], gp[j])));
  }
  // (hpq)_{jk} as filled above holds d(H_p)_k / d q_j = (H_pq)_{kj}.
  Mat hpq_fd = hpq.transpose();
  Mat hqp_fd = hqp;  // col j = d H_q / d p_j, so (hqp_fd)_{jk} = d2H/dq_j dp_k
  auto mrel = [&](const Mat& got, const Mat& want) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.norm());
  };
  rep.hessian_residual =
      std::max({mrel(ev.hess.qq, hqq), mrel(ev.hess.pp, hpp),
                mrel(ev.hess.qp, hqp_fd), mrel(ev.hess.pq, hpq_fd)});
  return rep;
}

}  // namespace agwp
