#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "agwp/types.hpp"

namespace agwp {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 0.0;  // 0 -> derived as 1e-3 * rtol
  double safety = 0.9;
  double min_factor = 0.2;
  double max_factor = 5.0;
  std::int64_t max_steps = 20'000'000;

  double absolute_tol() const { return atol > 0.0 ? atol : 1e-3 * rtol; }
};

/// One accepted step with endpoint derivatives, enough for cubic Hermite
/// interpolation anywhere inside it.
struct OdeStep {
  double t0, t1;
  Vec y0, y1, f0, f1;
};

struct OdeSolution {
  std::vector<double> times;  // requested output times
  std::vector<Vec> states;    // solution at those times
  std::vector<OdeStep> steps; // all accepted steps, in order
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;

  /// Cubic Hermite interpolation on the accepted step containing t.
  Vec interpolate(double t) const {
    if (steps.empty()) throw Error("OdeSolution::interpolate: no steps");
    auto it = std::lower_bound(
        steps.begin(), steps.end(), t,
        [](const OdeStep& s, double tt) { return s.t1 < tt; });
    if (it == steps.end()) it = std::prev(steps.end());
    const OdeStep& s = *it;
    double h = s.t1 - s.t0;
    double th = std::clamp((t - s.t0) / h, 0.0, 1.0);
    double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    double h10 = th * (1 - th) * (1 - th);
    double h01 = th * th * (3 - 2 * th);
    double h11 = th * th * (th - 1);
    return h00 * s.y0 + (h10 * h) * s.f0 + h01 * s.y1 + (h11 * h) * s.f1;
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double dp_c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0, 1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
inline constexpr double dp_e[7] = {71.0 / 57600,      0.0,
                                   -71.0 / 16695,     71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525,
                                   -1.0 / 40};

}  // namespace detail

/// Adaptive embedded RK5(4). The integrator lands exactly on every
/// requested output time by clipping steps, so output states carry no
/// interpolation error; `steps` additionally supports dense evaluation.
///
/// `guard(y_old, y_new)` may veto an otherwise accepted step (used for the
/// branch-safety bound on the rotation of arg det A); a vetoed step is
/// retried at half size.
template <class Rhs, class Guard>
OdeSolution integrate_ode(Rhs&& rhs, Vec y0, double t0, double t_end,
                          std::span<const double> output_times,
                          const OdeOptions& opt, Guard&& guard) {
  const double atol = opt.absolute_tol();
  const double span = t_end - t0;
  if (!(span > 0.0)) throw Error("integrate_ode: t_end must exceed t0");
  for (std::size_t i = 0; i < output_times.size(); ++i) {
    double tt = output_times[i];
    if (tt < t0 - 1e-12 || tt > t_end + 1e-12 * std::max(1.0, std::abs(t_end)))
      throw Error("integrate_ode: output time outside [t0, t_end]");
    if (i > 0 && tt < output_times[i - 1])
      throw Error("integrate_ode: output times must be non-decreasing");
  }

  OdeSolution sol;
  sol.times.assign(output_times.begin(), output_times.end());
  sol.states.resize(sol.times.size());
  std::size_t next_out = 0;

  double t = t0;
  Vec y = std::move(y0);
  Vec f = rhs(t, y);
  const Eigen::Index n = y.size();

  auto emit = [&](double tt, const Vec& yy) {
    while (next_out < sol.times.size() &&
           sol.times[next_out] <= tt + 1e-12 * std::max(1.0, std::abs(tt))) {
      sol.states[next_out] = yy;
      ++next_out;
    }
  };
  emit(t, y);

  // Hairer-style first step guess from error-scaled magnitudes.
  double d0 = 0.0, d1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sc = atol + opt.rtol * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1 += (f[i] / sc) * (f[i] / sc);
  }
  d0 = std::sqrt(d0 / n);
  d1 = std::sqrt(d1 / n);
  double dt_ctrl = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-4 * span;
  dt_ctrl = std::clamp(dt_ctrl, 1e-10 * span, span / 10.0);

  const double dt_floor = 1e-14 * std::max(1.0, std::abs(span));
  std::array<Vec, 7> k;

  while (t < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
    if (sol.accepted + sol.rejected > opt.max_steps)
      throw StepSizeUnderflow("integrate_ode: step budget exhausted");

    double t_target = t_end;
    if (next_out < sol.times.size())
      t_target = std::min(t_target, sol.times[next_out]);
    bool clipped = 1.01 * dt_ctrl >= t_target - t;  // stretch to land exactly
    double dt = clipped ? t_target - t : dt_ctrl;
    if (dt < dt_floor)
      throw StepSizeUnderflow("integrate_ode: step size underflow");

    k[0] = f;
    Vec ytmp;
    for (int s = 1; s < 7; ++s) {
      ytmp = y;
      for (int j = 0; j < s; ++j)
        if (detail::dp_a[s][j] != 0.0) ytmp += (dt * detail::dp_a[s][j]) * k[j];
      k[s] = rhs(t + detail::dp_c[s] * dt, ytmp);
    }
    // k[6] is the FSAL derivative at the 5th-order solution ytmp.
    Vec y_new = std::move(ytmp);
    Vec err = Vec::Zero(n);
    for (int s = 0; s < 7; ++s)
      if (detail::dp_e[s] != 0.0) err += (dt * detail::dp_e[s]) * k[s];

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc = atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      double e = err[i] / sc;
      err_norm += e * e;
    }
    err_norm = std::sqrt(err_norm / static_cast<double>(n));

    if (err_norm <= 1.0 && guard(y, y_new)) {
      double t_new = clipped ? t_target : t + dt;
      sol.steps.push_back({t, t_new, y, y_new, k[0], k[6]});
      ++sol.accepted;
      t = t_new;
      y = std::move(y_new);
      f = std::move(k[6]);
      emit(t, y);
      double factor = err_norm == 0.0
                          ? opt.max_factor
                          : std::clamp(opt.safety * std::pow(err_norm, -0.2),
                                       opt.min_factor, opt.max_factor);
      // Keep the controller's preferred step across output-time clips.
      dt_ctrl = std::max(dt * factor, clipped ? dt_ctrl : 0.0);
    } else if (err_norm <= 1.0) {
      ++sol.rejected;  // guard veto
      dt_ctrl = 0.5 * dt;
    } else {
      ++sol.rejected;
      dt_ctrl = dt * std::clamp(opt.safety * std::pow(err_norm, -0.2),
                                opt.min_factor, 1.0);
    }
  }
  emit(t_end + 1e-9 * std::max(1.0, std::abs(t_end)), y);
  if (next_out < sol.times.size())
    throw Error("integrate_ode: missed an output time");
  return sol;
}

template <class Rhs>
OdeSolution integrate_ode(Rhs&& rhs, Vec y0, double t0, double t_end,
                          std::span<const double> output_times,
                          const OdeOptions& opt) {
  return integrate_ode(std::forward<Rhs>(rhs), std::move(y0), t0, t_end,
                       output_times, opt,
                       [](const Vec&, const Vec&) { return true; });
}

}  // namespace agwp
