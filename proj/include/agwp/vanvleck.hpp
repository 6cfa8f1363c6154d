#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "agwp/flow.hpp"
#include "agwp/propagator.hpp"
#include "agwp/types.hpp"

namespace agwp {

enum class MaslovMethod {
  crossing_count,  // zeros of det dq_t/dp counted with multiplicity (default)
  eigenphase,      // round(sum_lambda Arg(lambda) / pi) on A^{-1} (Im A)^{-1}
};

struct MaslovOptions {
  MaslovMethod method = MaslovMethod::crossing_count;
  int scan_points = 2000;
  double sv_threshold = 1e-6;     // singular values below this count as crossing
  double touch_threshold = 1e-3;  // |det| dip that triggers touch refinement
};

/// One admissible classical orbit joining (y, t0) to (x, t).
struct VanVleckBranch {
  Vec p_r;                  // initial momentum
  double S_r = 0.0;         // action along the branch
  double amp_det = 0.0;     // |det dp/dq_t| = 1 / |det dq_t/dp| at the root
  int maslov = 0;
  CharacteristicState final_state;
  double cutoff_value = 1.0;  // chi at (y, p_r) when a cutoff is supplied
  int newton_iterations = 0;
  double boundary_residual = 0.0;  // |q_t - x| at convergence
};

struct ShootingOptions {
  Box search_box;  // momentum-space box for the multistart seeds
  int n_starts = 32;
  double tol = 1e-10;
  int max_newton_iterations = 60;
  std::uint64_t seed = 0;
  FlowOptions flow{};
  double dedup_factor = 10.0;   // merge roots with |dp| < dedup_factor * tol
  double caustic_tol = 1e-8;    // sigma_min(Im A) threshold at a root
  std::optional<std::pair<double, double>> cutoff;  // (rho, w)
  bool compute_maslov = true;
  MaslovOptions maslov{};
  int jobs = 1;  // Newton starts run concurrently; dedup stays sequential
};

namespace detail {

/// Halton points with a seeded Cranley-Patterson rotation: deterministic,
/// low-discrepancy, and distinct per seed.
inline std::vector<Vec> scrambled_halton(const Box& box, int count,
                                         std::uint64_t seed) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  const int d = box.dim();
  if (d > 8) throw Error("scrambled_halton: dimension too large");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec shift(d);
  for (int j = 0; j < d; ++j) shift[j] = u01(rng);

  std::vector<Vec> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec x(d);
    for (int j = 0; j < d; ++j) {
      double f = 1.0, r = 0.0;
      int idx = i + 1;
      while (idx > 0) {
        f /= primes[j];
        r += f * (idx % primes[j]);
        idx /= primes[j];
      }
      double v = r + shift[j];
      v -= std::floor(v);
      x[j] = box.lo[j] + v * (box.hi[j] - box.lo[j]);
    }
    points.push_back(std::move(x));
  }
  return points;
}

struct ShotResult {
  CharacteristicState state;
  Vec residual;   // q_t - x
  Mat jacobian;   // dq_t/dp = Im A
};

inline ShotResult shoot(const Hamiltonian& model, const Vec& y, const Vec& p,
                        const Vec& x, double t0, double t,
                        const FlowOptions& flow) {
  Trajectory tr = integrate_characteristics(model, PhasePoint{y, p}, t0,
                                            t - t0, std::vector<double>{t},
                                            flow);
  ShotResult r;
  r.state = tr.back();
  r.residual = r.state.q - x;
  r.jacobian = r.state.A.imag();
  return r;
}

}  // namespace detail

/// Maslov index by caustic-crossing counting: zeros of det dq_t/dp(tau) on
/// (t0, t], each counted with the dimension of the kernel at the crossing.
/// Sign changes are bisected on the dense (Hermite) trajectory; touches
/// without sign change (even multiplicity) are found as deep local minima
/// of |det| and confirmed by singular-value counting.
inline int maslov_index(const Hamiltonian& model, const Vec& y, const Vec& p_r,
                        double t0, double t, const FlowOptions& flow = {},
                        const MaslovOptions& opt = {}) {
  const int M = opt.scan_points;
  std::vector<double> scan(M);
  for (int k = 1; k <= M; ++k)
    scan[k - 1] = t0 + (t - t0) * static_cast<double>(k) / M;
  Trajectory tr = integrate_characteristics(model, PhasePoint{y, p_r}, t0,
                                            t - t0, scan, flow);

  std::vector<double> g(M);
  double scale = 0.0;
  for (int k = 0; k < M; ++k) {
    g[k] = tr[k].A.imag().determinant();
    scale = std::max(scale, std::abs(g[k]));
  }
  if (scale == 0.0)
    throw UnresolvedCrossingError("maslov_index: det dq_t/dp vanishes identically");

  auto det_at = [&](double tau) {
    return tr.at_time(tau).A.imag().determinant();
  };
  auto multiplicity_at = [&](double tau) {
    Eigen::JacobiSVD<CMat> svd(tr.at_time(tau).A.imag().cast<Complex>());
    Vec sv = svd.singularValues();
    double smax = std::max(1.0, sv.maxCoeff());
    int mult = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] < opt.sv_threshold * smax) ++mult;
    return mult;
  };

  int total = 0;
  for (int k = 1; k < M; ++k) {
    double a = scan[k - 1], b = scan[k];
    double ga = g[k - 1], gb = g[k];
    if (ga == 0.0) continue;  // counted by the interval ending at a
    bool sign_change = (ga < 0.0) != (gb < 0.0);
    if (sign_change) {
      for (int it = 0; it < 80 && (b - a) > 1e-15 * (t - t0); ++it) {
        double mid = 0.5 * (a + b);
        double gm = det_at(mid);
        if ((ga < 0.0) != (gm < 0.0))
          b = mid;
        else {
          a = mid;
          ga = gm;
        }
      }
      int mult = multiplicity_at(0.5 * (a + b));
      if (mult == 0)
        throw UnresolvedCrossingError(
            "maslov_index: sign change without a resolvable kernel at tau=" +
            std::to_string(0.5 * (a + b)));
      total += mult;
    } else if (k + 1 < M) {
      // Candidate touch: interior local minimum of |det| dipping well below
      // the trajectory scale.
      double gc = g[k + 1];
      if (std::abs(gb) < std::abs(ga) && std::abs(gb) <= std::abs(gc) &&
          std::abs(gb) < opt.touch_threshold * scale) {
        double lo = a, hi = scan[k + 1];
        for (int it = 0; it < 200 && (hi - lo) > 1e-14 * (t - t0); ++it) {
          double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
          if (std::abs(det_at(m1)) < std::abs(det_at(m2)))
            hi = m2;
          else
            lo = m1;
        }
        int mult = multiplicity_at(0.5 * (lo + hi));
        total += mult;  // zero multiplicity: benign dip, not a caustic
        // Skip the partner interval so the same minimum is not re-examined.
        ++k;
      }
    }
  }
  return total;
}

/// The eigenphase reading of the index formula: sum of principal
/// arguments of the spectrum of A^{-1} (Im A)^{-1} at the endpoint,
/// divided by pi and rounded. Exposed for comparison; the printed formula
/// is not consistent with crossing counting on the quadratic models, so
/// crossing_count is the default everywhere.
inline int maslov_index_eigenphase(const CharacteristicState& s) {
  CMat m = s.A.inverse() * s.A.imag().cast<Complex>().inverse();
  Eigen::ComplexEigenSolver<CMat> es(m);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    sum += std::arg(es.eigenvalues()[i]);
  return static_cast<int>(std::lround(sum / std::numbers::pi));
}

/// Multistart damped-Newton shooting for all initial momenta p with
/// q_t(y, p) = x, deduplicated and sorted by |p_r|.
inline std::vector<VanVleckBranch> find_branches(const Hamiltonian& model,
                                                 const Vec& y, const Vec& x,
                                                 double t0, double t,
                                                 const ShootingOptions& opt) {
  if (!(t > t0)) throw Error("find_branches: need t > t0");
  opt.search_box.validate();
  if (opt.search_box.dim() != model.dim())
    throw Error("find_branches: search box dimension mismatch");

  const double f_tol = opt.tol * (1.0 + x.norm());
  std::vector<Vec> seeds =
      detail::scrambled_halton(opt.search_box, opt.n_starts, opt.seed);

  // Starts are independent trajectories and run concurrently; results land
  // in per-seed slots so the dedup pass below stays deterministic.
  std::vector<std::optional<Vec>> found(seeds.size());
  std::vector<int> found_iters(seeds.size(), 0);
  parallel_for(seeds.size(), opt.jobs, [&](std::size_t si) {
    Vec p = seeds[si];
    bool ok = false;
    int iters = 0;
    try {
      detail::ShotResult shot = detail::shoot(model, y, p, x, t0, t, opt.flow);
      for (; iters < opt.max_newton_iterations; ++iters) {
        double fnorm = shot.residual.norm();
        if (fnorm <= f_tol) {
          ok = true;
          break;
        }
        Vec delta = shot.jacobian.partialPivLu().solve(-shot.residual);
        if (!delta.allFinite()) return;
        // Backtracking line search on |F|.
        double lambda = 1.0;
        bool advanced = false;
        for (int bt = 0; bt < 12; ++bt) {
          Vec p_trial = p + lambda * delta;
          detail::ShotResult trial =
              detail::shoot(model, y, p_trial, x, t0, t, opt.flow);
          if (trial.residual.norm() < (1.0 - 1e-4 * lambda) * fnorm) {
            p = std::move(p_trial);
            shot = std::move(trial);
            advanced = true;
            break;
          }
          lambda *= 0.5;
        }
        if (!advanced) return;
      }
      if (ok) {
        // Two undamped polish steps push p to machine accuracy, making the
        // momentum-space dedup threshold meaningful.
        for (int polish = 0; polish < 2; ++polish) {
          Vec delta = shot.jacobian.partialPivLu().solve(-shot.residual);
          if (!delta.allFinite()) break;
          Vec p_trial = p + delta;
          detail::ShotResult trial =
              detail::shoot(model, y, p_trial, x, t0, t, opt.flow);
          if (trial.residual.norm() <= shot.residual.norm()) {
            p = std::move(p_trial);
            shot = std::move(trial);
          }
        }
        found[si] = std::move(p);
        found_iters[si] = iters;
      }
    } catch (const CausticProximityError&) {
      // this start ran into degenerate variational data
    } catch (const StepSizeUnderflow&) {
    }
  });

  std::vector<Vec> converged;
  std::vector<int> iterations;
  for (std::size_t si = 0; si < found.size(); ++si)
    if (found[si]) {
      converged.push_back(std::move(*found[si]));
      iterations.push_back(found_iters[si]);
    }

  if (converged.empty())
    throw NoBranchFoundError(
        "find_branches: no start converged; the search box may be too small");

  // Deduplicate in momentum space, sequential post-pass for determinism.
  std::vector<std::size_t> order(converged.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (converged[a].norm() != converged[b].norm())
      return converged[a].norm() < converged[b].norm();
    return a < b;
  });
  std::vector<Vec> unique_p;
  std::vector<int> unique_iters;
  for (std::size_t idx : order) {
    bool dup = false;
    for (const Vec& u : unique_p)
      if ((converged[idx] - u).norm() < opt.dedup_factor * opt.tol) {
        dup = true;
        break;
      }
    if (!dup) {
      unique_p.push_back(converged[idx]);
      unique_iters.push_back(iterations[idx]);
    }
  }

  std::vector<VanVleckBranch> branches;
  for (std::size_t i = 0; i < unique_p.size(); ++i) {
    detail::ShotResult shot =
        detail::shoot(model, y, unique_p[i], x, t0, t, opt.flow);
    Eigen::JacobiSVD<Mat> svd(shot.jacobian);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin <= opt.caustic_tol * std::max(1.0, smax))
      throw CausticAtRootError(
          "find_branches: singular dq_t/dp at a converged root (caustic)");

    VanVleckBranch br;
    br.p_r = unique_p[i];
    br.S_r = shot.state.S;
    br.amp_det = 1.0 / std::abs(shot.jacobian.determinant());
    br.final_state = shot.state;
    br.newton_iterations = unique_iters[i];
    br.boundary_residual = shot.residual.norm();
    if (opt.cutoff) {
      br.cutoff_value =
          cutoff(PhasePoint{y, br.p_r}, opt.cutoff->first, opt.cutoff->second);
    }
    if (opt.compute_maslov) {
      if (opt.maslov.method == MaslovMethod::crossing_count)
        br.maslov = maslov_index(model, y, br.p_r, t0, t, opt.flow, opt.maslov);
      else
        br.maslov = maslov_index_eigenphase(shot.state);
    }
    branches.push_back(std::move(br));
  }
  return branches;
}

/// Van Vleck kernel sum over branches:
/// (2 pi i hbar)^{-d/2} sum_r sqrt(amp_det_r) exp(i S_r / hbar - i pi m_r / 2),
/// with the prefactor on the principal branch, i^{-d/2} = exp(-i pi d / 4).
inline Complex vanvleck_kernel(const std::vector<VanVleckBranch>& branches,
                               int d, double hbar) {
  Complex prefactor =
      std::pow(2.0 * std::numbers::pi * hbar, -0.5 * d) *
      std::exp(-iunit * std::numbers::pi * static_cast<double>(d) / 4.0);
  Complex sum{0.0, 0.0};
  for (const VanVleckBranch& br : branches) {
    sum += std::sqrt(br.amp_det) *
           std::exp(iunit * br.S_r / hbar -
                    iunit * std::numbers::pi * 0.5 * static_cast<double>(br.maslov));
  }
  return prefactor * sum;
}

}  // namespace agwp
