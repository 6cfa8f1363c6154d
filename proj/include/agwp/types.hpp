#pragma once

#include <Eigen/Dense>
#include <complex>

#include "agwp/errors.hpp"

namespace agwp {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr Complex iunit{0.0, 1.0};

/// A point (q, p) of 2d-dimensional phase space.
struct PhasePoint {
  Vec q;
  Vec p;

  PhasePoint() = default;
  PhasePoint(Vec q_, Vec p_) : q(std::move(q_)), p(std::move(p_)) {
    if (q.size() != p.size() || q.size() < 1)
      throw Error("PhasePoint: q and p must have equal length d >= 1");
    if (!q.allFinite() || !p.allFinite())
      throw Error("PhasePoint: entries must be finite");
  }
  /// Convenience for d = 1.
  PhasePoint(double q_, double p_)
      : PhasePoint(Vec::Constant(1, q_), Vec::Constant(1, p_)) {}

  int dim() const { return static_cast<int>(q.size()); }

  /// Euclidean norm of the concatenated (q, p) vector.
  double radius() const { return std::sqrt(q.squaredNorm() + p.squaredNorm()); }
};

}  // namespace agwp
