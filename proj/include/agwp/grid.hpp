#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "agwp/types.hpp"

namespace agwp {

/// Axis-aligned configuration-space box.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() < 1)
      throw Error("Box: lo and hi must have equal positive length");
    for (int j = 0; j < dim(); ++j)
      if (!(hi[j] > lo[j])) throw Error("Box: hi must exceed lo on every axis");
  }

  static Box centered(const Vec& center, const Vec& half_width) {
    Box b{center - half_width, center + half_width};
    b.validate();
    return b;
  }
};

/// Complex function sampled on a uniform rectangular grid with n points
/// per axis (power of two), periodic convention x_j = lo + j h with
/// h = (hi - lo) / n. On this grid the trapezoidal rule for decayed or
/// periodic data is the plain scaled sum.
class GridFunction {
 public:
  GridFunction(Box box, int n) : box_(std::move(box)), n_(n) {
    box_.validate();
    if (n_ < 2 || (n_ & (n_ - 1)) != 0)
      throw Error("GridFunction: n must be a power of two >= 2");
    Eigen::Index total = 1;
    for (int j = 0; j < box_.dim(); ++j) total *= n_;
    values_ = CVec::Zero(total);
  }

  int dim() const { return box_.dim(); }
  int points_per_axis() const { return n_; }
  const Box& box() const { return box_; }
  Eigen::Index size() const { return values_.size(); }

  double spacing(int axis) const {
    return (box_.hi[axis] - box_.lo[axis]) / n_;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int j = 0; j < dim(); ++j) v *= spacing(j);
    return v;
  }

  CVec& values() { return values_; }
  const CVec& values() const { return values_; }

  /// Decodes a flat row-major index (last axis fastest) to coordinates.
  Vec coords(Eigen::Index flat) const {
    const int d = dim();
    Vec x(d);
    for (int j = d - 1; j >= 0; --j) {
      Eigen::Index i = flat % n_;
      flat /= n_;
      x[j] = box_.lo[j] + static_cast<double>(i) * spacing(j);
    }
    return x;
  }

  double coord(int axis, Eigen::Index idx) const {
    return box_.lo[axis] + static_cast<double>(idx) * spacing(axis);
  }

  double norm() const { return std::sqrt(cell_volume() * values_.squaredNorm()); }

  void normalize() {
    double n = norm();
    if (n > 0.0) values_ /= n;
  }

  bool same_grid(const GridFunction& other) const {
    return n_ == other.n_ && dim() == other.dim() &&
           (box_.lo - other.box_.lo).norm() <= 1e-12 &&
           (box_.hi - other.box_.hi).norm() <= 1e-12;
  }

 private:
  Box box_;
  int n_;
  CVec values_;
};

/// Trapezoidal inner product, conjugate-linear in the first argument.
inline Complex overlap(const GridFunction& f, const GridFunction& g) {
  if (!f.same_grid(g)) throw GridMismatchError("overlap: grids differ");
  return f.cell_volume() * f.values().dot(g.values());
}

}  // namespace agwp
