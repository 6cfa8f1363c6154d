#pragma once

#include <cmath>
#include <random>

#include "agwp/types.hpp"

namespace agwp {

/// Frobenius-norm residuals of the variational-matrix relations, the
/// Siegel half-space conditions on Z = B A^{-1}, and the determinant
/// identity. Residuals are raw norms of the defining expressions;
/// `scale` is the natural operand magnitude for forming relative errors.
struct RelationReport {
  double symmetry = 0.0;      // ||A^T B - B^T A||
  double poisson_qp = 0.0;    // ||conj(A) B^T - A conj(B)^T - 2i I||
  double poisson_qq = 0.0;    // ||A conj(A)^T - conj(A) A^T||
  double poisson_pp = 0.0;    // ||B conj(B)^T - conj(B) B^T||
  double lagrange = 0.0;      // ||A* B - B* A - 2i I||
  double scale = 1.0;

  // Entries below require invertible A; z_defined flags availability.
  bool z_defined = false;
  double imZ_A = 0.0;         // ||Im Z - (A A*)^{-1}||
  double imZinv_B = 0.0;      // ||Im(-Z^{-1}) - (B B*)^{-1}||
  double siegel_sym = 0.0;    // ||Z - Z^T||
  double siegel_pos = 0.0;    // min eigenvalue of Im Z (sign is the verdict)
  double det_identity = 0.0;  // | |det A|^{-1/2} - (det Im Z)^{1/4} |

  double max_residual() const {
    double m = std::max({symmetry, poisson_qp, poisson_qq, poisson_pp,
                         lagrange});
    if (z_defined)
      m = std::max({m, imZ_A, imZinv_B, siegel_sym, det_identity});
    return m;
  }
  double max_relative_residual() const { return max_residual() / scale; }
};

/// Evaluates every relation residual for a pair of variational matrices.
/// Works on arbitrary complex square inputs; nothing is assumed beyond
/// equal dimensions.
inline RelationReport relation_residuals(const CMat& A, const CMat& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw Error("relation_residuals: A, B must be square of equal size");
  const int d = static_cast<int>(A.rows());
  const CMat I = CMat::Identity(d, d);
  const CMat twoI = 2.0 * iunit * I;

  RelationReport rep;
  rep.symmetry = (A.transpose() * B - B.transpose() * A).norm();
  rep.poisson_qp =
      (A.conjugate() * B.transpose() - A * B.adjoint() - twoI).norm();
  rep.poisson_qq = (A * A.adjoint() - A.conjugate() * A.transpose()).norm();
  rep.poisson_pp = (B * B.adjoint() - B.conjugate() * B.transpose()).norm();
  rep.lagrange = (A.adjoint() * B - B.adjoint() * A - twoI).norm();
  rep.scale = std::max(1.0, A.norm() * B.norm());

  Eigen::JacobiSVD<CMat> svd(A);
  double smin = svd.singularValues().minCoeff();
  double smax = svd.singularValues().maxCoeff();
  if (smin <= 1e-12 * std::max(1.0, smax)) return rep;  // Z entries omitted

  rep.z_defined = true;
  CMat Ainv = A.inverse();
  CMat Z = B * Ainv;
  Mat imZ = Z.imag();
  rep.siegel_sym = (Z - Z.transpose()).norm();
  rep.imZ_A = (imZ.cast<Complex>() - (A * A.adjoint()).inverse()).norm();
  // Sign convention: for Z in the Siegel half-space, -Z^{-1} is the element
  // whose imaginary part equals (B B*)^{-1}.
  CMat Zinv = Z.inverse();
  rep.imZinv_B =
      ((-Zinv).imag().cast<Complex>() - (B * B.adjoint()).inverse()).norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (imZ + imZ.transpose()));
  rep.siegel_pos = es.eigenvalues().minCoeff();
  double det_imZ = es.eigenvalues().prod();
  double abs_detA = std::abs(A.determinant());
  rep.det_identity =
      std::abs(1.0 / std::sqrt(abs_detA) -
               std::pow(std::max(det_imZ, 0.0), 0.25));
  return rep;
}

/// Canonical (gauge-fixed) variational matrices of an anisotropy matrix:
/// A = (Im Z)^{-1/2} is the unique positive-definite square root,
/// B = Z A. The pair reproduces Z = B A^{-1} and Im Z = (A A*)^{-1}.
inline std::pair<CMat, CMat> square_root_correspondence(const CMat& Z) {
  if (Z.rows() != Z.cols())
    throw SiegelViolationError("square_root_correspondence: Z must be square");
  double sym = (Z - Z.transpose()).norm();
  if (sym > 1e-10 * std::max(1.0, Z.norm()))
    throw SiegelViolationError(
        "square_root_correspondence: Z is not symmetric");
  Mat imZ = 0.5 * (Z.imag() + Z.imag().transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(imZ);
  if (es.eigenvalues().minCoeff() <= 1e-10)
    throw SiegelViolationError(
        "square_root_correspondence: Im Z is not positive definite");
  Mat inv_sqrt = es.operatorInverseSqrt();
  CMat A = inv_sqrt.cast<Complex>();
  CMat B = Z * A;
  return {std::move(A), std::move(B)};
}

struct GaugeCheck {
  double z_residual = 0.0;  // ||Z(AU, BU) - Z(A, B)||
  double a_residual = 0.0;  // |(det AU)^{-1/2} - (det A)^{-1/2}|, same branch
};

namespace detail {

inline void require_special_unitary(const CMat& U, double tol) {
  const int d = static_cast<int>(U.rows());
  if (U.rows() != U.cols()) throw NotUnitaryError("U must be square");
  double unit = (U.adjoint() * U - CMat::Identity(d, d)).norm();
  if (unit > tol) throw NotUnitaryError("U*U deviates from identity");
  if (std::abs(U.determinant() - Complex{1.0, 0.0}) > tol)
    throw NotUnitaryError("det U deviates from 1");
}

}  // namespace detail

/// Residuals of the right SU(d) gauge action (A, B) -> (AU, BU): both
/// the anisotropy matrix and the amplitude must be invariant.
inline GaugeCheck gauge_orbit_check(const CMat& A, const CMat& B,
                                    const CMat& U) {
  detail::require_special_unitary(U, 1e-12);
  GaugeCheck out;
  CMat Z = B * A.inverse();
  CMat AU = A * U;
  CMat BU = B * U;
  out.z_residual = (BU * AU.inverse() - Z).norm();
  // (det AU)^{-1/2} / (det A)^{-1/2} = (det U)^{-1/2} with det U ~ 1, so the
  // principal branch of the ratio compares the two amplitudes on the same
  // sheet regardless of where arg det A sits.
  Complex ratio = std::pow(U.determinant(), -0.5);
  double amp = 1.0 / std::sqrt(std::abs(A.determinant()));
  out.a_residual = amp * std::abs(ratio - 1.0);
  return out;
}

/// Haar-ish random SU(d) element: complex Ginibre sample, QR
/// orthonormalization with positive diagonal, determinant phase spread
/// evenly over the columns. Deterministic per seed.
inline CMat random_special_unitary(int d, std::uint64_t seed) {
  if (d < 1) throw Error("random_special_unitary: d must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMat G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = Complex{gauss(rng), gauss(rng)};
  Eigen::HouseholderQR<CMat> qr(G);
  CMat Q = qr.householderQ();
  CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    Complex r = R(j, j);
    Q.col(j) *= (r == Complex{0.0, 0.0}) ? 1.0 : r / std::abs(r);
  }
  Complex det = Q.determinant();
  Q *= std::exp(-iunit * std::arg(det) / static_cast<double>(d));
  return Q;
}

}  // namespace agwp
