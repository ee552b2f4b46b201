#pragma once

#include <functional>
#include <vector>

#include "nhmp/geometry.hpp"

namespace nhmp {

/// Unit covector (intrinsic coordinates) annihilating the span of all flag
/// words of length <= level at `at`. The sign makes it positive on
/// `transversal` (intrinsic coordinates) when given, otherwise on the
/// coordinate direction where it is largest.
/// Throws NotCorankOne when the span does not have codimension 1.
Vec annihilator_form(const ControlFrame& system, const Vec& at, int level,
                     const Vec* transversal = nullptr, const RankOptions& opts = {});

struct CurvatureMatrix {
  Eigen::Matrix2d A;
  double symmetry_defect = 0.0;  // |A12 - A21|
};

/// A_ij = omega([F_j, B_i]) with B_1 = [F1,[F1,F2]], B_2 = [F2,[F1,F2]] and
/// omega the level-3 annihilator.
CurvatureMatrix curvature_matrix_A(const ControlFrame& system, const Vec& at, double h = 1e-4);

/// Eigenvalue ratio lambda_small / lambda_large (ordered by modulus) of the
/// symmetric part of A; lies in [-1, 1]. Throws DomainError when both
/// eigenvalues are below 1e-10.
double eigen_ratio_r(const Eigen::Matrix2d& A);

/// Contact invariant chi(t) = |omega([F1,F2])| with omega(Delta) = 0 and
/// omega(Gamma') = 1. Returns +infinity where Gamma' is tangent to Delta.
double chi_contact(const ControlFrame& system, const Curve& gamma, double t, double h = 1e-4);

struct ChiResult {
  double chi = 0.0;
  Vec lambda_star;
  Mat principal_plane;  // p x 2, orthonormal columns
};

/// chi = inf over lambda of the spectral norm of A0 + sum lambda_i A_i
/// (at most two parameters), by Nelder-Mead restarted from a coarse grid.
/// Throws DomainError for non-skew input or when the infimum escapes to
/// |lambda| > 1e6 (degenerate family).
ChiResult chi_corank_le3(const std::vector<Mat>& family);

struct ZeroCrossing {
  double t = 0.0;
  double rho = 0.0;  // |d chi / dt| at the zero
};

/// Zeros of sampled chi values (sign changes, or local minima below
/// tol * max|chi| for non-negative samples), with rho from one-sided
/// differences on both sides.
std::vector<ZeroCrossing> find_chi_zeros(const std::vector<double>& t, const std::vector<double>& chi,
                                         double tol = 1e-6);

/// One row of an invariant report along a curve.
struct InvariantSample {
  double t = 0.0;
  double chi = 0.0;
  Vec lambda_star;
  Mat principal_plane;
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  double r = 0.0;
  double rho = 0.0;
};

}  // namespace nhmp
