#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amli/hierarchy.hpp"
#include "amli/poly.hpp"
#include "amli/precond.hpp"
#include "amli/sparse.hpp"

namespace amli {

struct LevelBound {
  double theta0 = 1.0, theta1 = 1.0;
  double rho0 = 1.0, rho1 = 1.0;  // equivalence bounds after this level
  double r0 = 1.0, r1 = 1.0;      // range of x q(x) on the incoming interval
};

struct BoundReport {
  std::vector<LevelBound> levels;            // one entry per level 1..l
  double rho0_stationary = 1.0, rho1_stationary = 1.0;
  double kappa_trajectory = 1.0;             // rho1^(l) / rho0^(l)
  double kappa_stationary = 1.0;                // theorem form at the stationary pair
  double final_kappa_bound = 1.0;            // what callers should compare against
  bool uniform = false;                      // a finite stationary pair exists
};

struct LevelStepResult {
  double rho0 = 1.0, rho1 = 1.0;
  double r0 = 1.0, r1 = 1.0;
};

/// One induction step of the level recursion: given the equivalence bounds
/// (rho0, rho1) of the preconditioner below and this level's approximation
/// constants, computes (r0, r1) = range of x q(x) over [1/rho1, 1/rho0] and
///   rho0_k = theta0 / max{1, r1},   rho1_k = theta1 / min{1, r0}.
/// Requires q >= 0 on the interval (checked by dense sampling); violation
/// raises NegativePolynomialError.
LevelStepResult level_step(double theta0, double theta1,
                           std::pair<double, double> rho_prev, const MonomialPoly& q,
                           int positivity_samples = 10000);

/// Runs the recursion from (1, 1) through all levels, then continues it to
/// its fixed point with the worst-case theta pair. When the continuation
/// converges the bound is level-count independent and final_kappa_bound is
/// the stationary ratio; otherwise it is the level-l trajectory value.
BoundReport multilevel_bound(const std::vector<std::pair<double, double>>& thetas,
                             const CycleSpec& cycle, int degree_cap = kDegreeCap);

/// Smallest polynomial degree m that certifies the target condition number
/// kappa_bar given approximation constants (theta0, theta1):
///   m >= log(2 (ku-1) / ((kappa_bar-1)(ku+1))) / log(delta_bar),
/// ku = kappa_bar * theta0/theta1, delta_bar = (sqrt(kappa_bar)-1)/(sqrt(kappa_bar)+1).
/// Throws InfeasibleTargetError when ku <= 1.
int required_degree(double theta0, double theta1, double kappa_bar);

/// Bound (2 + delta^m (kappa-1)) / (2 - delta^m (kappa-1)) on the ratio
/// r1/r0 of the best-approximation family; +inf once the denominator closes.
double maxovermin_ratio_bound(int m, double kappa);

/// Largest theta1/theta0 for which the degree-1 Chebyshev family keeps the
/// bound uniform at kappa_bar: 4 kappa_bar^2 / (1 + kappa_bar)^2.
double cheb_uniformity_threshold(double kappa_bar);

/// Same for the best-approximation family (linear case):
/// kappa_bar (1 + 2 sqrt(kappa_bar) - kappa_bar) / (3 - 2 sqrt(kappa_bar) + kappa_bar).
double bestapprox_uniformity_threshold(double kappa_bar);

struct MeasureOptions {
  int dense_limit = 200;  // up to this dimension use dense eigensolvers
  int lanczos_iters = 120;
  std::uint64_t seed = 42;
};

/// Extreme generalized eigenvalues of v^T C v / v^T A v: dense solve below
/// the dense limit, otherwise Lanczos on L^{-1} C L^{-T} with A = L L^T.
std::pair<double, double> measure_theta(const CsrMatrix& a, const LinOp& c_apply,
                                        const MeasureOptions& opts = {});

/// Approximation-property constants of level k's two-level matrix
///   C = [[C11, At12], [At21, A_coarse + At21 C11^{-1} At12]]
/// against the hierarchical-basis matrix Atilde of the same level.
std::pair<double, double> measure_level_theta(const Hierarchy& h, int k,
                                              const MeasureOptions& opts = {});

std::vector<std::pair<double, double>> measure_hierarchy_thetas(
    const Hierarchy& h, const MeasureOptions& opts = {});

/// kappa(B^{-1} A): dense below the limit, otherwise Lanczos on B^{-1}A in
/// the A-inner product (estimates approach the true value from below).
double measure_condition(const LinOp& b_inv, const CsrMatrix& a,
                         const MeasureOptions& opts = {});

struct IdentityCheck {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_pass = true;
};

/// Dense verification battery over randomized SPD instances: polynomial
/// recurrence/closed-form/product identities, the coarse-polynomial
/// commutation identity, the error-propagation factorization, symmetrized
/// smoother forms, SPD of the assembled multilevel operator, and bound
/// soundness at desk scale. `perturbation` shifts one Horner coefficient in
/// the error-propagation check and must break it (negative control).
IdentityReport verify_identities(int n, std::uint64_t seed, double perturbation = 0.0);

}  // namespace amli
