#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace amli {

/// Polynomial stored as monomial coefficients; coeffs[j] multiplies x^j.
/// This is the representation the multilevel solver consumes: its forward
/// sweep evaluates q(A B^{-1}) by Horner's rule directly on these numbers.
struct MonomialPoly {
  std::vector<double> coeffs;

  MonomialPoly() = default;
  explicit MonomialPoly(std::vector<double> c) : coeffs(std::move(c)) {}

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }

  /// Horner evaluation.
  double eval(double x) const;

  MonomialPoly derivative() const;
};

/// Returns p(alpha * x + beta) expanded back into monomial coefficients.
MonomialPoly compose_affine(const MonomialPoly& p, double alpha, double beta);

/// Monomial-basis degree cap. Beyond this the monomial representation loses
/// too many digits to be trustworthy; raise it explicitly if you accept that.
inline constexpr int kDegreeCap = 16;

/// Derived spectral parameters of an eigenvalue interval
/// [lambda_min, lambda_max] with 0 < lambda_min < lambda_max.
///
///   kappa = lambda_max / lambda_min
///   sigma = 1 / (lambda_max - lambda_min)
///   a     = (kappa + 1) / (kappa - 1)                  (a > 1)
///   delta = (sqrt(kappa) - 1) / (sqrt(kappa) + 1)      = a - sqrt(a^2 - 1)
///   eta   = -delta
///   chi   = 4 / (sqrt(lambda_max) + sqrt(lambda_min))^2
///
/// The affine map t = 2*sigma*x - a carries lambda_min to -1 and
/// lambda_max to +1. delta is also the classical CG convergence factor.
struct SpectralInterval {
  double lambda_min = 0;
  double lambda_max = 0;
  double kappa = 0;
  double sigma = 0;
  double a = 0;
  double delta = 0;
  double eta = 0;
  double chi = 0;
};

/// Builds a SpectralInterval; throws DegenerateIntervalError unless
/// 0 < lambda_min < lambda_max.
SpectralInterval spectral_params(double lambda_min, double lambda_max);

/// Chebyshev polynomial T_k(t) by the three-term recurrence
/// T_{k+1} = 2 t T_k - T_{k-1}. Valid for any real t; for |t| > 1 it agrees
/// with the closed form ((t + sqrt(t^2-1))^k + (t - sqrt(t^2-1))^k) / 2.
double cheb_T(int k, double t);

/// Best uniform approximation Q_m out of degree <= m polynomials to
/// 1/(t + a) on [-1, 1], a > 1, in monomial coefficients of t.
///
/// Built from the initial values
///   Q_0 = a / (a^2 - 1),   Q_1 = 1/sqrt(a^2-1) - t/(a^2-1)
/// and the three-term recurrence
///   eta^{-1} Q_{m+2} - 2 t Q_{m+1} + eta Q_m = -2,   eta = -(a - sqrt(a^2-1)).
MonomialPoly best_Q_on_reference(int m, double a, int degree_cap = kDegreeCap);

/// Best uniform approximation q_m to 1/x on [lambda_min, lambda_max],
/// q_m(x) = 2*sigma * Q_m(2*sigma*x - a), computed by the defect-correction
/// recurrence: with mu0 = 1/lambda_max, mu1 = 1/lambda_min,
///   q_0 = (mu0 + mu1)/2
///   q_1 = (sqrt(mu0) + sqrt(mu1))^2 / 2 - mu0*mu1*x
///   s_{k+1} = chi * (1 - x q_k) + delta^2 * s_k,    q_{k+1} = q_k + s_{k+1}.
MonomialPoly best_q(int m, const SpectralInterval& interval,
                    int degree_cap = kDegreeCap);

/// Evaluates q_m at x through the independent Chebyshev-sum closed form
///   Q_m(t) = -2/(eta - 1/eta) + 4/(eta - 1/eta) * sum_{j<m} eta^j T_j(t)
///            - 4 eta^{m-1}/(eta - 1/eta)^2 * T_m(t)
/// without ever forming monomial coefficients. Serves as a second
/// evaluation path against best_q.
double best_q_closed_eval(int m, const SpectralInterval& interval, double x);

/// R_{m+1}(t) = eta^{-1} T_{m+1}(t) - 2 T_m(t) + eta T_{m-1}(t), m >= 1.
/// Satisfies |R_{m+1}(t)| <= 2 (t + a) on [-1, 1].
double residual_R(int m, double a, double t);

/// Uniform-norm error of q_m on the interval: 2*sigma*delta^m / (a^2 - 1).
/// Evaluated in log space once delta^m would underflow.
double best_error(int m, const SpectralInterval& interval);

/// Same error through the square-root interval identity:
/// 2 * delta^{m-1} * E0^2 with E0 = (1/sqrt(lambda_min) - 1/sqrt(lambda_max))/2.
/// Requires m >= 1; must agree with best_error up to rounding.
double error_via_sqrt_interval(int m, const SpectralInterval& interval);

/// Degree-1 polynomial q(x) = rho0 + rho1 - rho0*rho1*x derived from the
/// degree-2 shifted/scaled Chebyshev p(x) = rho0*rho1*(1/rho0 - x)(1/rho1 - x);
/// p = 1 - x q(x) is <= 0 on [1/rho1, 1/rho0]. Requires 0 < rho0 <= rho1.
MonomialPoly cheb_accel_q(double rho0, double rho1);

/// Minimum and maximum of x * q(x) over [lo, hi]. Candidates are the interval
/// endpoints plus every real root of (x q)' found by a sign-change bracketing
/// grid of 64*degree points refined by bisection to 1e-13.
std::pair<double, double> xq_range(const MonomialPoly& q, double lo, double hi);

/// Sufficient positivity condition for q_m built on [lambda/mu, lambda]:
/// ((sqrt(mu)-1)/(sqrt(mu)+1))^m < 2/(mu - 1). When it holds, x q_m(x) > 0 on
/// the interval and hence q_m > 0 on (0, lambda].
bool positivity_holds(int m, double mu);

/// Bound on the damping factor of the polynomial smoother q_m(A) over
/// eigencomponents in [lambda/mu, lambda]:
///   rho(I - q_m(A) A) <= (mu - 1)/2 * ((sqrt(mu)-1)/(sqrt(mu)+1))^m.
double damping_bound(int m, double mu);

/// The whole family q_0 .. q_max_degree on one interval.
struct BestApproxSequence {
  SpectralInterval interval;
  std::vector<MonomialPoly> polys;  // polys[m] = q_m
  int max_degree = 0;
};

BestApproxSequence build_best_approx_sequence(const SpectralInterval& interval,
                                              int max_degree,
                                              int degree_cap = kDegreeCap);

/// One refined extremum of the approximation error 1/x - q(x).
struct ErrorExtremum {
  double x;
  double error;  // signed value of 1/x - q(x) at the extremum
};

/// Locates the local extrema of 1/x - q(x) on the interval with a dense grid
/// (default 1e5 points) and golden-section refinement. For the true best
/// approximation of degree m these are the m + 2 equioscillation points.
/// The callable variant takes err(x) directly; prefer feeding it the
/// Chebyshev-sum evaluation (best_q_closed_eval), whose rounding floor stays
/// far below the monomial representation's at higher degrees.
std::vector<ErrorExtremum> equioscillation_points(
    const std::function<double(double)>& err, const SpectralInterval& interval,
    int grid_points = 100000);
std::vector<ErrorExtremum> equioscillation_points(
    const MonomialPoly& q, const SpectralInterval& interval,
    int grid_points = 100000);

/// max |err| over the interval via the same grid-plus-refinement scan.
double scan_max_error(const std::function<double(double)>& err,
                      const SpectralInterval& interval, int grid_points = 100000);
double scan_max_error(const MonomialPoly& q, const SpectralInterval& interval,
                      int grid_points = 100000);

/// Coefficient export consumed by the CLI and the preconditioner setup:
/// {"lambda_min":..., "lambda_max":..., "degree":m, "coeffs":[...], "error":E}
std::string coeffs_to_json(const SpectralInterval& interval,
                           const MonomialPoly& q, double error);

}  // namespace amli
