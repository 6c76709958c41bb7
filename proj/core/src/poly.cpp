#include "amli/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amli/errors.hpp"
#include "amli/reports.hpp"

namespace amli {

namespace {

// q(x) -> x * q(x)
MonomialPoly shift_up(const MonomialPoly& q) {
  MonomialPoly r;
  r.coeffs.resize(q.coeffs.size() + 1, 0.0);
  for (std::size_t j = 0; j < q.coeffs.size(); ++j) r.coeffs[j + 1] = q.coeffs[j];
  return r;
}

MonomialPoly axpy_poly(double alpha, const MonomialPoly& x, const MonomialPoly& y) {
  MonomialPoly r = y;
  if (r.coeffs.size() < x.coeffs.size()) r.coeffs.resize(x.coeffs.size(), 0.0);
  for (std::size_t j = 0; j < x.coeffs.size(); ++j) r.coeffs[j] += alpha * x.coeffs[j];
  return r;
}

void check_degree_cap(int m, int degree_cap) {
  if (m > degree_cap) {
    throw Error("polynomial degree " + std::to_string(m) +
                " exceeds the monomial-basis cap " + std::to_string(degree_cap) +
                "; raise the cap explicitly if the conditioning loss is acceptable");
  }
}

// 1/x - q(x) is a difference of nearly equal numbers once q approximates
// well; evaluating it in extended precision keeps the extremum magnitudes
// meaningful down to errors near 1e-18.
long double eval_ld(const MonomialPoly& q, long double x) {
  long double r = 0.0L;
  for (std::size_t j = q.coeffs.size(); j-- > 0;) r = r * x + q.coeffs[j];
  return r;
}

double approx_error_at(const MonomialPoly& q, double x) {
  long double lx = x;
  return static_cast<double>(1.0L / lx - eval_ld(q, lx));
}

// Golden-section maximization of f over [lo, hi] (f smooth, single interior
// maximum assumed within the bracket).
template <typename F>
double golden_max(F&& f, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 90 && (b - a) > 0.0; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double MonomialPoly::eval(double x) const {
  double r = 0.0;
  for (std::size_t j = coeffs.size(); j-- > 0;) r = r * x + coeffs[j];
  return r;
}

MonomialPoly MonomialPoly::derivative() const {
  MonomialPoly d;
  if (coeffs.size() <= 1) {
    d.coeffs = {0.0};
    return d;
  }
  d.coeffs.resize(coeffs.size() - 1);
  for (std::size_t j = 1; j < coeffs.size(); ++j)
    d.coeffs[j - 1] = static_cast<double>(j) * coeffs[j];
  return d;
}

MonomialPoly compose_affine(const MonomialPoly& p, double alpha, double beta) {
  // Horner in the polynomial ring: r <- r*(alpha x + beta) + p_j.
  MonomialPoly r;
  if (p.coeffs.empty()) return r;
  r.coeffs = {p.coeffs.back()};
  for (std::size_t j = p.coeffs.size() - 1; j-- > 0;) {
    MonomialPoly next;
    next.coeffs.assign(r.coeffs.size() + 1, 0.0);
    for (std::size_t k = 0; k < r.coeffs.size(); ++k) {
      next.coeffs[k + 1] += alpha * r.coeffs[k];
      next.coeffs[k] += beta * r.coeffs[k];
    }
    next.coeffs[0] += p.coeffs[j];
    r = std::move(next);
  }
  return r;
}

SpectralInterval spectral_params(double lambda_min, double lambda_max) {
  if (!(lambda_min > 0.0) || !(lambda_max > 0.0))
    throw DegenerateIntervalError("spectral interval endpoints must be positive");
  if (!(lambda_min < lambda_max))
    throw DegenerateIntervalError("degenerate spectral interval: lambda_min >= lambda_max");
  SpectralInterval s;
  s.lambda_min = lambda_min;
  s.lambda_max = lambda_max;
  s.kappa = lambda_max / lambda_min;
  s.sigma = 1.0 / (lambda_max - lambda_min);
  s.a = (s.kappa + 1.0) / (s.kappa - 1.0);
  double rt = std::sqrt(s.kappa);
  s.delta = (rt - 1.0) / (rt + 1.0);
  s.eta = -s.delta;
  double sum_rt = std::sqrt(lambda_max) + std::sqrt(lambda_min);
  s.chi = 4.0 / (sum_rt * sum_rt);
  return s;
}

double cheb_T(int k, double t) {
  if (k < 0) k = -k;  // T_{-k} = T_k
  if (k == 0) return 1.0;
  double prev = 1.0, cur = t;
  for (int j = 1; j < k; ++j) {
    double next = 2.0 * t * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

MonomialPoly best_Q_on_reference(int m, double a, int degree_cap) {
  if (m < 0) throw Error("negative polynomial degree");
  if (!(a > 1.0)) throw DegenerateIntervalError("reference parameter a must exceed 1");
  check_degree_cap(m, degree_cap);

  double a2m1 = a * a - 1.0;
  double eta = -(a - std::sqrt(a2m1));

  MonomialPoly qm{{a / a2m1}};
  if (m == 0) return qm;
  MonomialPoly qm1{{1.0 / std::sqrt(a2m1), -1.0 / a2m1}};
  // eta^{-1} Q_{m+2} - 2 t Q_{m+1} + eta Q_m = -2
  for (int k = 2; k <= m; ++k) {
    MonomialPoly next = shift_up(qm1);                       // t * Q_{m+1}
    next = axpy_poly(-0.5 * eta, qm, next);                  // - (eta/2) Q_m
    for (double& c : next.coeffs) c *= 2.0 * eta;            // eta*(2 t Q_{m+1} - eta Q_m)
    next.coeffs[0] += -2.0 * eta;                            // + eta*(-2)
    qm = std::move(qm1);
    qm1 = std::move(next);
  }
  return qm1;
}

MonomialPoly best_q(int m, const SpectralInterval& s, int degree_cap) {
  if (m < 0) throw Error("negative polynomial degree");
  check_degree_cap(m, degree_cap);

  double mu0 = 1.0 / s.lambda_max;
  double mu1 = 1.0 / s.lambda_min;

  MonomialPoly q{{0.5 * (mu0 + mu1)}};
  if (m == 0) return q;
  double rt_sum = std::sqrt(mu0) + std::sqrt(mu1);
  MonomialPoly q1{{0.5 * rt_sum * rt_sum, -mu0 * mu1}};
  if (m == 1) return q1;

  double d2 = s.delta * s.delta;
  MonomialPoly s_corr = axpy_poly(-1.0, q, q1);  // s_1 = q_1 - q_0
  for (int k = 1; k < m; ++k) {
    // s_{k+1} = chi * (1 - x q_k) + delta^2 * s_k
    MonomialPoly resid = shift_up(q1);
    for (double& c : resid.coeffs) c = -c;
    resid.coeffs[0] += 1.0;
    MonomialPoly s_next = axpy_poly(s.chi, resid, MonomialPoly{});
    s_next = axpy_poly(d2, s_corr, s_next);
    MonomialPoly q_next = axpy_poly(1.0, s_next, q1);
    q = std::move(q1);
    q1 = std::move(q_next);
    s_corr = std::move(s_next);
  }
  return q1;
}

double best_q_closed_eval(int m, const SpectralInterval& s, double x) {
  if (m < 0) throw Error("negative polynomial degree");
  // accumulated in extended precision: this is the reference evaluation path,
  // so its rounding floor should sit well below the monomial one
  long double t = 2.0L * (long double)s.sigma * x - (long double)s.a;
  long double eta = s.eta;
  long double w = eta - 1.0L / eta;  // eta - eta^{-1} = delta^{-1} - delta > 0

  // sum_{j=0}^{m-1} eta^j T_j(t) with the running Chebyshev recurrence;
  // the loop leaves T_m behind for the trailing term.
  long double sum = 0.0L;
  long double t_prev = 1.0L;  // T_{j-1} once j >= 1
  long double t_cur = 1.0L;   // T_j, starting at T_0
  long double eta_pow = 1.0L;
  for (int j = 0; j < m; ++j) {
    sum += eta_pow * t_cur;
    eta_pow *= eta;
    long double t_next = (j == 0) ? t : 2.0L * t * t_cur - t_prev;
    t_prev = t_cur;
    t_cur = t_next;
  }
  long double tm = t_cur;  // T_m(t)
  long double eta_m1 = (m == 0) ? 1.0L / eta : powl(eta, m - 1);
  long double q = -2.0L / w + (4.0L / w) * sum - (4.0L * eta_m1 / (w * w)) * tm;
  return static_cast<double>(2.0L * (long double)s.sigma * q);
}

double residual_R(int m, double a, double t) {
  if (m < 1) throw Error("residual_R requires m >= 1");
  if (!(a > 1.0)) throw DegenerateIntervalError("reference parameter a must exceed 1");
  double eta = -(a - std::sqrt(a * a - 1.0));
  return (1.0 / eta) * cheb_T(m + 1, t) - 2.0 * cheb_T(m, t) + eta * cheb_T(m - 1, t);
}

double best_error(int m, const SpectralInterval& s) {
  if (m < 0) throw Error("negative polynomial degree");
  double a2m1 = s.a * s.a - 1.0;
  if (m > 0 && static_cast<double>(m) * std::log(s.delta) < -700.0) {
    // delta^m underflows; assemble the value in log space instead.
    double lg = std::log(2.0 * s.sigma) + m * std::log(s.delta) - std::log(a2m1);
    return std::exp(lg);
  }
  return 2.0 * s.sigma * std::pow(s.delta, m) / a2m1;
}

double error_via_sqrt_interval(int m, const SpectralInterval& s) {
  if (m < 1) throw Error("error_via_sqrt_interval requires m >= 1");
  double e0 = 0.5 * (1.0 / std::sqrt(s.lambda_min) - 1.0 / std::sqrt(s.lambda_max));
  return 2.0 * std::pow(s.delta, m - 1) * e0 * e0;
}

MonomialPoly cheb_accel_q(double rho0, double rho1) {
  if (!(rho0 > 0.0) || !(rho1 > 0.0) || !(rho0 <= rho1))
    throw DegenerateIntervalError("cheb_accel_q requires 0 < rho0 <= rho1");
  return MonomialPoly{{rho0 + rho1, -rho0 * rho1}};
}

std::pair<double, double> xq_range(const MonomialPoly& q, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > 0.0) || !(lo <= hi))
    throw DegenerateIntervalError("xq_range requires 0 < lo <= hi");

  MonomialPoly f = shift_up(q);  // x * q(x)
  if (lo == hi) {
    double v = f.eval(lo);
    return {v, v};
  }

  MonomialPoly d = f.derivative();
  std::vector<double> candidates = {lo, hi};

  int deg = std::max(1, d.degree());
  int grid = 64 * deg;
  double h = (hi - lo) / grid;
  double tol = 1e-13 * std::max(1.0, std::abs(hi));
  double prev_x = lo, prev_d = d.eval(lo);
  for (int i = 1; i <= grid; ++i) {
    double x = (i == grid) ? hi : lo + i * h;
    double dx = d.eval(x);
    if (prev_d == 0.0) candidates.push_back(prev_x);
    if (prev_d * dx < 0.0) {
      double a = prev_x, b = x, fa = prev_d;
      while (b - a > tol) {
        double c = 0.5 * (a + b);
        double fc = d.eval(c);
        if (fc == 0.0) {
          a = b = c;
          break;
        }
        if (fa * fc < 0.0) {
          b = c;
        } else {
          a = c;
          fa = fc;
        }
      }
      candidates.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_d = dx;
  }
  if (prev_d == 0.0) candidates.push_back(hi);

  double fmin = std::numeric_limits<double>::infinity();
  double fmax = -fmin;
  for (double x : candidates) {
    double v = f.eval(x);
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  return {fmin, fmax};
}

bool positivity_holds(int m, double mu) {
  if (m < 1) throw Error("positivity_holds requires m >= 1");
  if (!(mu > 1.0)) throw DegenerateIntervalError("positivity_holds requires mu > 1");
  double rt = std::sqrt(mu);
  double db = (rt - 1.0) / (rt + 1.0);
  return std::pow(db, m) < 2.0 / (mu - 1.0);
}

double damping_bound(int m, double mu) {
  if (m < 1) throw Error("damping_bound requires m >= 1");
  if (!(mu > 1.0)) throw DegenerateIntervalError("damping_bound requires mu > 1");
  double rt = std::sqrt(mu);
  double db = (rt - 1.0) / (rt + 1.0);
  return 0.5 * (mu - 1.0) * std::pow(db, m);
}

BestApproxSequence build_best_approx_sequence(const SpectralInterval& interval,
                                              int max_degree, int degree_cap) {
  check_degree_cap(max_degree, degree_cap);
  BestApproxSequence seq;
  seq.interval = interval;
  seq.max_degree = max_degree;
  seq.polys.reserve(max_degree + 1);
  for (int m = 0; m <= max_degree; ++m)
    seq.polys.push_back(best_q(m, interval, degree_cap));
  return seq;
}

std::vector<ErrorExtremum> equioscillation_points(
    const std::function<double(double)>& err, const SpectralInterval& s,
    int grid_points) {
  auto mag = [&err](double x) { return std::abs(err(x)); };

  int g = std::max(grid_points, 16);
  double lo = s.lambda_min, hi = s.lambda_max;
  double h = (hi - lo) / g;

  std::vector<double> e(g + 1);
  for (int i = 0; i <= g; ++i) e[i] = std::abs(err(i == g ? hi : lo + i * h));

  std::vector<ErrorExtremum> out;
  auto push = [&](double x) {
    if (!out.empty() && std::abs(out.back().x - x) < 0.5 * h) return;
    out.push_back({x, err(x)});
  };

  if (e[0] >= e[1]) push(lo);
  for (int i = 1; i < g; ++i) {
    if (e[i] >= e[i - 1] && e[i] >= e[i + 1] && (e[i] > e[i - 1] || e[i] > e[i + 1])) {
      double x = golden_max(mag, lo + (i - 1) * h, std::min(hi, lo + (i + 1) * h));
      push(x);
    }
  }
  if (e[g] >= e[g - 1]) push(hi);
  return out;
}

std::vector<ErrorExtremum> equioscillation_points(const MonomialPoly& q,
                                                  const SpectralInterval& s,
                                                  int grid_points) {
  return equioscillation_points(
      [&q](double x) { return approx_error_at(q, x); }, s, grid_points);
}

double scan_max_error(const std::function<double(double)>& err,
                      const SpectralInterval& s, int grid_points) {
  auto extrema = equioscillation_points(err, s, grid_points);
  double m = 0.0;
  for (const auto& ex : extrema) m = std::max(m, std::abs(ex.error));
  m = std::max({m, std::abs(err(s.lambda_min)), std::abs(err(s.lambda_max))});
  return m;
}

double scan_max_error(const MonomialPoly& q, const SpectralInterval& s,
                      int grid_points) {
  return scan_max_error([&q](double x) { return approx_error_at(q, x); }, s,
                        grid_points);
}

std::string coeffs_to_json(const SpectralInterval& interval,
                           const MonomialPoly& q, double error) {
  JsonWriter w;
  w.begin_object();
  w.key("lambda_min").value(interval.lambda_min);
  w.key("lambda_max").value(interval.lambda_max);
  w.key("degree").value(q.degree());
  w.key("coeffs").value_array(q.coeffs);
  w.key("error").value(error);
  w.end_object();
  return w.str();
}

}  // namespace amli
