#include "amli/precond.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "amli/errors.hpp"
#include "amli/vec.hpp"

namespace amli {

std::vector<double> symmetrized_smoother_apply(const Smoother& m, const CsrMatrix& a,
                                               std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.rows())
    throw DimensionError("symmetrized smoother dimension mismatch");
  std::vector<double> y(x.size()), r(x.size()), out(x.size());
  m.solve(x, y);
  spmv(a, y, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] - r[i];
  m.solve_transpose(r, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return out;
}

std::vector<double> amli_coarse_stabilize(const LinOp& bh_inv, const LinOp& ah,
                                          const MonomialPoly& q,
                                          std::span<const double> r) {
  if (q.coeffs.empty()) throw Error("amli_coarse_stabilize: empty polynomial");
  std::vector<double> u = horner_matrix_apply(q, ah, bh_inv, r);
  std::vector<double> out(u.size());
  bh_inv(u, out);
  return out;
}

// --- two-level preconditioner ----------------------------------------------

TwoLevel::TwoLevel(TwoLevelConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.a == nullptr) throw ConfigError("two-level config lacks a matrix");
  pt_ = transpose(cfg_.p);
  ah_ = galerkin_coarse(*cfg_.a, cfg_.p);
  if (cfg_.coarse == CoarseKind::ExactSolve) {
    ah_factor_ = DenseFactor::factor(ah_);
  } else if (!cfg_.bh_inv) {
    throw ConfigError("two-level config needs a coarse preconditioner action");
  }
  if (cfg_.coarse == CoarseKind::Stabilized && cfg_.q.coeffs.empty())
    throw ConfigError("stabilized coarse solve needs polynomial coefficients");
}

std::vector<double> TwoLevel::coarse_solve(std::span<const double> rh) const {
  switch (cfg_.coarse) {
    case CoarseKind::ExactSolve:
      return ah_factor_.solve(rh);
    case CoarseKind::InitialBh: {
      std::vector<double> out(rh.size());
      cfg_.bh_inv(rh, out);
      return out;
    }
    case CoarseKind::Stabilized:
      return amli_coarse_stabilize(cfg_.bh_inv, csr_op(ah_), cfg_.q, rh);
  }
  throw ConfigError("unknown coarse kind");
}

std::vector<double> TwoLevel::apply(std::span<const double> x) const {
  const CsrMatrix& a = *cfg_.a;
  if (static_cast<int>(x.size()) != a.rows())
    throw DimensionError("two-level apply dimension mismatch");

  // pre-smoothing
  std::vector<double> y(x.size());
  cfg_.m.solve(x, y);

  // coarse grid correction
  std::vector<double> r = spmv(a, y);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] - r[i];
  std::vector<double> rh(cfg_.p.cols());
  spmv(pt_, r, rh);
  std::vector<double> eh = coarse_solve(rh);
  std::vector<double> z(x.size());
  spmv(cfg_.p, eh, z);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];

  // post-smoothing
  std::vector<double> az = spmv(a, z);
  for (std::size_t i = 0; i < az.size(); ++i) az[i] = x[i] - az[i];
  std::vector<double> out(x.size());
  cfg_.m.solve_transpose(az, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i];
  return out;
}

LinOp TwoLevel::op() const {
  return [this](std::span<const double> x, std::span<double> y) {
    auto r = apply(x);
    copy(r, y);
  };
}

// --- multilevel engine -------------------------------------------------------

void AmliWorkspace::resize(const Hierarchy& h, int top_level) {
  int l = top_level;
  d.resize(l);
  v.resize(l);
  w.resize(l);
  v1.resize(l);
  sigma.assign(l + 1, 0);
  for (int k = 1; k <= l; ++k) {
    const Level& lv = h.levels[k - 1];
    d[k - 1].resize(lv.n);
    v[k - 1].resize(lv.n);
    w[k - 1].resize(lv.n_coarse);
    v1[k - 1].resize(lv.n_fine);
  }
  d0.resize(h.coarse_a.rows());
  v0.resize(h.coarse_a.rows());
  std::size_t smax = h.coarse_a.rows();
  for (const Level& lv : h.levels) smax = std::max<std::size_t>(smax, lv.n);
  s1.resize(smax);
  s2.resize(smax);
  coarse_solves = 0;
}

namespace {

// d*[perm[i]] = d[i]; the fine-first relabeling applied with J^T
void scatter(std::span<const double> x, std::span<const int> perm, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[perm[i]] = x[i];
}

void gather(std::span<const double> x, std::span<const int> perm, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[perm[i]];
}

}  // namespace

void amli_apply(const Hierarchy& h, int top_level, std::span<const double> d_in,
                std::span<double> out, AmliWorkspace& ws) {
  int l = top_level;
  if (l < 1 || l > h.num_levels()) throw DimensionError("bad top level");
  if (static_cast<int>(d_in.size()) != h.levels[l - 1].n ||
      d_in.size() != out.size())
    throw DimensionError("amli_apply dimension mismatch");

  ws.resize(h, l);
  auto& D = ws.d;
  auto& V = ws.v;
  auto& W = ws.w;
  auto& V1 = ws.v1;

  copy(d_in, D[l - 1]);
  int k = l;

forward:
  ws.sigma[k] += 1;
  {
    const Level& lv = h.levels[k - 1];
    if (ws.sigma[k] == 1) {
      // d <- J^T d : relabel fine-first, then add W^T d1 into the coarse block
      std::span<double> ff(ws.s1.data(), lv.n);
      scatter(D[k - 1], lv.perm, ff);
      std::span<double> d1 = ff.subspan(0, lv.n_fine);
      std::span<double> d2 = ff.subspan(lv.n_fine, lv.n_coarse);
      {
        std::span<double> wtd1(ws.s2.data(), lv.n_coarse);
        spmv(lv.wt, d1, wtd1);
        for (int i = 0; i < lv.n_coarse; ++i) d2[i] += wtd1[i];
      }

      lv.c11.solve(d1, V1[k - 1]);
      spmv(lv.at21, V1[k - 1], W[k - 1]);
      for (int i = 0; i < lv.n_coarse; ++i) W[k - 1][i] = d2[i] - W[k - 1][i];

      if (lv.exact_z) {
        // direct inversion of the coarse matrix replaces the polynomial
        const DenseFactor& f = (k == 1) ? h.coarse_factor : h.exact_factors[k - 1];
        std::vector<double>& v2 = (k == 1) ? ws.v0 : V[k - 2];
        v2 = f.solve(W[k - 1]);
        ws.coarse_solves += (k == 1) ? 1 : 0;
        goto correct;
      }

      std::vector<double>& dnext = (k == 1) ? ws.d0 : D[k - 2];
      double a_lead = lv.q.coeffs[lv.nu - 1];
      for (int i = 0; i < lv.n_coarse; ++i) dnext[i] = a_lead * W[k - 1][i];
    } else {
      // Horner step: d^{(k-1)} = A^{(k-1)} v^{(k-1)} + a_{nu-sigma} w^{(k-1)}
      const CsrMatrix& ac = (k == 1) ? h.coarse_a : h.levels[k - 2].a;
      std::vector<double>& vbelow = (k == 1) ? ws.v0 : V[k - 2];
      std::vector<double>& dnext = (k == 1) ? ws.d0 : D[k - 2];
      std::span<double> av(ws.s2.data(), lv.n_coarse);
      spmv(ac, vbelow, av);
      double aj = lv.q.coeffs[lv.nu - ws.sigma[k]];
      for (int i = 0; i < lv.n_coarse; ++i) dnext[i] = av[i] + aj * W[k - 1][i];
    }
  }
  k -= 1;
  if (k > 0) goto forward;

  ws.v0 = h.coarse_factor.solve(ws.d0);
  ws.coarse_solves += 1;

backward:
  k += 1;
  if (ws.sigma[k] < h.levels[k - 1].nu) goto forward;

correct : {
  const Level& lv = h.levels[k - 1];
  const std::vector<double>& v2 = (k == 1) ? ws.v0 : V[k - 2];

  // v1 -= C11^{-1} (At12 v2)
  std::span<double> t1(ws.s1.data(), lv.n_fine);
  std::span<double> t2(ws.s2.data(), lv.n_fine);
  spmv(lv.at12, v2, t1);
  lv.c11.solve(t1, t2);
  for (int i = 0; i < lv.n_fine; ++i) V1[k - 1][i] -= t2[i];

  // v <- J v : fine block gains W v2, then relabel back to natural order
  std::span<double> ff(ws.s1.data(), lv.n);
  spmv(lv.w, v2, ff.subspan(0, lv.n_fine));
  for (int i = 0; i < lv.n_fine; ++i) ff[i] += V1[k - 1][i];
  for (int i = 0; i < lv.n_coarse; ++i) ff[lv.n_fine + i] = v2[i];
  gather(ff, lv.perm, V[k - 1]);

  ws.sigma[k] = 0;
}
  if (k < l) goto backward;

  copy(V[l - 1], out);
}

std::vector<double> amli_apply(const Hierarchy& h, std::span<const double> d) {
  AmliWorkspace ws;
  std::vector<double> out(d.size());
  amli_apply(h, h.num_levels(), d, out, ws);
  return out;
}

AmliPrecond::AmliPrecond(const Hierarchy& h, int top_level)
    : h_(&h), top_(top_level < 0 ? h.num_levels() : top_level) {}

void AmliPrecond::apply(std::span<const double> d, std::span<double> out) const {
  amli_apply(*h_, top_, d, out, ws_);
}

LinOp AmliPrecond::op() const {
  return [this](std::span<const double> x, std::span<double> y) { apply(x, y); };
}

std::vector<double> f_smoothing_apply(const Smoother& c11, const CsrMatrix& at12,
                                      const CsrMatrix& at21, const LinOp& z_inv,
                                      std::span<const double> x) {
  int n1 = at12.rows();
  int n2 = at12.cols();
  if (static_cast<int>(x.size()) != n1 + n2)
    throw DimensionError("f_smoothing_apply dimension mismatch");

  std::span<const double> x1 = x.subspan(0, n1);
  std::span<const double> x2 = x.subspan(n1, n2);

  std::vector<double> u1(n1), t(n2), y2(n2);
  c11.solve(x1, u1);
  spmv(at21, u1, t);
  for (int i = 0; i < n2; ++i) t[i] = x2[i] - t[i];
  z_inv(t, y2);

  std::vector<double> s(n1), cs(n1);
  spmv(at12, y2, s);
  c11.solve(s, cs);
  std::vector<double> out(n1 + n2);
  for (int i = 0; i < n1; ++i) out[i] = u1[i] - cs[i];
  for (int i = 0; i < n2; ++i) out[n1 + i] = y2[i];
  return out;
}

// --- preconditioned conjugate gradients --------------------------------------

namespace {

double tridiag_condition(const std::vector<double>& diag,
                         const std::vector<double>& offdiag) {
  int k = static_cast<int>(diag.size());
  if (k == 0) return 1.0;
  Eigen::VectorXd d(k), e(std::max(0, k - 1));
  for (int i = 0; i < k; ++i) d[i] = diag[i];
  for (int i = 0; i + 1 < k; ++i) e[i] = offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues()(0), hi = es.eigenvalues()(k - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

SolveReport pcg_solve(const CsrMatrix& a, std::span<const double> b,
                      const LinOp& precond, double tol, int maxit) {
  int n = a.rows();
  if (static_cast<int>(b.size()) != n) throw DimensionError("pcg dimension mismatch");

  SolveReport rep;
  rep.solution.assign(n, 0.0);

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n), ap(n);
  precond(r, z);
  double rz = dot(r, z);
  if (rz < 0.0) throw IndefiniteOperatorError("preconditioner is indefinite");
  double res0 = std::sqrt(rz);
  rep.residual_history.push_back(res0);
  rep.kappa_history.push_back(1.0);
  if (res0 == 0.0 || tol >= 1.0) {
    rep.converged = true;
    return rep;
  }

  copy(z, p);

  // Lanczos tridiagonal assembled from the PCG coefficients
  std::vector<double> tdiag, toff;
  double alpha_prev = 0.0, beta_prev = 0.0;

  for (int it = 1; it <= maxit; ++it) {
    spmv(a, p, ap);
    double pap = dot(p, ap);
    if (!(pap > 0.0))
      throw IndefiniteOperatorError("system matrix is indefinite: p^T A p <= 0");
    double alpha = rz / pap;

    if (it == 1) {
      tdiag.push_back(1.0 / alpha);
    } else {
      tdiag.push_back(1.0 / alpha + beta_prev / alpha_prev);
      toff.push_back(std::sqrt(beta_prev) / alpha_prev);
    }

    axpy(alpha, p, rep.solution);
    axpy(-alpha, ap, r);
    precond(r, z);
    double rz_next = dot(r, z);
    if (rz_next < 0.0) throw IndefiniteOperatorError("preconditioner is indefinite");
    double beta = rz_next / rz;

    rep.iterations = it;
    double res = std::sqrt(rz_next);
    rep.residual_history.push_back(res);
    rep.kappa_estimate = tridiag_condition(tdiag, toff);
    rep.kappa_history.push_back(rep.kappa_estimate);

    if (res <= tol * res0) {
      rep.converged = true;
      break;
    }

    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_next;
    alpha_prev = alpha;
    beta_prev = beta;
  }
  return rep;
}

}  // namespace amli
