#include "amli/hierarchy.hpp"

#include <algorithm>
#include <cmath>

#include "amli/errors.hpp"
#include "amli/precond.hpp"
#include "amli/vec.hpp"

namespace amli {

CycleSpec CycleSpec::v_cycle(int levels, PolyFamily family) {
  CycleSpec c;
  c.nus.assign(levels, 1);
  c.family = family;
  return c;
}

CycleSpec CycleSpec::w_cycle(int levels, PolyFamily family) {
  CycleSpec c;
  c.nus.assign(levels, 2);
  if (!c.nus.empty()) c.nus.back() = 1;
  c.family = family;
  return c;
}

// --- Smoother -------------------------------------------------------------

namespace {

// x = (D + L)^{-1} b over the sorted CSR rows (strictly-lower entries + diag)
void forward_solve(const CsrMatrix& a, const std::vector<double>& diag,
                   std::span<const double> b, std::span<double> x) {
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = b[r];
    for (int k = rp[r]; k < rp[r + 1] && ci[k] < r; ++k) s -= v[k] * x[ci[k]];
    x[r] = s / diag[r];
  }
}

// x = (D + U)^{-1} b, U the strictly-upper entries
void backward_solve(const CsrMatrix& a, const std::vector<double>& diag,
                    std::span<const double> b, std::span<double> x) {
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = a.rows() - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = rp[r + 1] - 1; k >= rp[r] && ci[k] > r; --k) s -= v[k] * x[ci[k]];
    x[r] = s / diag[r];
  }
}

// y = (D + L) x
void lower_apply(const CsrMatrix& a, const std::vector<double>& diag,
                 std::span<const double> x, std::span<double> y) {
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = diag[r] * x[r];
    for (int k = rp[r]; k < rp[r + 1] && ci[k] < r; ++k) s += v[k] * x[ci[k]];
    y[r] = s;
  }
}

// y = (D + U) x
void upper_apply(const CsrMatrix& a, const std::vector<double>& diag,
                 std::span<const double> x, std::span<double> y) {
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = diag[r] * x[r];
    for (int k = rp[r + 1] - 1; k >= rp[r] && ci[k] > r; --k) s += v[k] * x[ci[k]];
    y[r] = s;
  }
}

}  // namespace

Smoother Smoother::build(const CsrMatrix& a, SmootherKind kind, double omega) {
  if (a.rows() != a.cols()) throw DimensionError("smoother block must be square");
  Smoother s;
  s.a_ = a;
  s.kind_ = kind;
  s.omega_ = omega;
  s.diag_ = diagonal_of(a);
  for (int i = 0; i < a.rows(); ++i) {
    if (s.diag_[i] == 0.0)
      throw Error("zero diagonal entry at row " + std::to_string(i) +
                  " in smoother block");
  }
  if (kind == SmootherKind::Exact) s.factor_ = DenseFactor::factor(a);
  return s;
}

Smoother build_smoother(const CsrMatrix& a11, SmootherKind kind, double omega) {
  return Smoother::build(a11, kind, omega);
}

void Smoother::solve(std::span<const double> b, std::span<double> x) const {
  if (b.size() != x.size() || static_cast<int>(b.size()) != a_.rows())
    throw DimensionError("smoother solve dimension mismatch");
  switch (kind_) {
    case SmootherKind::Jacobi:
      for (int i = 0; i < a_.rows(); ++i) x[i] = omega_ * b[i] / diag_[i];
      break;
    case SmootherKind::GaussSeidel:
      forward_solve(a_, diag_, b, x);
      break;
    case SmootherKind::SymGaussSeidel: {
      std::vector<double> t(b.size());
      forward_solve(a_, diag_, b, t);
      for (int i = 0; i < a_.rows(); ++i) t[i] *= diag_[i];
      backward_solve(a_, diag_, t, x);
      break;
    }
    case SmootherKind::Exact: {
      copy(b, x);
      factor_.solve_in_place(x);
      break;
    }
  }
}

void Smoother::solve_transpose(std::span<const double> b, std::span<double> x) const {
  if (kind_ == SmootherKind::GaussSeidel) {
    // (D+L)^T = D+U for the symmetric blocks this smoother wraps
    backward_solve(a_, diag_, b, x);
    return;
  }
  solve(b, x);
}

void Smoother::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != y.size() || static_cast<int>(x.size()) != a_.rows())
    throw DimensionError("smoother apply dimension mismatch");
  switch (kind_) {
    case SmootherKind::Jacobi:
      for (int i = 0; i < a_.rows(); ++i) y[i] = diag_[i] * x[i] / omega_;
      break;
    case SmootherKind::GaussSeidel:
      lower_apply(a_, diag_, x, y);
      break;
    case SmootherKind::SymGaussSeidel: {
      // C = (D+L) D^{-1} (D+U)
      std::vector<double> t(x.size());
      upper_apply(a_, diag_, x, t);
      for (int i = 0; i < a_.rows(); ++i) t[i] /= diag_[i];
      lower_apply(a_, diag_, t, y);
      break;
    }
    case SmootherKind::Exact:
      spmv(a_, x, y);
      break;
  }
}

std::vector<double> Smoother::solve(std::span<const double> b) const {
  std::vector<double> x(b.size());
  solve(b, x);
  return x;
}

// --- model problems and splittings -----------------------------------------

Partition partition_fc_1d(int n) {
  if (n < 3 || n % 2 == 0)
    throw ConfigError("1D full coarsening needs an odd interior size >= 3");
  Partition p;
  p.n_coarse = (n - 1) / 2;
  p.n_fine = n - p.n_coarse;
  p.perm.resize(n);
  int f = 0;
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 1) {
      p.perm[i] = p.n_fine + (i - 1) / 2;  // 2nd, 4th, ... grid point
    } else {
      p.perm[i] = f++;
    }
  }
  return p;
}

Partition partition_fc_2d(int side) {
  if (side < 3 || side % 2 == 0)
    throw ConfigError("2D full coarsening needs an odd interior side >= 3");
  int m = (side - 1) / 2;
  Partition p;
  p.n_coarse = m * m;
  p.n_fine = side * side - p.n_coarse;
  p.perm.resize(side * side);
  int f = 0;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      int idx = j * side + i;
      if (i % 2 == 1 && j % 2 == 1) {
        p.perm[idx] = p.n_fine + (j - 1) / 2 * m + (i - 1) / 2;
      } else {
        p.perm[idx] = f++;
      }
    }
  }
  return p;
}

CsrMatrix interpolation_weights_1d(int n) {
  Partition p = partition_fc_1d(n);
  std::vector<Triplet> t;
  int f = 0;
  for (int i = 0; i < n; i += 2) {
    // fine point i sits between coarse grid points i-1 and i+1
    if (i - 1 >= 0) t.push_back({f, (i - 2) / 2, 0.5});
    if (i + 1 < n) t.push_back({f, i / 2, 0.5});
    ++f;
  }
  return CsrMatrix::from_triplets(p.n_fine, p.n_coarse, std::move(t));
}

CsrMatrix interpolation_weights_2d(int side) {
  Partition p = partition_fc_2d(side);
  int m = (side - 1) / 2;
  auto coarse_col = [m](int ic, int jc) { return (jc - 1) / 2 * m + (ic - 1) / 2; };
  std::vector<Triplet> t;
  int f = 0;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      bool ci = (i % 2 == 1), cj = (j % 2 == 1);
      if (ci && cj) continue;  // coarse point
      if (!ci && cj) {
        // between two coarse points along x
        if (i - 1 >= 0) t.push_back({f, coarse_col(i - 1, j), 0.5});
        if (i + 1 < side) t.push_back({f, coarse_col(i + 1, j), 0.5});
      } else if (ci && !cj) {
        if (j - 1 >= 0) t.push_back({f, coarse_col(i, j - 1), 0.5});
        if (j + 1 < side) t.push_back({f, coarse_col(i, j + 1), 0.5});
      } else {
        // cell center: four diagonal coarse neighbors
        for (int dj = -1; dj <= 1; dj += 2) {
          for (int di = -1; di <= 1; di += 2) {
            int ic = i + di, jc = j + dj;
            if (ic >= 0 && ic < side && jc >= 0 && jc < side)
              t.push_back({f, coarse_col(ic, jc), 0.25});
          }
        }
      }
      ++f;
    }
  }
  return CsrMatrix::from_triplets(p.n_fine, p.n_coarse, std::move(t));
}

HbBlocks hb_transform(const CsrMatrix& a_perm, const CsrMatrix& w) {
  int n = a_perm.rows();
  int n1 = w.rows();
  int n2 = w.cols();
  if (n1 + n2 != n) throw DimensionError("hb_transform: block sizes do not add up");

  HbBlocks h;
  h.a11 = submatrix(a_perm, 0, n1, 0, n1);
  CsrMatrix a12 = submatrix(a_perm, 0, n1, n1, n);
  CsrMatrix a21 = submatrix(a_perm, n1, n, 0, n1);
  CsrMatrix a22 = submatrix(a_perm, n1, n, n1, n);

  h.at12 = add_scaled(1.0, multiply(h.a11, w), 1.0, a12);
  h.at21 = transpose(h.at12);
  // at22 = W^T (A11 W + A12) + (A21 W + A22) = W^T at12 + A21 W + A22
  h.at22 = add_scaled(1.0, multiply(transpose(w), h.at12), 1.0,
                      add_scaled(1.0, multiply(a21, w), 1.0, a22));
  return h;
}

CsrMatrix galerkin_coarse(const CsrMatrix& a, const CsrMatrix& p) {
  if (p.rows() != a.rows()) throw DimensionError("galerkin_coarse: transfer mismatch");
  return multiply(transpose(p), multiply(a, p));
}

ProblemStructure gen_poisson(int dim, int levels, int n0) {
  if (dim != 1 && dim != 2) throw ConfigError("gen_poisson: dim must be 1 or 2");
  if (n0 < 2) throw ConfigError("gen_poisson: coarsest size must be >= 2");
  if (levels < 1) throw ConfigError("gen_poisson: need at least one refined level");

  ProblemStructure ps;
  ps.dim = dim;
  ps.sides.resize(levels + 1);
  ps.sides[0] = n0;
  for (int k = 1; k <= levels; ++k) {
    long long next = 2LL * ps.sides[k - 1] + 1;
    long long dofs = dim == 1 ? next : next * next;
    if (dofs > (1LL << 27)) throw ConfigError("gen_poisson: grid too large");
    ps.sides[k] = static_cast<int>(next);
  }

  int s = ps.sides[levels];
  std::vector<Triplet> t;
  if (dim == 1) {
    for (int i = 0; i < s; ++i) {
      t.push_back({i, i, 2.0});
      if (i > 0) t.push_back({i, i - 1, -1.0});
      if (i + 1 < s) t.push_back({i, i + 1, -1.0});
    }
    ps.finest = CsrMatrix::from_triplets(s, s, std::move(t));
  } else {
    int n = s * s;
    t.reserve(static_cast<std::size_t>(n) * 5);
    for (int j = 0; j < s; ++j) {
      for (int i = 0; i < s; ++i) {
        int idx = j * s + i;
        t.push_back({idx, idx, 4.0});
        if (i > 0) t.push_back({idx, idx - 1, -1.0});
        if (i + 1 < s) t.push_back({idx, idx + 1, -1.0});
        if (j > 0) t.push_back({idx, idx - s, -1.0});
        if (j + 1 < s) t.push_back({idx, idx + s, -1.0});
      }
    }
    ps.finest = CsrMatrix::from_triplets(n, n, std::move(t));
  }

  ps.splits.resize(levels);
  for (int k = 1; k <= levels; ++k) {
    int side = ps.sides[k];
    SplitStructure& sp = ps.splits[k - 1];
    if (dim == 1) {
      sp.partition = partition_fc_1d(side);
      sp.w = interpolation_weights_1d(side);
    } else {
      sp.partition = partition_fc_2d(side);
      sp.w = interpolation_weights_2d(side);
    }
  }
  return ps;
}

ProblemStructure structure_from_matrix(CsrMatrix finest,
                                       const std::vector<std::vector<int>>& coarse_sets) {
  if (finest.rows() != finest.cols())
    throw ConfigError("external matrix must be square");
  if (!finest.is_symmetric())
    throw ConfigError("external matrix must be symmetric");

  ProblemStructure ps;
  ps.dim = 0;
  ps.finest = std::move(finest);
  int n = ps.finest.rows();

  // coarse_sets arrives finest split first; store coarsest-first
  ps.splits.resize(coarse_sets.size());
  for (std::size_t s = 0; s < coarse_sets.size(); ++s) {
    const auto& coarse = coarse_sets[s];
    SplitStructure& sp = ps.splits[coarse_sets.size() - 1 - s];
    std::vector<char> is_coarse(n, 0);
    for (int c : coarse) {
      if (c < 0 || c >= n) throw ConfigError("coarse index out of range");
      if (is_coarse[c]) throw ConfigError("duplicate coarse index");
      is_coarse[c] = 1;
    }
    int nc = static_cast<int>(coarse.size());
    if (nc == 0 || nc >= n) throw ConfigError("coarse set must be a proper nonempty subset");
    Partition p;
    p.n_coarse = nc;
    p.n_fine = n - nc;
    p.perm.resize(n);
    int f = 0;
    std::vector<int> coarse_sorted(coarse);
    std::sort(coarse_sorted.begin(), coarse_sorted.end());
    std::vector<int> coarse_pos(n, -1);
    for (int i = 0; i < nc; ++i) coarse_pos[coarse_sorted[i]] = i;
    for (int i = 0; i < n; ++i)
      p.perm[i] = is_coarse[i] ? p.n_fine + coarse_pos[i] : f++;
    sp.partition = std::move(p);
    sp.w = CsrMatrix::from_triplets(n - nc, nc, {});  // injection splitting
    n = nc;
  }
  return ps;
}

// --- hierarchy assembly -----------------------------------------------------

Hierarchy build_structure(const ProblemStructure& problem, const BuildOptions& opts) {
  int l = static_cast<int>(problem.splits.size());
  if (l < 1) throw ConfigError("hierarchy needs at least one splitting");

  Hierarchy h;
  h.levels.resize(l);
  h.exact_factors.resize(l);

  CsrMatrix a = problem.finest;
  for (int k = l; k >= 1; --k) {
    const SplitStructure& sp = problem.splits[k - 1];
    Level& lv = h.levels[k - 1];
    lv.n = a.rows();
    if (static_cast<int>(sp.partition.perm.size()) != lv.n)
      throw ConfigError("splitting size does not match level matrix");
    lv.n_fine = sp.partition.n_fine;
    lv.n_coarse = sp.partition.n_coarse;
    lv.perm = sp.partition.perm;
    lv.a = std::move(a);

    CsrMatrix a_perm = permute_symmetric(lv.a, lv.perm);
    HbBlocks hb = hb_transform(a_perm, sp.w);
    lv.a11 = std::move(hb.a11);
    lv.at12 = std::move(hb.at12);
    lv.at21 = std::move(hb.at21);
    lv.w = sp.w;
    lv.wt = transpose(lv.w);
    lv.c11 = Smoother::build(lv.a11, opts.smoother, opts.omega);
    lv.nu = 1;
    lv.q = MonomialPoly{{1.0}};

    a = std::move(hb.at22);  // the coarse-level matrix, next round's A
  }

  if (a.rows() > opts.coarse_limit)
    throw ConfigError("coarsest level has " + std::to_string(a.rows()) +
                      " unknowns, above the direct-solve limit of " +
                      std::to_string(opts.coarse_limit));
  h.coarse_a = std::move(a);
  h.coarse_factor = DenseFactor::factor(h.coarse_a);
  h.cycle = CycleSpec::v_cycle(l, PolyFamily::Identity);
  return h;
}

// The seed level of the theory recursion has rho0 = rho1 = 1, a collapsed
// interval on which every family degenerates to the exact constant 1/x.
// Coefficients are padded to exactly nu entries; the multilevel engine
// indexes them as a_0 .. a_{nu-1}.
MonomialPoly family_polynomial(PolyFamily family, int nu, double rho0, double rho1,
                               int degree_cap) {
  if (nu < 1) throw ConfigError("cycle degrees must be >= 1");
  double lo = 1.0 / rho1, hi = 1.0 / rho0;
  if (lo > hi) std::swap(lo, hi);

  MonomialPoly q;
  switch (family) {
    case PolyFamily::Identity:
    case PolyFamily::Exact:  // engine bypasses q via direct solves
      q = MonomialPoly{{1.0}};
      break;
    case PolyFamily::Chebyshev: {
      if (nu == 1) {
        q = MonomialPoly{{rho1}};  // p(x) = 1 - rho1 x <= 0 on the interval
      } else if (nu == 2) {
        q = cheb_accel_q(rho0, rho1);
      } else {
        throw ConfigError("the Chebyshev family is defined for nu <= 2; "
                          "use the best-approximation family for higher degrees");
      }
      break;
    }
    case PolyFamily::BestApprox: {
      if (hi - lo <= 1e-14 * hi) {
        q = MonomialPoly{{1.0 / hi}};  // best approximation at a single point
      } else {
        q = best_q(nu - 1, spectral_params(lo, hi), degree_cap);
      }
      break;
    }
  }
  q.coeffs.resize(nu, 0.0);
  return q;
}

namespace {

void check_positivity(const MonomialPoly& q, double rho0, double rho1, int samples,
                      int level) {
  double lo = 1.0 / rho1, hi = 1.0 / rho0;
  if (lo > hi) std::swap(lo, hi);
  int n = std::max(samples, 2);
  for (int i = 0; i <= n; ++i) {
    double x = lo + (hi - lo) * i / n;
    if (q.eval(x) < 0.0) {
      throw NegativePolynomialError(
          "stabilization polynomial is negative at x = " + std::to_string(x) +
          " on level " + std::to_string(level) +
          "; increase the cycle degree or tighten the spectral bounds");
    }
  }
}

}  // namespace

void attach_polynomials(Hierarchy& h, const CycleSpec& cycle, const BuildOptions& opts) {
  int l = h.num_levels();
  if (static_cast<int>(cycle.nus.size()) != l)
    throw ConfigError("cycle degree list does not match the level count");

  h.cycle = cycle;
  h.rho_used.assign(l, {1.0, 1.0});

  auto theta_at = [&](int k) -> std::pair<double, double> {
    if (opts.thetas.empty())
      throw ConfigError("rho_mode=theory requires theta constants");
    if (opts.thetas.size() == 1) return opts.thetas[0];
    if (static_cast<int>(opts.thetas.size()) != l)
      throw ConfigError("theta list does not match the level count");
    return opts.thetas[k - 1];
  };
  auto given_at = [&](int j) -> std::pair<double, double> {
    if (opts.given_rho.empty())
      throw ConfigError("rho_mode=given requires rho bounds");
    if (opts.given_rho.size() == 1) return opts.given_rho[0];
    if (static_cast<int>(opts.given_rho.size()) != l)
      throw ConfigError("rho list does not match the level count");
    return opts.given_rho[j];
  };

  // rho_prev = (rho0, rho1) equivalence bounds of B^{(k-1)} against A^{(k-1)};
  // q^{(k)} is built on the interval [1/rho1, 1/rho0] they span.
  std::pair<double, double> rho_prev = {1.0, 1.0};  // exact coarsest solve
  for (int k = 1; k <= l; ++k) {
    Level& lv = h.levels[k - 1];
    lv.nu = cycle.nus[k - 1];
    lv.exact_z = (cycle.family == PolyFamily::Exact);
    if (cycle.family == PolyFamily::Identity || lv.exact_z) {
      lv.nu = 1;
      h.cycle.nus[k - 1] = 1;
    }

    std::pair<double, double> interval_rho = rho_prev;
    if (opts.rho_mode == RhoMode::Given) {
      interval_rho = given_at(k - 1);
    } else if (opts.rho_mode == RhoMode::Measure && k > 1) {
      // extreme eigenvalues of B^{(k-1)^{-1}} A^{(k-1)} through Lanczos in
      // the A-inner product, where that operator is self-adjoint
      const Level& below = h.levels[k - 2];
      const CsrMatrix& a_below = below.a;
      AmliWorkspace ws;
      LinOp op = [&](std::span<const double> x, std::span<double> y) {
        std::vector<double> ax(x.size());
        spmv(a_below, x, ax);
        amli_apply(h, k - 1, ax, y, ws);
      };
      DotFn a_dot = [&](std::span<const double> x, std::span<const double> y) {
        std::vector<double> ay(y.size());
        spmv(a_below, y, ay);
        return dot(x, ay);
      };
      EigEstimate e = extreme_eigs_general(op, a_dot, a_below.rows(),
                                           opts.measure_iters, opts.seed + k);
      // lambda(B^{-1}A) in [lo, hi]  <=>  rho0 = 1/hi, rho1 = 1/lo, widened a
      // little since Lanczos approaches the extremes from inside
      double lo = e.low * (1.0 - opts.measure_safety);
      double hi = e.high * (1.0 + opts.measure_safety);
      interval_rho = {1.0 / hi, 1.0 / lo};
    }
    if (!(interval_rho.first > 0.0) || !(interval_rho.second >= interval_rho.first))
      throw ConfigError("invalid spectral bounds on level " + std::to_string(k - 1));

    h.rho_used[k - 1] = interval_rho;
    lv.q = family_polynomial(cycle.family, lv.nu, interval_rho.first,
                             interval_rho.second, opts.degree_cap);
    if (!lv.exact_z) {
      check_positivity(lv.q, interval_rho.first, interval_rho.second,
                       opts.positivity_samples, k);
    } else if (k > 1) {
      h.exact_factors[k - 1] = DenseFactor::factor(h.levels[k - 2].a);
    }

    if (opts.rho_mode == RhoMode::Theory) {
      // induction step: the bounds B^{(k)} inherits against A^{(k)}
      auto [t0, t1] = theta_at(k);
      double r0 = 1.0, r1 = 1.0;
      if (!lv.exact_z) {
        std::tie(r0, r1) =
            xq_range(lv.q, 1.0 / interval_rho.second, 1.0 / interval_rho.first);
      }
      rho_prev = {t0 / std::max(1.0, r1), t1 / std::min(1.0, r0)};
    }
  }
}

Hierarchy build_hierarchy(const ProblemStructure& problem, const CycleSpec& cycle,
                          const BuildOptions& opts) {
  Hierarchy h = build_structure(problem, opts);
  attach_polynomials(h, cycle, opts);
  return h;
}

void attach_custom_polynomials(Hierarchy& h, const std::vector<CustomPolynomial>& polys,
                               int positivity_samples) {
  int l = h.num_levels();
  if (static_cast<int>(polys.size()) != l)
    throw ConfigError("need one polynomial document per level");
  h.cycle.family = PolyFamily::BestApprox;
  h.cycle.nus.assign(l, 1);
  h.rho_used.assign(l, {1.0, 1.0});
  for (int k = 1; k <= l; ++k) {
    const CustomPolynomial& cp = polys[k - 1];
    if (cp.q.coeffs.empty()) throw ConfigError("empty polynomial document");
    if (!(cp.lambda_min > 0.0) || !(cp.lambda_max >= cp.lambda_min))
      throw ConfigError("polynomial document carries an invalid interval");
    Level& lv = h.levels[k - 1];
    lv.exact_z = false;
    lv.q = cp.q;
    lv.nu = static_cast<int>(cp.q.coeffs.size());
    h.cycle.nus[k - 1] = lv.nu;
    double rho0 = 1.0 / cp.lambda_max, rho1 = 1.0 / cp.lambda_min;
    h.rho_used[k - 1] = {rho0, rho1};
    check_positivity(lv.q, rho0, rho1, positivity_samples, k);
  }
}

}  // namespace amli
