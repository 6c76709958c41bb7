#pragma once

#include <span>
#include <vector>

#include "amli/hierarchy.hpp"
#include "amli/sparse.hpp"

namespace amli {

/// Action of the symmetrized smoother inverse
///   Mbar^{-1} = M^{-1} + M^{-T} - M^{-T} A M^{-1},
/// realized as two half-sweeps around one residual:
///   y = M^{-1} x;  result = y + M^{-T} (x - A y).
std::vector<double> symmetrized_smoother_apply(const Smoother& m, const CsrMatrix& a,
                                               std::span<const double> x);

enum class CoarseKind { ExactSolve, InitialBh, Stabilized };

/// Two-level multiplicative preconditioner: pre-smooth, coarse correction,
/// post-smooth. The induced operator is
///   B^{-1} = Mbar^{-1} + (I - M^{-T}A) P Btilde_H^{-1} P^T (I - A M^{-1}).
struct TwoLevelConfig {
  const CsrMatrix* a = nullptr;
  Smoother m;                                // smoother on the full matrix
  CsrMatrix p;                               // prolongation, n x n_H
  CoarseKind coarse = CoarseKind::ExactSolve;
  LinOp bh_inv;                              // InitialBh / Stabilized
  MonomialPoly q;                            // Stabilized: coefficients of q_{nu-1}
};

class TwoLevel {
public:
  explicit TwoLevel(TwoLevelConfig cfg);

  std::vector<double> apply(std::span<const double> x) const;
  LinOp op() const;

  const CsrMatrix& coarse_matrix() const { return ah_; }

private:
  std::vector<double> coarse_solve(std::span<const double> rh) const;

  TwoLevelConfig cfg_;
  CsrMatrix pt_;  // P^T
  CsrMatrix ah_;  // P^T A P
  DenseFactor ah_factor_;
};

/// Stabilized coarse preconditioner action
///   B_{H,nu}^{-1} r = B_H^{-1} q(A_H B_H^{-1}) r
/// with the polynomial evaluated by Horner's rule on operator actions.
std::vector<double> amli_coarse_stabilize(const LinOp& bh_inv, const LinOp& ah,
                                          const MonomialPoly& q,
                                          std::span<const double> r);

/// Scratch state for one multilevel apply. Reusable across applies; create
/// one per thread for concurrent solves against the same hierarchy.
struct AmliWorkspace {
  std::vector<std::vector<double>> d;   // per-level right-hand side
  std::vector<std::vector<double>> v;   // per-level solution
  std::vector<std::vector<double>> w;   // retained coarse residual per level
  std::vector<std::vector<double>> v1;  // fine-block partial solution
  std::vector<double> d0, v0;
  std::vector<int> sigma;
  std::vector<double> s1, s2;  // scratch
  long coarse_solves = 0;

  void resize(const Hierarchy& h, int top_level);
};

/// Applies the multilevel preconditioner of the hierarchy truncated at
/// `top_level` (1..num_levels): out = B^{(top)}^{-1} d. The per-level visit
/// counters follow the cycle degrees nu_k; the forward pass accumulates the
/// Horner expansion of q^{(k)}(A^{(k-1)} B^{(k-1)^{-1}}) across revisits.
void amli_apply(const Hierarchy& h, int top_level, std::span<const double> d,
                std::span<double> out, AmliWorkspace& ws);

/// Full-depth apply with a temporary workspace.
std::vector<double> amli_apply(const Hierarchy& h, std::span<const double> d);

/// Convenience operator wrapper around a hierarchy (owns its workspace; not
/// safe to share one instance across threads).
class AmliPrecond {
public:
  explicit AmliPrecond(const Hierarchy& h, int top_level = -1);
  void apply(std::span<const double> d, std::span<double> out) const;
  LinOp op() const;
  long last_coarse_solves() const { return ws_.coarse_solves; }

private:
  const Hierarchy* h_;
  int top_;
  mutable AmliWorkspace ws_;
};

/// One level of f-smoothing AMLI in hierarchical-basis coordinates:
///   u1 = C11^{-1} x1;  y2 = Z^{-1}(x2 - At21 u1);  u1 -= C11^{-1}(At12 y2)
/// which is exactly the inverse of [[I,0],[At21 C11^{-1},I]] diag(C11, Z)
/// [[I, C11^{-1} At12],[0,I]].
std::vector<double> f_smoothing_apply(const Smoother& c11, const CsrMatrix& at12,
                                      const CsrMatrix& at21, const LinOp& z_inv,
                                      std::span<const double> x);

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double kappa_estimate = 1.0;
  std::vector<double> residual_history;  // preconditioned residual norms, [0] = initial
  std::vector<double> kappa_history;     // running condition estimate per entry
  std::vector<double> solution;
};

/// Preconditioned conjugate gradients with relative preconditioned-residual
/// stopping rule sqrt(r^T B^{-1} r) <= tol * initial. The condition estimate
/// comes from the Lanczos tridiagonal assembled out of the PCG coefficients.
SolveReport pcg_solve(const CsrMatrix& a, std::span<const double> b,
                      const LinOp& precond, double tol, int maxit);

}  // namespace amli
