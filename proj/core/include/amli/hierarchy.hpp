#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "amli/poly.hpp"
#include "amli/sparse.hpp"

namespace amli {

enum class PolyFamily { BestApprox, Chebyshev, Exact, Identity };
enum class SmootherKind { Jacobi, GaussSeidel, SymGaussSeidel, Exact };
enum class RhoMode { Theory, Measure, Given };

/// Per-level polynomial degrees (nus[k-1] = nu_k for level k, counted from the
/// coarsest refined level up) plus the acceleration family. nu_k = 1 on every
/// level is the V-cycle; nu_k = 2 below the finest level the classical W-cycle.
struct CycleSpec {
  std::vector<int> nus;
  PolyFamily family = PolyFamily::BestApprox;

  static CycleSpec v_cycle(int levels, PolyFamily family);
  static CycleSpec w_cycle(int levels, PolyFamily family);
};

/// Smoother/approximation C for a (symmetric) sparse block, with forward,
/// transposed and inverse actions:
///   Jacobi          C = diag(A)/omega
///   GaussSeidel     M = D + L (forward sweep; not symmetric)
///   SymGaussSeidel  C = (D+L) D^{-1} (D+L)^T, the symmetrized sweep
///   Exact           C = A itself, inverted by dense Cholesky
class Smoother {
public:
  Smoother() = default;
  static Smoother build(const CsrMatrix& a, SmootherKind kind, double omega = 1.0);

  SmootherKind kind() const { return kind_; }
  bool symmetric() const { return kind_ != SmootherKind::GaussSeidel; }
  int dim() const { return a_.rows(); }
  const CsrMatrix& matrix() const { return a_; }

  void solve(std::span<const double> b, std::span<double> x) const;
  void solve_transpose(std::span<const double> b, std::span<double> x) const;
  void apply(std::span<const double> x, std::span<double> y) const;

  std::vector<double> solve(std::span<const double> b) const;

private:
  CsrMatrix a_;
  std::vector<double> diag_;
  SmootherKind kind_ = SmootherKind::Jacobi;
  double omega_ = 1.0;
  DenseFactor factor_;
};

Smoother build_smoother(const CsrMatrix& a11, SmootherKind kind, double omega = 1.0);

/// Fine/coarse splitting of one level: a permutation carrying natural indices
/// to fine-first/coarse-last positions, and the count of each group.
struct Partition {
  std::vector<int> perm;  // natural index -> fine-first position
  int n_fine = 0;
  int n_coarse = 0;
};

/// Full coarsening of the 1D interior grid: coarse points are the 2nd, 4th,
/// ... grid points, numbered last. n must be odd and >= 3.
Partition partition_fc_1d(int n);

/// Full coarsening of the 2D interior grid (side x side): coarse points have
/// both 1-based coordinates even. side must be odd and >= 3.
Partition partition_fc_2d(int side);

/// Linear interpolation weights from coarse neighbors to fine-only points
/// (1/2 - 1/2 in 1D), rows in fine-first order, columns in coarse order.
CsrMatrix interpolation_weights_1d(int n);

/// Bilinear stencil weights in 2D (1/2 along coarse lines, 1/4 at cell
/// centers); contributions through the Dirichlet boundary are dropped.
CsrMatrix interpolation_weights_2d(int side);

/// Blocks of the two-level hierarchical-basis transform Atilde = J^T A J with
/// J = [[I, W], [0, I]]: at11 = A11 unchanged, at12 = A11 W + A12,
/// at21 = at12^T, at22 = W^T A11 W + W^T A12 + A21 W + A22.
/// `a_perm` must already be in fine-first/coarse-last ordering.
struct HbBlocks {
  CsrMatrix a11;
  CsrMatrix at12;
  CsrMatrix at21;
  CsrMatrix at22;
};
HbBlocks hb_transform(const CsrMatrix& a_perm, const CsrMatrix& w);

/// Galerkin coarse operator P^T A P.
CsrMatrix galerkin_coarse(const CsrMatrix& a, const CsrMatrix& p);

/// Splitting data for one level of a multilevel problem.
struct SplitStructure {
  Partition partition;
  CsrMatrix w;  // n_fine x n_coarse interpolation block (may be empty = zero)
};

/// A problem plus the nested splittings that define its hierarchy.
/// splits[j] belongs to level j+1 (coarsest refined level first); the finest
/// matrix is the only one stored, coarser ones follow by Galerkin products.
struct ProblemStructure {
  int dim = 0;             // 1 or 2 for model problems, 0 for external matrices
  std::vector<int> sides;  // per-level grid sides, coarsest first (model only)
  CsrMatrix finest;
  std::vector<SplitStructure> splits;
};

/// Finite-difference Laplacian hierarchy: 3-point stencil in 1D, 5-point in
/// 2D, homogeneous Dirichlet boundary, grid doubling per level. n0 is the
/// coarsest interior size (1D) or side (2D).
ProblemStructure gen_poisson(int dim, int levels, int n0);

/// Wraps an external matrix with user-supplied coarse index sets per level
/// (finest split first in `coarse_sets`). No interpolation is available for
/// external matrices, so W = 0 (pure injection splitting).
ProblemStructure structure_from_matrix(CsrMatrix finest,
                                       const std::vector<std::vector<int>>& coarse_sets);

/// One level of the multilevel preconditioner.
struct Level {
  int n = 0;
  int n_fine = 0;
  int n_coarse = 0;
  std::vector<int> perm;  // natural -> fine-first position
  CsrMatrix a;            // level matrix, natural ordering
  CsrMatrix a11;          // fine-fine block (equals the HB block at11)
  CsrMatrix at12;
  CsrMatrix at21;
  CsrMatrix w;
  CsrMatrix wt;  // transpose(w), kept so applies stay allocation-light
  Smoother c11;
  int nu = 1;
  MonomialPoly q;       // coefficients of q^{(k)}, degree nu-1
  bool exact_z = false; // direct coarse inversion replaces the polynomial
};

struct Hierarchy {
  std::vector<Level> levels;  // levels[k-1] = level k, coarsest refined first
  CsrMatrix coarse_a;         // A^{(0)}
  DenseFactor coarse_factor;
  /// Exact family only: exact_factors[j] factors level j's matrix for
  /// j = 1..l-1 (entry 0 is unused; the coarsest solve always goes through
  /// coarse_factor).
  std::vector<DenseFactor> exact_factors;
  CycleSpec cycle;
  /// (rho0, rho1) pair per level j = 0..l-1 that defined the interval
  /// [1/rho1, 1/rho0] on which q^{(j+1)} was built.
  std::vector<std::pair<double, double>> rho_used;

  int num_levels() const { return static_cast<int>(levels.size()); }
  const CsrMatrix& finest() const {
    return levels.empty() ? coarse_a : levels.back().a;
  }
  int finest_n() const { return finest().rows(); }
};

struct BuildOptions {
  SmootherKind smoother = SmootherKind::SymGaussSeidel;
  double omega = 1.0;
  RhoMode rho_mode = RhoMode::Measure;
  /// Theory mode: approximation-property constants (theta0, theta1) per level
  /// 1..l (one pair is broadcast to all levels).
  std::vector<std::pair<double, double>> thetas;
  /// Given mode: (rho0, rho1) per level 0..l-1 (one pair broadcast).
  std::vector<std::pair<double, double>> given_rho;
  int coarse_limit = 64;  // largest coarsest dimension accepted for factorization
  int measure_iters = 30;
  double measure_safety = 0.01;  // relative widening of measured eigenvalue bounds
  std::uint64_t seed = 42;
  int positivity_samples = 10000;
  int degree_cap = kDegreeCap;
};

/// The stabilization polynomial a family prescribes for one level, built on
/// the interval [1/rho1, 1/rho0] and padded to exactly nu coefficients.
/// Collapsed intervals (rho0 == rho1) degenerate to the exact constant.
MonomialPoly family_polynomial(PolyFamily family, int nu, double rho0, double rho1,
                               int degree_cap = kDegreeCap);

/// Structural phase: permutes each level, forms HB blocks, Galerkin coarse
/// matrices, smoothers and the coarsest factorization. Polynomials are not
/// chosen yet (every level gets nu = 1, q = 1).
Hierarchy build_structure(const ProblemStructure& problem, const BuildOptions& opts);

/// Polynomial phase: walks levels coarsest-first, derives each level's
/// spectral interval per rho_mode, builds q^{(k)} from the family and checks
/// the positivity requirement q >= 0 on the interval.
void attach_polynomials(Hierarchy& h, const CycleSpec& cycle, const BuildOptions& opts);

Hierarchy build_hierarchy(const ProblemStructure& problem, const CycleSpec& cycle,
                          const BuildOptions& opts);

/// An externally supplied stabilization polynomial together with the
/// spectral interval it was built for (the exported coefficient document).
struct CustomPolynomial {
  MonomialPoly q;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Replaces every level's polynomial with supplied coefficients (one entry
/// per level, coarsest first). Positivity is checked on each document's own
/// interval and rho_used records the interval it implies.
void attach_custom_polynomials(Hierarchy& h, const std::vector<CustomPolynomial>& polys,
                               int positivity_samples = 10000);

}  // namespace amli
