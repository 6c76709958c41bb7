#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "amli/poly.hpp"

namespace amli {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Sparse matrix in compressed-sparse-row form. Column indices are sorted
/// within each row and duplicates have been summed at construction, so the
/// structure is canonical. Values are immutable after assembly; concurrent
/// products against one matrix are safe.
class CsrMatrix {
public:
  CsrMatrix() = default;

  /// Assembles from coordinate triplets; entries may arrive in any order and
  /// duplicates are summed.
  static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> entries);
  static CsrMatrix identity(int n);
  static CsrMatrix diagonal(const std::vector<double>& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  double max_abs() const;

  /// Entry lookup by binary search within the row; absent entries read as 0.
  double at(int i, int j) const;

  /// True when rows == cols and max_ij |A_ij - A_ji| <= rel_tol * max_ij |A_ij|.
  bool is_symmetric(double rel_tol = 1e-12) const;

private:
  friend CsrMatrix transpose(const CsrMatrix&);
  friend CsrMatrix multiply(const CsrMatrix&, const CsrMatrix&);
  friend CsrMatrix add_scaled(double, const CsrMatrix&, double, const CsrMatrix&);

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// y = A x
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// Maximum absolute row sum; an upper bound for the spectral radius of a
/// symmetric matrix, handy when eigenvalue estimates are not available.
double inf_norm(const CsrMatrix& a);

CsrMatrix transpose(const CsrMatrix& a);
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);
CsrMatrix add_scaled(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);

/// Symmetric reordering: entry (i, j) moves to (perm[i], perm[j]).
CsrMatrix permute_symmetric(const CsrMatrix& a, std::span<const int> perm);

/// Contiguous block A[r0:r1, c0:c1) extracted as its own matrix.
CsrMatrix submatrix(const CsrMatrix& a, int r0, int r1, int c0, int c1);

std::vector<double> diagonal_of(const CsrMatrix& a);

/// Dense Cholesky factorization A = L L^T of an SPD matrix, used for the
/// coarsest-level direct solve and for desk-scale spectral measurements.
/// A nonpositive pivot aborts with NotSpdError carrying the pivot index.
class DenseFactor {
public:
  DenseFactor() = default;
  static DenseFactor factor(const CsrMatrix& a);
  static DenseFactor factor_dense(int n, std::span<const double> row_major);

  int dim() const { return n_; }

  void solve_in_place(std::span<double> x) const;
  std::vector<double> solve(std::span<const double> b) const;

  /// Solves L y = b (forward substitution only).
  void solve_lower_in_place(std::span<double> x) const;
  /// Solves L^T y = b (backward substitution only).
  void solve_lower_transpose_in_place(std::span<double> x) const;
  /// y = L^T x, used to push operators into the factor's coordinates.
  std::vector<double> apply_lower_transpose(std::span<const double> x) const;
  /// y = L x.
  std::vector<double> apply_lower(std::span<const double> x) const;

private:
  int n_ = 0;
  std::vector<double> l_;  // row-major lower triangle, full n*n storage
};

/// Vector-to-vector linear action.
using LinOp = std::function<void(std::span<const double>, std::span<double>)>;

/// Wraps a matrix as an operator. The matrix must outlive the operator;
/// binding a temporary is rejected at compile time.
LinOp csr_op(const CsrMatrix& a);
LinOp csr_op(CsrMatrix&&) = delete;

/// Evaluates u = q(A B^{-1}) w by Horner's rule using only operator actions:
///   u <- a_{d} w;  repeat  u <- A (B^{-1} u) + a_{j} w  for j = d-1 .. 0.
std::vector<double> horner_matrix_apply(const MonomialPoly& q, const LinOp& apply_a,
                                        const LinOp& apply_b_inv,
                                        std::span<const double> w);

struct EigEstimate {
  double low = 0.0;
  double high = 0.0;
  int iterations = 0;
  bool breakdown = false;  // Lanczos residual vanished before iters ran out
};

using DotFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Extreme eigenvalue estimates of a symmetric positive definite operator by
/// Lanczos with full reorthogonalization. Estimates approach the true extremes
/// from inside as iters grows. On breakdown (an invariant subspace was hit)
/// the estimates computed so far are returned with the flag set.
EigEstimate extreme_eigs(const LinOp& apply, int n, int iters, std::uint64_t seed = 42);

/// Same, in a caller-supplied inner product in which `apply` is self-adjoint
/// (e.g. B^{-1}A with the A-inner product).
EigEstimate extreme_eigs_general(const LinOp& apply, const DotFn& dot, int n,
                                 int iters, std::uint64_t seed = 42);

}  // namespace amli
