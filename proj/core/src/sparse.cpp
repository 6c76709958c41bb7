#include "amli/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "amli/errors.hpp"
#include "amli/vec.hpp"

namespace amli {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
  if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DimensionError("triplet index out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });

  CsrMatrix a;
  a.rows_ = rows;
  a.cols_ = cols;
  a.row_ptr_.assign(rows + 1, 0);
  a.col_idx_.reserve(entries.size());
  a.values_.reserve(entries.size());

  std::size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < entries.size() && entries[i].row == r) {
      int c = entries[i].col;
      double v = entries[i].value;
      ++i;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;  // duplicates are summed
        ++i;
      }
      a.col_idx_.push_back(c);
      a.values_.push_back(v);
    }
    a.row_ptr_[r + 1] = static_cast<int>(a.col_idx_.size());
  }
  return a;
}

CsrMatrix CsrMatrix::identity(int n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

CsrMatrix CsrMatrix::diagonal(const std::vector<double>& d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (int i = 0; i < static_cast<int>(d.size()); ++i) t.push_back({i, i, d[i]});
  return from_triplets(static_cast<int>(d.size()), static_cast<int>(d.size()), std::move(t));
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double CsrMatrix::at(int i, int j) const {
  if (i < 0 || i >= rows_ || j < 0 || j >= cols_)
    throw DimensionError("index out of range");
  auto begin = col_idx_.begin() + row_ptr_[i];
  auto end = col_idx_.begin() + row_ptr_[i + 1];
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

bool CsrMatrix::is_symmetric(double rel_tol) const {
  if (rows_ != cols_) return false;
  CsrMatrix at_ = transpose(*this);
  double tol = rel_tol * max_abs();
  // Walk both row structures in lockstep; patterns may differ.
  for (int r = 0; r < rows_; ++r) {
    int i = row_ptr_[r], iend = row_ptr_[r + 1];
    int j = at_.row_ptr_[r], jend = at_.row_ptr_[r + 1];
    while (i < iend || j < jend) {
      int ci = i < iend ? col_idx_[i] : cols_;
      int cj = j < jend ? at_.col_idx_[j] : cols_;
      double va = ci <= cj ? values_[i] : 0.0;
      double vb = cj <= ci ? at_.values_[j] : 0.0;
      if (std::abs(va - vb) > tol) return false;
      if (ci <= cj) ++i;
      if (cj <= ci) ++j;
    }
  }
  return true;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != a.cols() || static_cast<int>(y.size()) != a.rows())
    throw DimensionError("spmv dimension mismatch");
  const auto& rp = a.row_ptr();
  const auto& ci = a.col_idx();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (int k = rp[r]; k < rp[r + 1]; ++k) s += v[k] * x[ci[k]];
    y[r] = s;
  }
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows());
  spmv(a, x, y);
  return y;
}

double inf_norm(const CsrMatrix& a) {
  double m = 0.0;
  const auto& rp = a.row_ptr();
  const auto& v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (int k = rp[r]; k < rp[r + 1]; ++k) s += std::abs(v[k]);
    m = std::max(m, s);
  }
  return m;
}

CsrMatrix transpose(const CsrMatrix& a) {
  CsrMatrix t;
  t.rows_ = a.cols_;
  t.cols_ = a.rows_;
  t.row_ptr_.assign(a.cols_ + 1, 0);
  t.col_idx_.resize(a.values_.size());
  t.values_.resize(a.values_.size());

  for (int k = 0; k < a.nnz(); ++k) ++t.row_ptr_[a.col_idx_[k] + 1];
  for (int c = 0; c < a.cols_; ++c) t.row_ptr_[c + 1] += t.row_ptr_[c];

  std::vector<int> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  for (int r = 0; r < a.rows_; ++r) {
    for (int k = a.row_ptr_[r]; k < a.row_ptr_[r + 1]; ++k) {
      int pos = next[a.col_idx_[k]]++;
      t.col_idx_[pos] = r;
      t.values_[pos] = a.values_[k];
    }
  }
  return t;  // columns sorted because rows were visited in order
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols_ != b.rows_) throw DimensionError("multiply dimension mismatch");
  CsrMatrix c;
  c.rows_ = a.rows_;
  c.cols_ = b.cols_;
  c.row_ptr_.assign(a.rows_ + 1, 0);

  // Gustavson row-merge with a dense accumulator.
  std::vector<double> acc(b.cols_, 0.0);
  std::vector<int> marker(b.cols_, -1);
  std::vector<int> row_cols;
  for (int r = 0; r < a.rows_; ++r) {
    row_cols.clear();
    for (int ka = a.row_ptr_[r]; ka < a.row_ptr_[r + 1]; ++ka) {
      int mid = a.col_idx_[ka];
      double va = a.values_[ka];
      for (int kb = b.row_ptr_[mid]; kb < b.row_ptr_[mid + 1]; ++kb) {
        int cc = b.col_idx_[kb];
        if (marker[cc] != r) {
          marker[cc] = r;
          acc[cc] = 0.0;
          row_cols.push_back(cc);
        }
        acc[cc] += va * b.values_[kb];
      }
    }
    std::sort(row_cols.begin(), row_cols.end());
    for (int cc : row_cols) {
      c.col_idx_.push_back(cc);
      c.values_.push_back(acc[cc]);
    }
    c.row_ptr_[r + 1] = static_cast<int>(c.col_idx_.size());
  }
  return c;
}

CsrMatrix add_scaled(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
    throw DimensionError("add dimension mismatch");
  CsrMatrix c;
  c.rows_ = a.rows_;
  c.cols_ = a.cols_;
  c.row_ptr_.assign(a.rows_ + 1, 0);
  for (int r = 0; r < a.rows_; ++r) {
    int i = a.row_ptr_[r], iend = a.row_ptr_[r + 1];
    int j = b.row_ptr_[r], jend = b.row_ptr_[r + 1];
    while (i < iend || j < jend) {
      int ci = i < iend ? a.col_idx_[i] : a.cols_;
      int cj = j < jend ? b.col_idx_[j] : a.cols_;
      int col = std::min(ci, cj);
      double v = 0.0;
      if (ci == col) v += alpha * a.values_[i++];
      if (cj == col) v += beta * b.values_[j++];
      c.col_idx_.push_back(col);
      c.values_.push_back(v);
    }
    c.row_ptr_[r + 1] = static_cast<int>(c.col_idx_.size());
  }
  return c;
}

CsrMatrix permute_symmetric(const CsrMatrix& a, std::span<const int> perm) {
  if (a.rows() != a.cols() || static_cast<int>(perm.size()) != a.rows())
    throw DimensionError("permute_symmetric expects a square matrix and a full permutation");
  std::vector<Triplet> t;
  t.reserve(a.nnz());
  for (int r = 0; r < a.rows(); ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      t.push_back({perm[r], perm[a.col_idx()[k]], a.values()[k]});
    }
  }
  return CsrMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

CsrMatrix submatrix(const CsrMatrix& a, int r0, int r1, int c0, int c1) {
  if (r0 < 0 || r1 > a.rows() || c0 < 0 || c1 > a.cols() || r0 > r1 || c0 > c1)
    throw DimensionError("submatrix range out of bounds");
  std::vector<Triplet> t;
  for (int r = r0; r < r1; ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      int c = a.col_idx()[k];
      if (c >= c0 && c < c1) t.push_back({r - r0, c - c0, a.values()[k]});
    }
  }
  return CsrMatrix::from_triplets(r1 - r0, c1 - c0, std::move(t));
}

std::vector<double> diagonal_of(const CsrMatrix& a) {
  int n = std::min(a.rows(), a.cols());
  std::vector<double> d(n, 0.0);
  for (int r = 0; r < n; ++r) d[r] = a.at(r, r);
  return d;
}

DenseFactor DenseFactor::factor(const CsrMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("factor expects a square matrix");
  int n = a.rows();
  std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r)
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k)
      dense[static_cast<std::size_t>(r) * n + a.col_idx()[k]] = a.values()[k];
  return factor_dense(n, dense);
}

DenseFactor DenseFactor::factor_dense(int n, std::span<const double> row_major) {
  if (static_cast<std::size_t>(n) * n != row_major.size())
    throw DimensionError("factor_dense size mismatch");
  DenseFactor f;
  f.n_ = n;
  f.l_.assign(row_major.begin(), row_major.end());
  auto* l = f.l_.data();
  for (int j = 0; j < n; ++j) {
    double* lj = l + static_cast<std::size_t>(j) * n;
    double d = lj[j];
    for (int k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > 0.0)) {
      throw NotSpdError("Cholesky pivot " + std::to_string(j) +
                            " is nonpositive: matrix is not SPD",
                        j);
    }
    double dj = std::sqrt(d);
    lj[j] = dj;
    for (int i = j + 1; i < n; ++i) {
      double* li = l + static_cast<std::size_t>(i) * n;
      double s = li[j];
      for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / dj;
    }
  }
  // zero out the strict upper triangle so the factor is self-describing
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) f.l_[static_cast<std::size_t>(i) * n + j] = 0.0;
  return f;
}

void DenseFactor::solve_lower_in_place(std::span<double> x) const {
  const double* l = l_.data();
  for (int i = 0; i < n_; ++i) {
    double s = x[i];
    const double* li = l + static_cast<std::size_t>(i) * n_;
    for (int k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
}

void DenseFactor::solve_lower_transpose_in_place(std::span<double> x) const {
  const double* l = l_.data();
  for (int i = n_ - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n_; ++k) s -= l[static_cast<std::size_t>(k) * n_ + i] * x[k];
    x[i] = s / l[static_cast<std::size_t>(i) * n_ + i];
  }
}

void DenseFactor::solve_in_place(std::span<double> x) const {
  if (static_cast<int>(x.size()) != n_) throw DimensionError("solve dimension mismatch");
  solve_lower_in_place(x);
  solve_lower_transpose_in_place(x);
}

std::vector<double> DenseFactor::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

std::vector<double> DenseFactor::apply_lower_transpose(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  const double* l = l_.data();
  for (int i = 0; i < n_; ++i) {
    const double* li = l + static_cast<std::size_t>(i) * n_;
    for (int k = 0; k <= i; ++k) y[k] += li[k] * x[i];
  }
  return y;
}

std::vector<double> DenseFactor::apply_lower(std::span<const double> x) const {
  std::vector<double> y(n_, 0.0);
  const double* l = l_.data();
  for (int i = 0; i < n_; ++i) {
    const double* li = l + static_cast<std::size_t>(i) * n_;
    double s = 0.0;
    for (int k = 0; k <= i; ++k) s += li[k] * x[k];
    y[i] = s;
  }
  return y;
}

LinOp csr_op(const CsrMatrix& a) {
  return [&a](std::span<const double> x, std::span<double> y) { spmv(a, x, y); };
}

std::vector<double> horner_matrix_apply(const MonomialPoly& q, const LinOp& apply_a,
                                        const LinOp& apply_b_inv,
                                        std::span<const double> w) {
  if (q.coeffs.empty()) throw Error("horner_matrix_apply: empty coefficient list");
  std::size_t n = w.size();
  std::vector<double> u(n), t1(n), t2(n);
  int d = q.degree();
  for (std::size_t i = 0; i < n; ++i) u[i] = q.coeffs[d] * w[i];
  for (int j = d - 1; j >= 0; --j) {
    apply_b_inv(u, t1);
    apply_a(t1, t2);
    for (std::size_t i = 0; i < n; ++i) u[i] = t2[i] + q.coeffs[j] * w[i];
  }
  return u;
}

namespace {

EigEstimate lanczos_impl(const LinOp& apply, const DotFn& dot, int n, int iters,
                         std::uint64_t seed) {
  EigEstimate est;
  if (n <= 0) throw DimensionError("lanczos on empty operator");
  iters = std::min(iters, n);
  if (iters < 1) iters = 1;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;

  std::vector<double> v(n), w(n);
  for (double& x : v) x = gauss(rng);
  double nrm = std::sqrt(dot(v, v));
  for (double& x : v) x /= nrm;
  basis.push_back(v);

  for (int j = 0; j < iters; ++j) {
    apply(basis[j], w);
    double aj = dot(w, basis[j]);
    alpha.push_back(aj);
    axpy(-aj, basis[j], w);
    if (j > 0) axpy(-beta[j - 1], basis[j - 1], w);
    // full reorthogonalization, two passes
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) axpy(-dot(w, b), b, w);
    double bj = std::sqrt(std::max(0.0, dot(w, w)));
    est.iterations = j + 1;
    if (j + 1 == iters) break;
    if (bj <= 1e-13 * std::max(1.0, std::abs(aj))) {
      est.breakdown = true;
      break;
    }
    beta.push_back(bj);
    for (double& x : w) x /= bj;
    basis.push_back(w);
  }

  int k = static_cast<int>(alpha.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  Eigen::VectorXd d(k), e(std::max(0, k - 1));
  for (int i = 0; i < k; ++i) d[i] = alpha[i];
  for (int i = 0; i + 1 < k; ++i) e[i] = beta[i];
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  est.low = es.eigenvalues()(0);
  est.high = es.eigenvalues()(k - 1);
  return est;
}

}  // namespace

EigEstimate extreme_eigs(const LinOp& apply, int n, int iters, std::uint64_t seed) {
  DotFn euclid = [](std::span<const double> x, std::span<const double> y) {
    return dot(x, y);
  };
  return lanczos_impl(apply, euclid, n, iters, seed);
}

EigEstimate extreme_eigs_general(const LinOp& apply, const DotFn& custom_dot, int n,
                                 int iters, std::uint64_t seed) {
  return lanczos_impl(apply, custom_dot, n, iters, seed);
}

}  // namespace amli
