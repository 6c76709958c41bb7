#include <doctest.h>

#include <cmath>
#include <random>

#include "amli/analysis.hpp"
#include "amli/errors.hpp"
#include "amli/hierarchy.hpp"
#include "amli/precond.hpp"
#include "amli/vec.hpp"
#include "oracles.hpp"

using namespace amli;

namespace {

// Gauss-Seidel smoother plus a random full-rank transfer over a random SPD
// matrix: the standard dense playground for the two-level identities.
struct DensePair {
  CsrMatrix a;
  Eigen::MatrixXd ad, pd;
  CsrMatrix p;
};

DensePair make_pair(int n, int nh, std::mt19937_64& rng) {
  DensePair dp;
  dp.ad = oracle::random_spd(n, 15.0, rng);
  dp.a = oracle::dense_to_csr(dp.ad);
  std::normal_distribution<double> gauss(0.0, 1.0);
  dp.pd = Eigen::MatrixXd(n, nh);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nh; ++j) dp.pd(i, j) = gauss(rng);
  dp.p = oracle::dense_to_csr(dp.pd);
  return dp;
}

}  // namespace

TEST_CASE("symmetrized smoother action") {
  std::mt19937_64 rng(61);

  SUBCASE("exact smoother reduces to the inverse") {
    Eigen::MatrixXd ad = oracle::random_spd(12, 8.0, rng);
    CsrMatrix a = oracle::dense_to_csr(ad);
    Smoother m = build_smoother(a, SmootherKind::Exact);
    std::vector<double> x(12);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : x) v = gauss(rng);
    auto got = symmetrized_smoother_apply(m, a, x);
    Eigen::Map<Eigen::VectorXd> xv(x.data(), 12);
    Eigen::VectorXd want = ad.inverse() * xv;
    for (int i = 0; i < 12; ++i) CHECK(got[i] == doctest::Approx(want(i)).epsilon(1e-10));
  }

  SUBCASE("diagonal pair reduces to the scalar formula 2/m - a/m^2") {
    CsrMatrix a = CsrMatrix::diagonal({1.0, 2.5, 0.7});
    CsrMatrix mdiag = CsrMatrix::diagonal({2.0, 3.0, 1.1});
    Smoother m = build_smoother(mdiag, SmootherKind::Exact);
    std::vector<double> x = {1.0, 1.0, 1.0};
    auto got = symmetrized_smoother_apply(m, a, x);
    std::vector<double> mv = {2.0, 3.0, 1.1}, av = {1.0, 2.5, 0.7};
    for (int i = 0; i < 3; ++i) {
      double want = 2.0 / mv[i] - av[i] / (mv[i] * mv[i]);
      CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
    }
  }

  SUBCASE("dense identity and definiteness") {
    int n = 40;
    Eigen::MatrixXd ad = oracle::random_spd(n, 25.0, rng);
    CsrMatrix a = oracle::dense_to_csr(ad);
    Smoother m = build_smoother(a, SmootherKind::GaussSeidel);
    Eigen::MatrixXd mbar_inv = oracle::assemble_op(
        [&](std::span<const double> x, std::span<double> y) {
          auto r = symmetrized_smoother_apply(m, a, x);
          copy(r, y);
        },
        n);
    Eigen::MatrixXd md = ad.triangularView<Eigen::Lower>();
    Eigen::MatrixXd minv = md.inverse();
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd two_sweeps = (id - minv.transpose() * ad) * (id - minv * ad);
    CHECK((id - mbar_inv * ad - two_sweeps).norm() <= 1e-11 * two_sweeps.norm());

    // Mbar is SPD because M + M^T - A = diag(A) is
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (mbar_inv + mbar_inv.transpose()), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()(0) > 0.0);
  }
}

TEST_CASE("two-level preconditioner equals its closed form") {
  std::mt19937_64 rng(71);
  int n = 40, nh = 17;
  DensePair dp = make_pair(n, nh, rng);

  TwoLevelConfig cfg;
  cfg.a = &dp.a;
  cfg.m = build_smoother(dp.a, SmootherKind::GaussSeidel);
  cfg.p = dp.p;
  cfg.coarse = CoarseKind::ExactSolve;
  TwoLevel tl(cfg);

  Eigen::MatrixXd b_inv = oracle::assemble_op(tl.op(), n);

  Eigen::MatrixXd md = dp.ad.triangularView<Eigen::Lower>();
  Eigen::MatrixXd minv = md.inverse();
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd mbar_inv = minv + minv.transpose() - minv.transpose() * dp.ad * minv;
  Eigen::MatrixXd ah = dp.pd.transpose() * dp.ad * dp.pd;
  Eigen::MatrixXd closed =
      mbar_inv + (id - minv.transpose() * dp.ad) * dp.pd * ah.inverse() *
                     dp.pd.transpose() * (id - dp.ad * minv);
  CHECK((b_inv - closed).norm() <= 1e-11 * closed.norm());
  CHECK((b_inv - b_inv.transpose()).norm() <= 1e-11 * b_inv.norm());

  // zero in, zero out
  std::vector<double> zero(n, 0.0);
  auto out = tl.apply(zero);
  CHECK(norm2(out) == 0.0);

  // exact smoother turns the preconditioner into the exact inverse
  TwoLevelConfig ecfg = cfg;
  ecfg.m = build_smoother(dp.a, SmootherKind::Exact);
  TwoLevel etl(std::move(ecfg));
  Eigen::MatrixXd be = oracle::assemble_op(etl.op(), n);
  CHECK((be * dp.ad - id).norm() < 1e-9);
}

TEST_CASE("two-level preconditioner with a stabilized coarse solve") {
  std::mt19937_64 rng(67);
  int n = 36, nh = 15;
  DensePair dp = make_pair(n, nh, rng);
  Eigen::MatrixXd ah = dp.pd.transpose() * dp.ad * dp.pd;
  Eigen::MatrixXd bh = ah + 0.2 * oracle::random_spd(nh, 3.0, rng);
  Eigen::MatrixXd bh_inv_d = bh.inverse();

  TwoLevelConfig cfg;
  cfg.a = &dp.a;
  cfg.m = build_smoother(dp.a, SmootherKind::GaussSeidel);
  cfg.p = dp.p;
  cfg.coarse = CoarseKind::Stabilized;
  cfg.bh_inv = [&](std::span<const double> x, std::span<double> y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), nh);
    Eigen::VectorXd r = bh_inv_d * xv;
    for (int i = 0; i < nh; ++i) y[i] = r(i);
  };
  cfg.q = MonomialPoly{{0.9, 0.4, -0.1}};
  MonomialPoly q = cfg.q;
  TwoLevel tl(std::move(cfg));

  Eigen::MatrixXd got = oracle::assemble_op(tl.op(), n);
  Eigen::MatrixXd md = dp.ad.triangularView<Eigen::Lower>();
  Eigen::MatrixXd minv = md.inverse();
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd bth_inv = bh_inv_d * oracle::mat_poly(q, ah * bh_inv_d);
  Eigen::MatrixXd want =
      minv + minv.transpose() - minv.transpose() * dp.ad * minv +
      (id - minv.transpose() * dp.ad) * dp.pd * bth_inv * dp.pd.transpose() *
          (id - dp.ad * minv);
  CHECK((got - want).norm() <= 1e-11 * want.norm());
}

TEST_CASE("stabilized coarse correction follows the Horner order") {
  std::mt19937_64 rng(73);

  SUBCASE("constant 1 leaves the initial preconditioner unchanged") {
    Eigen::MatrixXd bh = oracle::random_spd(9, 6.0, rng);
    Eigen::MatrixXd bh_inv = bh.inverse();
    LinOp bh_op = [&](std::span<const double> x, std::span<double> y) {
      Eigen::Map<const Eigen::VectorXd> xv(x.data(), 9);
      Eigen::VectorXd r = bh_inv * xv;
      for (int i = 0; i < 9; ++i) y[i] = r(i);
    };
    CsrMatrix ah = oracle::dense_to_csr(oracle::random_spd(9, 4.0, rng));
    std::vector<double> r(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : r) v = gauss(rng);
    auto got = amli_coarse_stabilize(bh_op, csr_op(ah), MonomialPoly{{1.0}}, r);
    std::vector<double> want(9);
    bh_op(r, want);
    for (int i = 0; i < 9; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
  }

  SUBCASE("diagonal operators match the scalar expression q(a/b)/b") {
    std::uniform_real_distribution<double> unif(0.5, 2.5);
    int n = 8;
    std::vector<double> av(n), bv(n), r(n);
    for (int i = 0; i < n; ++i) {
      av[i] = unif(rng);
      bv[i] = unif(rng);
      r[i] = unif(rng) - 1.5;
    }
    CsrMatrix ah = CsrMatrix::diagonal(av);
    LinOp bh_op = [&](std::span<const double> x, std::span<double> y) {
      for (int i = 0; i < n; ++i) y[i] = x[i] / bv[i];
    };
    MonomialPoly q{{0.4, 0.3, -0.2}};
    auto got = amli_coarse_stabilize(bh_op, csr_op(ah), q, r);
    for (int i = 0; i < n; ++i) {
      double want = q.eval(av[i] / bv[i]) / bv[i] * r[i];
      CHECK(got[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("high-degree best approximation recovers the exact inverse") {
    Eigen::MatrixXd ahd = oracle::random_spd(10, 1.08, rng);  // spectrum in [1, 1.08]
    CsrMatrix ah = oracle::dense_to_csr(ahd);
    CsrMatrix eye10 = CsrMatrix::identity(10);
    LinOp bh_op = csr_op(eye10);  // B_H = I
    SpectralInterval s = spectral_params(0.98, 1.10);
    MonomialPoly q = best_q(6, s);
    std::vector<double> r(10);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : r) v = gauss(rng);
    auto got = amli_coarse_stabilize(bh_op, csr_op(ah), q, r);
    Eigen::Map<Eigen::VectorXd> rv(r.data(), 10);
    Eigen::VectorXd want = ahd.inverse() * rv;
    double scale = want.norm();
    for (int i = 0; i < 10; ++i) CHECK(std::abs(got[i] - want(i)) <= 1e-6 * scale);
  }
}

TEST_CASE("multilevel apply against the dense block factorization") {
  BuildOptions opts;

  SUBCASE("one level, constant polynomial") {
    ProblemStructure ps = gen_poisson(1, 1, 7);  // n = 15
    Hierarchy h = build_hierarchy(ps, CycleSpec::v_cycle(1, PolyFamily::BestApprox), opts);
    AmliPrecond pc(h);
    Eigen::MatrixXd got = oracle::assemble_op(pc.op(), 15);
    Eigen::MatrixXd want = oracle::dense_amli_inverse(h, 1);
    CHECK((got - want).norm() <= 1e-10 * want.norm());
  }

  SUBCASE("two levels, every cycle degree up to three") {
    ProblemStructure ps = gen_poisson(1, 2, 7);  // 31 unknowns at the top
    for (int nu1 : {1, 2, 3}) {
      CycleSpec cyc;
      cyc.nus = {nu1, 1};
      cyc.family = PolyFamily::BestApprox;
      Hierarchy h = build_hierarchy(ps, cyc, opts);
      AmliPrecond pc(h);
      Eigen::MatrixXd got = oracle::assemble_op(pc.op(), h.finest_n());
      Eigen::MatrixXd want = oracle::dense_amli_inverse(h, 2);
      CHECK((got - want).norm() <= 1e-10 * want.norm());
    }
  }

  SUBCASE("apply is linear and the operator symmetric positive definite") {
    ProblemStructure ps = gen_poisson(2, 2, 2);  // 121 unknowns
    Hierarchy h = build_hierarchy(ps, CycleSpec::w_cycle(2, PolyFamily::BestApprox), opts);
    int n = h.finest_n();
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(n), y(n), xy(n);
    for (int i = 0; i < n; ++i) {
      x[i] = gauss(rng);
      y[i] = gauss(rng);
      xy[i] = 0.75 * x[i] - 1.5 * y[i];
    }
    auto bx = amli_apply(h, x);
    auto by = amli_apply(h, y);
    auto bxy = amli_apply(h, xy);
    double scale = norm2(bxy);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(bxy[i] - (0.75 * bx[i] - 1.5 * by[i])) <= 1e-12 * scale);

    Eigen::MatrixXd b_inv = oracle::assemble_op(AmliPrecond(h).op(), n);
    CHECK((b_inv - b_inv.transpose()).norm() <= 1e-10 * b_inv.norm());
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (b_inv + b_inv.transpose()));
    CHECK(llt.info() == Eigen::Success);
  }

  SUBCASE("exact family reproduces the per-level exact two-level method") {
    ProblemStructure ps = gen_poisson(1, 2, 5);
    Hierarchy h = build_hierarchy(ps, CycleSpec::v_cycle(2, PolyFamily::Exact), opts);
    Eigen::MatrixXd got = oracle::assemble_op(AmliPrecond(h).op(), h.finest_n());
    Eigen::MatrixXd want = oracle::dense_amli_inverse(h, 2);
    CHECK((got - want).norm() <= 1e-10 * want.norm());
  }

  SUBCASE("interpolating the inverse exactly gives the exact two-level method") {
    // diagonal test family: eigenvalues of B^{(1)^{-1}} A^{(1)} are known, so
    // a Lagrange interpolant of 1/x at them makes the stabilization exact
    ProblemStructure ps = gen_poisson(1, 2, 3);
    BuildOptions gopts;
    gopts.rho_mode = RhoMode::Given;
    gopts.given_rho = {{1.0, 1.0}, {1.0, 1.0}};
    CycleSpec cyc;
    cyc.nus = {1, 1};
    cyc.family = PolyFamily::Identity;
    Hierarchy h = build_hierarchy(ps, cyc, gopts);

    // eigenvalues of B^{(1)^{-1}} A^{(1)}
    Eigen::MatrixXd b1_inv = oracle::dense_amli_inverse(h, 1);
    Eigen::MatrixXd a1 = oracle::csr_to_dense(h.levels[0].a);
    Eigen::MatrixXd x = b1_inv * a1;
    Eigen::VectorXcd evc = x.eigenvalues();
    std::vector<double> ev(evc.size());
    for (int i = 0; i < evc.size(); ++i) ev[i] = evc(i).real();
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             ev.end());

    // Lagrange interpolation of 1/x at the distinct eigenvalues
    int m = static_cast<int>(ev.size());
    Eigen::MatrixXd vand(m, m);
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
      double p = 1.0;
      for (int j = 0; j < m; ++j) {
        vand(i, j) = p;
        p *= ev[i];
      }
      rhs(i) = 1.0 / ev[i];
    }
    Eigen::VectorXd coef = vand.fullPivLu().solve(rhs);
    h.levels[1].nu = m;
    h.levels[1].q = MonomialPoly{std::vector<double>(coef.data(), coef.data() + m)};

    // the stabilized level now inverts A^{(1)} exactly: B^{(2)} equals the
    // two-level method with an exact coarse solve
    Eigen::MatrixXd got = oracle::assemble_op(AmliPrecond(h).op(), h.finest_n());
    Hierarchy hx = build_hierarchy(ps, CycleSpec::v_cycle(2, PolyFamily::Exact), opts);
    Eigen::MatrixXd want = oracle::assemble_op(AmliPrecond(hx).op(), h.finest_n());
    CHECK((got - want).norm() <= 1e-8 * want.norm());
  }
}

TEST_CASE("f-smoothing level application") {
  std::mt19937_64 rng(83);
  int n = 31;
  ProblemStructure ps = gen_poisson(1, 1, 15);
  BuildOptions opts;
  opts.smoother = SmootherKind::Exact;  // C11 = A11
  Hierarchy h = build_structure(ps, opts);
  const Level& lv = h.levels[0];
  int n1 = lv.n_fine, n2 = lv.n_coarse;

  Eigen::MatrixXd a11 = oracle::csr_to_dense(lv.a11);
  Eigen::MatrixXd at12 = oracle::csr_to_dense(lv.at12);
  Eigen::MatrixXd at21 = oracle::csr_to_dense(lv.at21);
  Eigen::MatrixXd ac = oracle::csr_to_dense(h.coarse_a);
  Eigen::MatrixXd atilde(n, n);
  atilde.block(0, 0, n1, n1) = a11;
  atilde.block(0, n1, n1, n2) = at12;
  atilde.block(n1, 0, n2, n1) = at21;
  atilde.block(n1, n1, n2, n2) = ac;

  SUBCASE("exact blocks and the exact Schur complement invert Atilde") {
    Eigen::MatrixXd schur = ac - at21 * a11.inverse() * at12;
    Eigen::MatrixXd schur_inv = schur.inverse();
    LinOp z_inv = [&](std::span<const double> x, std::span<double> y) {
      Eigen::Map<const Eigen::VectorXd> xv(x.data(), n2);
      Eigen::VectorXd r = schur_inv * xv;
      for (int i = 0; i < n2; ++i) y[i] = r(i);
    };
    Eigen::MatrixXd bt_inv = oracle::assemble_op(
        [&](std::span<const double> x, std::span<double> y) {
          auto r = f_smoothing_apply(lv.c11, lv.at12, lv.at21, z_inv, x);
          copy(r, y);
        },
        n);
    CHECK((bt_inv * atilde - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-10);
  }

  SUBCASE("the explicit sum form and the smoother form agree") {
    Eigen::MatrixXd z = oracle::random_spd(n2, 5.0, rng);
    Eigen::MatrixXd z_inv_d = z.inverse();
    LinOp z_inv = [&](std::span<const double> x, std::span<double> y) {
      Eigen::Map<const Eigen::VectorXd> xv(x.data(), n2);
      Eigen::VectorXd r = z_inv_d * xv;
      for (int i = 0; i < n2; ++i) y[i] = r(i);
    };
    Eigen::MatrixXd got = oracle::assemble_op(
        [&](std::span<const double> x, std::span<double> y) {
          auto r = f_smoothing_apply(lv.c11, lv.at12, lv.at21, z_inv, x);
          copy(r, y);
        },
        n);

    // M^{-1} + (I - M^{-T} Atilde) P Z^{-1} P^T (I - Atilde M^{-1}) with
    // M^{-1} = [[C11^{-1}, 0], [0, 0]] and P = [0; I]
    Eigen::MatrixXd minv = Eigen::MatrixXd::Zero(n, n);
    minv.block(0, 0, n1, n1) = a11.inverse();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n2);
    p.block(n1, 0, n2, n2) = Eigen::MatrixXd::Identity(n2, n2);
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd want = minv + (id - minv.transpose() * atilde) * p * z_inv_d *
                                      p.transpose() * (id - atilde * minv);
    CHECK((got - want).norm() <= 1e-11 * want.norm());

    // coarse-only input: the fine-smoothing term vanishes and what is left is
    // the correction term [-C11^{-1} At12; I] Z^{-1} x2
    std::vector<double> x(n, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = n1; i < n; ++i) x[i] = gauss(rng);
    auto r = f_smoothing_apply(lv.c11, lv.at12, lv.at21, z_inv, x);
    Eigen::Map<Eigen::VectorXd> x2(x.data() + n1, n2);
    Eigen::VectorXd y2 = z_inv_d * x2;
    Eigen::VectorXd y1 = -a11.inverse() * at12 * y2;
    for (int i = 0; i < n1; ++i) CHECK(r[i] == doctest::Approx(y1(i)).epsilon(1e-11));
    for (int i = 0; i < n2; ++i) CHECK(r[n1 + i] == doctest::Approx(y2(i)).epsilon(1e-11));
  }
}

TEST_CASE("preconditioned conjugate gradients") {
  SUBCASE("identity system converges immediately") {
    CsrMatrix a = CsrMatrix::identity(5);
    std::vector<double> b = {1, 2, 3, 4, 5};
    SolveReport rep = pcg_solve(a, b, csr_op(a), 1e-12, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (int i = 0; i < 5; ++i) CHECK(rep.solution[i] == doctest::Approx(b[i]));
  }

  SUBCASE("tol = 1 stops before the first iteration") {
    CsrMatrix a = oracle::dense_to_csr(
        (Eigen::MatrixXd(2, 2) << 2, -1, -1, 2).finished());
    CsrMatrix eye = CsrMatrix::identity(2);
    SolveReport rep = pcg_solve(a, std::vector<double>{1.0, 1.0}, csr_op(eye), 1.0, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
    CHECK(rep.residual_history.size() == 1);
  }

  SUBCASE("condition estimate recovers kappa of a known diagonal") {
    std::vector<double> diag(10);
    for (int i = 0; i < 10; ++i) diag[i] = i + 1.0;
    CsrMatrix a = CsrMatrix::diagonal(diag);
    std::vector<double> b(10, 1.0);
    CsrMatrix eye = CsrMatrix::identity(10);
    SolveReport rep = pcg_solve(a, b, csr_op(eye), 1e-12, 50);
    CHECK(rep.converged);
    CHECK(std::abs(rep.kappa_estimate - 10.0) <= 0.5);
  }

  SUBCASE("iteration counts: unpreconditioned grows, two-level stays flat") {
    auto run = [](int n0, int levels, PolyFamily fam, bool precond) {
      ProblemStructure ps = gen_poisson(1, levels, n0);
      BuildOptions opts;
      Hierarchy h = build_hierarchy(ps, CycleSpec::v_cycle(levels, fam), opts);
      const CsrMatrix& a = h.finest();
      std::vector<double> b(a.rows(), 1.0);
      CsrMatrix eye = CsrMatrix::identity(a.rows());
      AmliPrecond apc(h);
      SolveReport rep =
          pcg_solve(a, b, precond ? apc.op() : csr_op(eye), 1e-8, 2000);
      REQUIRE(rep.converged);
      return rep.iterations;
    };
    int plain15 = run(7, 1, PolyFamily::Exact, false);
    int plain31 = run(15, 1, PolyFamily::Exact, false);
    int plain63 = run(31, 1, PolyFamily::Exact, false);
    CHECK(plain15 < plain31);
    CHECK(plain31 < plain63);

    int tl15 = run(7, 1, PolyFamily::Exact, true);
    int tl31 = run(15, 1, PolyFamily::Exact, true);
    int tl63 = run(31, 1, PolyFamily::Exact, true);
    CHECK(std::abs(tl31 - tl15) <= 2);
    CHECK(std::abs(tl63 - tl31) <= 2);
  }

  SUBCASE("energy norm of the error decreases monotonically") {
    std::mt19937_64 rng(97);
    Eigen::MatrixXd ad = oracle::random_spd(30, 80.0, rng);
    CsrMatrix a = oracle::dense_to_csr(ad);
    Eigen::VectorXd xstar(30);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < 30; ++i) xstar(i) = gauss(rng);
    Eigen::VectorXd bv = ad * xstar;
    std::vector<double> b(bv.data(), bv.data() + 30);
    CsrMatrix eye30 = CsrMatrix::identity(30);

    // rerun PCG to each truncation point and measure ||x - x*||_A
    double prev = std::sqrt(xstar.dot(ad * xstar));
    for (int it = 1; it <= 12; ++it) {
      SolveReport rep = pcg_solve(a, b, csr_op(eye30), 0.0, it);
      Eigen::Map<Eigen::VectorXd> xv(rep.solution.data(), 30);
      Eigen::VectorXd e = xstar - xv;
      double en = std::sqrt(e.dot(ad * e));
      CHECK(en <= prev * (1.0 + 1e-12));
      prev = en;
    }
  }

  SUBCASE("indefinite matrices are reported") {
    CsrMatrix a = CsrMatrix::diagonal({1.0, -1.0});
    CsrMatrix eye = CsrMatrix::identity(2);
    std::vector<double> b = {1.0, 1.0};
    CHECK_THROWS_AS(pcg_solve(a, b, csr_op(eye), 1e-8, 10), IndefiniteOperatorError);
  }

  SUBCASE("running out of iterations reports converged = false") {
    ProblemStructure ps = gen_poisson(1, 1, 31);
    CsrMatrix a = ps.finest;
    std::vector<double> b(a.rows(), 1.0);
    CsrMatrix eye = CsrMatrix::identity(a.rows());
    SolveReport rep = pcg_solve(a, b, csr_op(eye), 1e-12, 3);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 3);
  }
}
