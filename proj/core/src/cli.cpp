#include "amli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "amli/analysis.hpp"
#include "amli/errors.hpp"
#include "amli/hierarchy.hpp"
#include "amli/mmio.hpp"
#include "amli/poly.hpp"
#include "amli/precond.hpp"
#include "amli/reports.hpp"
#include "amli/sparse.hpp"

namespace amli {

namespace {

using nlohmann::json;

std::string path_join(const std::string& dir, const std::string& file) {
  if (dir.empty() || dir == ".") return file;
  return dir + "/" + file;
}

PolyFamily parse_family(const std::string& s) {
  if (s == "bestapprox") return PolyFamily::BestApprox;
  if (s == "chebyshev") return PolyFamily::Chebyshev;
  if (s == "exact") return PolyFamily::Exact;
  if (s == "identity") return PolyFamily::Identity;
  throw ConfigError("unknown family '" + s + "'");
}

SmootherKind parse_smoother(const std::string& s) {
  if (s == "sgs") return SmootherKind::SymGaussSeidel;
  if (s == "jacobi") return SmootherKind::Jacobi;
  if (s == "gs") return SmootherKind::GaussSeidel;
  if (s == "exact") return SmootherKind::Exact;
  throw ConfigError("unknown smoother '" + s + "'");
}

RhoMode parse_rho_mode(const std::string& s) {
  if (s == "theory") return RhoMode::Theory;
  if (s == "measure") return RhoMode::Measure;
  if (s == "given") return RhoMode::Given;
  throw ConfigError("unknown rho_mode '" + s + "'");
}

std::vector<int> effective_cycle(const RunConfig& c, int levels) {
  if (c.cycle_preset == "v") {
    return std::vector<int>(levels, 1);
  }
  if (c.cycle_preset == "w") {
    std::vector<int> nus(levels, 2);
    nus.back() = 1;
    return nus;
  }
  if (c.cycle_preset != "custom")
    throw ConfigError("cycle_preset must be v, w or custom");
  if (static_cast<int>(c.cycle.size()) != levels)
    throw ConfigError("explicit cycle must list one degree per level");
  return c.cycle;
}

ProblemStructure load_problem(const RunConfig& c) {
  if (c.problem == "poisson1d") return gen_poisson(1, c.levels, c.n0);
  if (c.problem == "poisson2d") return gen_poisson(2, c.levels, c.n0);
  if (c.problem == "mtx") {
    if (c.matrix_path.empty()) throw ConfigError("problem=mtx needs matrix_path");
    if (c.splitting_paths.empty())
      throw ConfigError("problem=mtx needs one splitting file per level");
    CsrMatrix a = read_matrix_market(c.matrix_path);
    std::vector<std::vector<int>> sets;
    sets.reserve(c.splitting_paths.size());
    for (const auto& p : c.splitting_paths) sets.push_back(read_index_list(p));
    return structure_from_matrix(std::move(a), sets);
  }
  throw ConfigError("unknown problem '" + c.problem + "'");
}

BuildOptions build_options(const RunConfig& c) {
  BuildOptions o;
  o.smoother = parse_smoother(c.smoother);
  o.omega = c.omega;
  o.rho_mode = parse_rho_mode(c.rho_mode);
  for (auto& t : c.thetas) o.thetas.push_back({t[0], t[1]});
  for (auto& r : c.rhos) o.given_rho.push_back({r[0], r[1]});
  o.coarse_limit = c.coarse_limit;
  o.measure_iters = c.measure_iters;
  o.seed = c.seed;
  return o;
}

CustomPolynomial coeffs_document_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("coefficient document parse error: ") + e.what());
  }
  CustomPolynomial cp;
  try {
    cp.lambda_min = j.at("lambda_min").get<double>();
    cp.lambda_max = j.at("lambda_max").get<double>();
    cp.q.coeffs = j.at("coeffs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed coefficient document: ") + e.what());
  }
  return cp;
}

bool want_csv(const RunConfig& c) { return c.format == "csv" || c.format == "both"; }
bool want_json(const RunConfig& c) { return c.format == "json" || c.format == "both"; }

}  // namespace

// --- config serialization ------------------------------------------------------

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("command", c.command);
  get("seed", c.seed);
  get("out_dir", c.out_dir);
  get("format", c.format);
  get("problem", c.problem);
  get("levels", c.levels);
  get("n0", c.n0);
  get("matrix_path", c.matrix_path);
  get("splitting_paths", c.splitting_paths);
  get("cycle", c.cycle);
  get("cycle_preset", c.cycle_preset);
  if (j.contains("cycle") && !j.contains("cycle_preset")) c.cycle_preset = "custom";
  get("family", c.family);
  get("smoother", c.smoother);
  get("omega", c.omega);
  get("rho_mode", c.rho_mode);
  get("thetas", c.thetas);
  get("rhos", c.rhos);
  get("coarse_limit", c.coarse_limit);
  get("measure_iters", c.measure_iters);
  get("tol", c.tol);
  get("maxit", c.maxit);
  get("rhs", c.rhs);
  get("q_coeffs_paths", c.q_coeffs_paths);
  get("lambda_min", c.lambda_min);
  get("lambda_max", c.lambda_max);
  get("degrees", c.degrees);
  get("mu", c.mu);
  get("scan_grid", c.scan_grid);
  get("kappa_bar_grid", c.kappa_bar_grid);
  get("verify_n", c.verify_n);
  get("perturb", c.perturb);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  JsonWriter w;
  w.begin_object();
  w.key("command").value(c.command);
  w.key("seed").value(static_cast<long long>(c.seed));
  w.key("out_dir").value(c.out_dir);
  w.key("format").value(c.format);
  w.key("problem").value(c.problem);
  w.key("levels").value(c.levels);
  w.key("n0").value(c.n0);
  w.key("matrix_path").value(c.matrix_path);
  w.key("splitting_paths").begin_array();
  for (auto& p : c.splitting_paths) w.value(p);
  w.end_array();
  w.key("cycle").value_array(c.cycle);
  w.key("cycle_preset").value(c.cycle_preset);
  w.key("family").value(c.family);
  w.key("smoother").value(c.smoother);
  w.key("omega").value(c.omega);
  w.key("rho_mode").value(c.rho_mode);
  w.key("thetas").begin_array();
  for (auto& t : c.thetas) {
    w.begin_array();
    w.value(t[0]).value(t[1]);
    w.end_array();
  }
  w.end_array();
  w.key("rhos").begin_array();
  for (auto& r : c.rhos) {
    w.begin_array();
    w.value(r[0]).value(r[1]);
    w.end_array();
  }
  w.end_array();
  w.key("coarse_limit").value(c.coarse_limit);
  w.key("measure_iters").value(c.measure_iters);
  w.key("tol").value(c.tol);
  w.key("maxit").value(c.maxit);
  w.key("rhs").value(c.rhs);
  w.key("q_coeffs_paths").begin_array();
  for (auto& p : c.q_coeffs_paths) w.value(p);
  w.end_array();
  w.key("lambda_min").value(c.lambda_min);
  w.key("lambda_max").value(c.lambda_max);
  w.key("degrees").value_array(c.degrees);
  w.key("mu").value(c.mu);
  w.key("scan_grid").value(c.scan_grid);
  w.key("kappa_bar_grid").value_array(c.kappa_bar_grid);
  w.key("verify_n").value(c.verify_n);
  w.key("perturb").value(c.perturb);
  w.end_object();
  return w.str();
}

// --- poly ----------------------------------------------------------------------

int cmd_poly(const RunConfig& c) {
  SpectralInterval s = spectral_params(c.lambda_min, c.lambda_max);
  std::string csv = "degree,error,n_extrema,positivity,damping\n";

  std::printf("best uniform approximation to 1/x on [%g, %g]  (kappa = %g)\n",
              s.lambda_min, s.lambda_max, s.kappa);
  JsonWriter rep;
  rep.begin_object();
  rep.key("lambda_min").value(s.lambda_min);
  rep.key("lambda_max").value(s.lambda_max);
  rep.key("kappa").value(s.kappa);
  rep.key("mu").value(c.mu);
  rep.key("rows").begin_array();

  for (int m : c.degrees) {
    MonomialPoly q = best_q(m, s);
    double err = best_error(m, s);
    auto extrema = equioscillation_points(
        [&](double x) { return 1.0 / x - best_q_closed_eval(m, s, x); }, s,
        c.scan_grid);

    bool have_mu = c.mu > 1.0;
    bool positive = have_mu && m >= 1 ? positivity_holds(m, c.mu) : true;
    double damping = have_mu && m >= 1 ? damping_bound(m, c.mu) : 0.0;

    if (want_json(c)) {
      write_text_file(path_join(c.out_dir, "poly_m" + std::to_string(m) + ".json"),
                      coeffs_to_json(s, q, err) + "\n");
    }

    rep.begin_object();
    rep.key("degree").value(m);
    rep.key("coeffs").value_array(q.coeffs);
    rep.key("error").value(err);
    rep.key("extrema").begin_array();
    for (auto& ex : extrema) {
      rep.begin_object();
      rep.key("x").value(ex.x);
      rep.key("error").value(ex.error);
      rep.end_object();
    }
    rep.end_array();
    if (have_mu && m >= 1) {
      rep.key("positivity").value(positive);
      rep.key("damping_bound").value(damping);
    }
    rep.end_object();

    csv += fmt_int(m) + "," + fmt_double(err) + "," + fmt_int((long long)extrema.size()) +
           "," + (have_mu && m >= 1 ? std::string(positive ? "1" : "0") : std::string()) +
           "," + (have_mu && m >= 1 ? fmt_double(damping) : std::string()) + "\n";

    std::printf("  m=%-2d  error=%-22.15g extrema=%zu", m, err, extrema.size());
    if (have_mu && m >= 1)
      std::printf("  positive=%s  damping<=%.15g", positive ? "yes" : "no", damping);
    std::printf("\n");
  }
  rep.end_array();
  rep.end_object();

  if (want_json(c))
    write_text_file(path_join(c.out_dir, "poly_report.json"), rep.str() + "\n");
  if (want_csv(c)) write_text_file(path_join(c.out_dir, "poly_table.csv"), csv);
  return 0;
}

// --- solve ---------------------------------------------------------------------

int cmd_solve(const RunConfig& c) {
  ProblemStructure ps = load_problem(c);
  int levels = static_cast<int>(ps.splits.size());
  CycleSpec cyc;
  cyc.nus = effective_cycle(c, levels);
  cyc.family = parse_family(c.family);
  BuildOptions opts = build_options(c);

  Hierarchy h = build_hierarchy(ps, cyc, opts);
  if (!c.q_coeffs_paths.empty()) {
    std::vector<CustomPolynomial> polys;
    for (const auto& p : c.q_coeffs_paths)
      polys.push_back(coeffs_document_from_json(read_text_file(p)));
    attach_custom_polynomials(h, polys);
  }
  const CsrMatrix& a = h.finest();

  std::vector<double> b(a.rows(), 1.0);
  if (c.rhs == "random") {
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : b) x = gauss(rng);
  } else if (c.rhs != "ones") {
    throw ConfigError("rhs must be 'ones' or 'random'");
  }

  AmliPrecond pc(h);
  SolveReport rep = pcg_solve(a, b, pc.op(), c.tol, c.maxit);

  std::printf("n=%d levels=%d family=%s cycle=%s: %s in %d iterations, kappa_est=%.6g\n",
              a.rows(), levels, c.family.c_str(), c.cycle_preset.c_str(),
              rep.converged ? "converged" : "NOT converged", rep.iterations,
              rep.kappa_estimate);

  if (want_csv(c)) {
    std::string csv = "iteration,residual,kappa_est\n";
    for (std::size_t i = 0; i < rep.residual_history.size(); ++i) {
      csv += fmt_int((long long)i) + "," + fmt_double(rep.residual_history[i]) + "," +
             fmt_double(rep.kappa_history[i]) + "\n";
    }
    write_text_file(path_join(c.out_dir, "residuals.csv"), csv);
  }
  if (want_json(c)) {
    JsonWriter w;
    w.begin_object();
    w.key("n").value(a.rows());
    w.key("levels").value(levels);
    w.key("family").value(c.family);
    w.key("cycle").value_array(h.cycle.nus);
    w.key("smoother").value(c.smoother);
    w.key("rho_mode").value(c.rho_mode);
    w.key("tol").value(c.tol);
    w.key("seed").value(static_cast<long long>(c.seed));
    w.key("iterations").value(rep.iterations);
    w.key("converged").value(rep.converged);
    w.key("kappa_estimate").value(rep.kappa_estimate);
    w.key("residual_initial").value(rep.residual_history.front());
    w.key("residual_final").value(rep.residual_history.back());
    w.key("coarse_solves_per_apply").value(static_cast<long long>(pc.last_coarse_solves()));
    w.key("rho_used").begin_array();
    for (auto& r : h.rho_used) {
      w.begin_array();
      w.value(r.first).value(r.second);
      w.end_array();
    }
    w.end_array();
    w.end_object();
    write_text_file(path_join(c.out_dir, "solve_summary.json"), w.str() + "\n");
  }
  return rep.converged ? 0 : 3;
}

// --- analyze -------------------------------------------------------------------

int cmd_analyze(const RunConfig& c) {
  std::vector<std::pair<double, double>> thetas;
  for (auto& t : c.thetas) thetas.push_back({t[0], t[1]});

  int levels = c.levels;
  if (thetas.empty()) {
    // measure the approximation constants from the configured problem
    ProblemStructure ps = load_problem(c);
    levels = static_cast<int>(ps.splits.size());
    BuildOptions opts = build_options(c);
    Hierarchy h = build_structure(ps, opts);
    MeasureOptions mo;
    mo.seed = c.seed;
    thetas = measure_hierarchy_thetas(h, mo);
  }

  CycleSpec cyc;
  cyc.nus = effective_cycle(c, levels);
  cyc.family = parse_family(c.family);
  BoundReport br = multilevel_bound(thetas, cyc);

  double t0w = thetas[0].first, t1w = thetas[0].second;
  for (auto& t : thetas) {
    t0w = std::min(t0w, t.first);
    t1w = std::max(t1w, t.second);
  }

  std::printf("levels=%d family=%s: kappa bound %.6g (%s)\n", levels, c.family.c_str(),
              br.final_kappa_bound, br.uniform ? "uniform" : "not uniform");

  if (want_csv(c)) {
    std::string csv = "level,theta0,theta1,r0,r1,rho0,rho1\n";
    for (std::size_t k = 0; k < br.levels.size(); ++k) {
      const LevelBound& lb = br.levels[k];
      csv += fmt_int((long long)(k + 1)) + "," + fmt_double(lb.theta0) + "," +
             fmt_double(lb.theta1) + "," + fmt_double(lb.r0) + "," + fmt_double(lb.r1) +
             "," + fmt_double(lb.rho0) + "," + fmt_double(lb.rho1) + "\n";
    }
    write_text_file(path_join(c.out_dir, "rho_trajectory.csv"), csv);

    std::string th = "kappa_bar,cheb_threshold,bestapprox_threshold,required_degree\n";
    for (double kb : c.kappa_bar_grid) {
      int m = -1;
      try {
        m = required_degree(t0w, t1w, kb);
      } catch (const InfeasibleTargetError&) {
      }
      th += fmt_double(kb) + "," + fmt_double(cheb_uniformity_threshold(kb)) + "," +
            fmt_double(bestapprox_uniformity_threshold(kb)) + "," + fmt_int(m) + "\n";
    }
    write_text_file(path_join(c.out_dir, "thresholds.csv"), th);
  }

  if (want_json(c)) {
    JsonWriter w;
    w.begin_object();
    w.key("levels").value(levels);
    w.key("family").value(c.family);
    w.key("cycle").value_array(cyc.nus);
    w.key("thetas").begin_array();
    for (auto& t : thetas) {
      w.begin_array();
      w.value(t.first).value(t.second);
      w.end_array();
    }
    w.end_array();
    w.key("trajectory").begin_array();
    for (std::size_t k = 0; k < br.levels.size(); ++k) {
      const LevelBound& lb = br.levels[k];
      w.begin_object();
      w.key("level").value(static_cast<int>(k + 1));
      w.key("theta0").value(lb.theta0);
      w.key("theta1").value(lb.theta1);
      w.key("r0").value(lb.r0);
      w.key("r1").value(lb.r1);
      w.key("rho0").value(lb.rho0);
      w.key("rho1").value(lb.rho1);
      w.end_object();
    }
    w.end_array();
    w.key("rho_stationary").begin_array();
    w.value(br.rho0_stationary).value(br.rho1_stationary);
    w.end_array();
    w.key("kappa_trajectory").value(br.kappa_trajectory);
    w.key("kappa_stationary").value(br.kappa_stationary);
    w.key("final_kappa_bound").value(br.final_kappa_bound);
    w.key("uniform").value(br.uniform);
    // two published thresholds for the degree-1 Chebyshev family at
    // kappa_bar = 3 disagree (the closed formula gives 9/4, the quoted
    // comparison value is 5/4); both are reported rather than resolved.
    w.key("cheb_threshold_kappa3").value(cheb_uniformity_threshold(3.0));
    w.key("cheb_threshold_kappa3_alt").value(1.25);
    w.key("threshold_values_disagree").value(true);
    w.key("required_degree").begin_array();
    for (double kb : c.kappa_bar_grid) {
      w.begin_object();
      w.key("kappa_bar").value(kb);
      bool feasible = true;
      int m = -1;
      try {
        m = required_degree(t0w, t1w, kb);
      } catch (const InfeasibleTargetError&) {
        feasible = false;
      }
      w.key("feasible").value(feasible);
      w.key("m").value(m);
      w.end_object();
    }
    w.end_array();
    w.end_object();
    write_text_file(path_join(c.out_dir, "bound_report.json"), w.str() + "\n");
  }
  return 0;
}

// --- verify ----------------------------------------------------------------------

int cmd_verify(const RunConfig& c) {
  IdentityReport rep = verify_identities(c.verify_n, c.seed, c.perturb);
  for (const auto& ch : rep.checks) {
    std::printf("%s  %-34s deviation %.3e  (tolerance %.1e)\n",
                ch.pass ? "PASS" : "FAIL", ch.name.c_str(), ch.deviation, ch.tolerance);
  }
  std::printf("%s\n", rep.all_pass ? "all checks passed" : "CHECKS FAILED");

  if (want_json(c)) {
    JsonWriter w;
    w.begin_object();
    w.key("n").value(c.verify_n);
    w.key("seed").value(static_cast<long long>(c.seed));
    w.key("perturb").value(c.perturb);
    w.key("checks").begin_array();
    for (const auto& ch : rep.checks) {
      w.begin_object();
      w.key("name").value(ch.name);
      w.key("pass").value(ch.pass);
      w.key("deviation").value(ch.deviation);
      w.key("tolerance").value(ch.tolerance);
      w.end_object();
    }
    w.end_array();
    w.key("all_pass").value(rep.all_pass);
    w.end_object();
    write_text_file(path_join(c.out_dir, "verify_report.json"), w.str() + "\n");
  }
  return rep.all_pass ? 0 : 1;
}

int run_command(const RunConfig& c) {
  try {
    if (c.command == "poly") return cmd_poly(c);
    if (c.command == "solve") return cmd_solve(c);
    if (c.command == "analyze") return cmd_analyze(c);
    if (c.command == "verify") return cmd_verify(c);
    std::fprintf(stderr, "unknown command '%s'\n", c.command.c_str());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace amli
