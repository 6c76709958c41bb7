#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace amli {

/// Everything a run needs, resolvable from a JSON config file plus command
/// line overrides. Serialization through config_to_json/config_from_json is
/// an exact round trip.
struct RunConfig {
  std::string command = "verify";  // poly | solve | analyze | verify

  // io
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  std::string format = "both";  // csv | json | both

  // problem
  std::string problem = "poisson2d";  // poisson1d | poisson2d | mtx
  int levels = 3;
  int n0 = 3;
  std::string matrix_path;
  std::vector<std::string> splitting_paths;  // finest split first

  // cycle / family
  std::vector<int> cycle;      // explicit per-level degrees, coarsest first
  std::string cycle_preset = "w";  // v | w | custom (cycle array used as given)
  std::string family = "bestapprox";  // bestapprox | chebyshev | exact | identity
  std::string smoother = "sgs";       // sgs | jacobi | gs | exact
  double omega = 1.0;
  std::string rho_mode = "measure";  // theory | measure | given
  std::vector<std::array<double, 2>> thetas;
  std::vector<std::array<double, 2>> rhos;
  int coarse_limit = 64;
  int measure_iters = 30;

  // solver
  double tol = 1e-8;
  int maxit = 500;
  std::string rhs = "ones";  // ones | random
  /// Optional exported coefficient documents (one per level, coarsest
  /// first); when present they replace the family polynomials in `solve`.
  std::vector<std::string> q_coeffs_paths;

  // polynomial inspection
  double lambda_min = 1.0;
  double lambda_max = 4.0;
  std::vector<int> degrees = {0, 1, 2, 3, 4};
  double mu = 0.0;  // > 1 enables positivity/damping columns
  int scan_grid = 100000;

  // analysis
  std::vector<double> kappa_bar_grid = {2.0, 3.0, 4.0, 6.0, 8.0, 16.0};

  // verification battery
  int verify_n = 40;
  double perturb = 0.0;

  bool operator==(const RunConfig&) const = default;
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& c);

int cmd_poly(const RunConfig& c);
int cmd_solve(const RunConfig& c);
int cmd_analyze(const RunConfig& c);
int cmd_verify(const RunConfig& c);

/// Dispatches on c.command; catches library errors and maps them to exit
/// status 2 with a message on stderr.
int run_command(const RunConfig& c);

}  // namespace amli
