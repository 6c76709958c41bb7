#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "amli/cli.hpp"
#include "amli/errors.hpp"
#include "amli/reports.hpp"

namespace {

// flags shared by every subcommand; only explicitly passed ones override the
// config file
struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false, format_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "random seed")->each([&](const std::string&) {
    f.seed_set = true;
  });
  cmd->add_option("--out", f.out_dir, "output directory")->each([&](const std::string&) {
    f.out_set = true;
  });
  cmd->add_option("--format", f.format, "csv | json | both")
      ->each([&](const std::string&) { f.format_set = true; });
}

amli::RunConfig resolve(const CommonFlags& f, const std::string& command) {
  amli::RunConfig c;
  if (!f.config_path.empty())
    c = amli::config_from_json(amli::read_text_file(f.config_path));
  c.command = command;
  if (f.seed_set) c.seed = f.seed;
  if (f.out_set) c.out_dir = f.out_dir;
  if (f.format_set) c.format = f.format;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMLI preconditioner toolkit: polynomial acceleration for sparse SPD solves"};
  app.require_subcommand(1);

  CommonFlags cf;

  auto* poly = app.add_subcommand("poly", "best-approximation polynomial tables");
  add_common(poly, cf);
  double lmin = 0, lmax = 0, mu = 0;
  std::vector<int> degrees;
  auto* o_lmin = poly->add_option("--lambda-min", lmin, "interval lower endpoint");
  auto* o_lmax = poly->add_option("--lambda-max", lmax, "interval upper endpoint");
  auto* o_deg = poly->add_option("--degrees", degrees, "degrees to tabulate");
  auto* o_mu = poly->add_option("--mu", mu, "smoothing interval ratio");

  auto* solve = app.add_subcommand("solve", "PCG with the multilevel preconditioner");
  add_common(solve, cf);

  auto* analyze = app.add_subcommand("analyze", "condition number bounds and degree tables");
  add_common(analyze, cf);

  auto* verify = app.add_subcommand("verify", "run the identity verification battery");
  add_common(verify, cf);
  double perturb = 0.0;
  int verify_n = 0;
  auto* o_pert = verify->add_option("--perturb", perturb, "inject a coefficient error");
  auto* o_vn = verify->add_option("--n", verify_n, "dense instance dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    std::string command = app.get_subcommands().front()->get_name();
    amli::RunConfig c = resolve(cf, command);
    if (o_lmin->count()) c.lambda_min = lmin;
    if (o_lmax->count()) c.lambda_max = lmax;
    if (o_deg->count()) c.degrees = degrees;
    if (o_mu->count()) c.mu = mu;
    if (o_pert->count()) c.perturb = perturb;
    if (o_vn->count()) c.verify_n = verify_n;
    return amli::run_command(c);
  } catch (const amli::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
