// freespec: spectral distributions of self-adjoint polynomials in free
// random variables, plus random-matrix validation. Subcommands: linearize,
// density, simulate, compare.

#include "freespec/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <string>
#include <vector>

namespace {

constexpr const char* kMeasureHelp =
    "measure spec: semicircle(mean,var) | mp(lambda,scale) | "
    "atoms((t1,w1),(t2,w2),...) | table(path); table files are CSV rows t,density";

constexpr const char* kEnsembleHelp = "ensemble spec: gue | wishart(ratio)";

std::pair<int, std::string> split_binding(const std::string& s) {
  std::size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw CLI::ValidationError("binding must look like <index>=<spec>, got '" + s + "'");
  int idx = 0;
  try {
    idx = std::stoi(s.substr(0, eq));
  } catch (const std::exception&) {
    throw CLI::ValidationError("bad variable index in '" + s + "'");
  }
  return {idx, s.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "freespec: compute the spectral distribution of a self-adjoint polynomial in "
      "freely independent variables, and validate it against random-matrix "
      "simulation.\n\nPolynomial grammar: variables x1..xn, operators + - *, integer "
      "powers ^k (k >= 1), parentheses, numeric literals with an optional trailing "
      "'i' (e.g. 2, 0.5, 3i, (1+2i)). Multiplication must be written explicitly."};
  app.require_subcommand(1);

  freespec::RunConfig cfg;
  std::vector<std::string> var_bindings, ensemble_bindings;

  auto* lin = app.add_subcommand("linearize",
                                 "emit the self-adjoint linearization coefficients as JSON");
  lin->add_option("--poly", cfg.poly, "polynomial text")->required();
  lin->add_option("--nvars", cfg.n_vars, "number of variables")->required();
  lin->add_option("--verify", cfg.verify_trials,
                  "verify with this many random matrix trials");
  lin->add_option("--dim", cfg.verify_dim, "matrix size for verification trials");
  lin->add_option("--seed", cfg.seed, "verification RNG seed");
  lin->add_option("--out", cfg.out, "output path (default: stdout)");

  auto* den = app.add_subcommand("density", "compute the spectral density curve");
  den->add_option("--poly", cfg.poly, "polynomial text")->required();
  den->add_option("--nvars", cfg.n_vars, "number of variables")->required();
  den->add_option("--var", var_bindings, kMeasureHelp)
      ->required()
      ->take_all()
      ->expected(-1);
  den->add_option("--grid", cfg.grid, "evaluation grid lo:hi:count (default: auto range)");
  den->add_option("--grid-count", cfg.grid_count, "points for the auto range");
  den->add_option("--eps", cfg.eps, "Stieltjes regularization (default 1e-6)");
  den->add_option("--tol", cfg.tol, "fixed-point displacement tolerance (default 1e-12)");
  den->add_flag("--richardson", cfg.richardson, "extrapolate from eps and 2*eps");
  den->add_option("--threads", cfg.threads, "worker cap (0: hardware)");
  den->add_option("--out", cfg.out, "curve CSV path (sidecar: <out>.json)")->required();

  auto* sim = app.add_subcommand("simulate", "sample random-matrix eigenvalues");
  sim->add_option("--poly", cfg.poly, "polynomial text")->required();
  sim->add_option("--nvars", cfg.n_vars, "number of variables")->required();
  sim->add_option("--ensemble", ensemble_bindings, kEnsembleHelp)
      ->required()
      ->take_all()
      ->expected(-1);
  sim->add_option("--n", cfg.n, "matrix size (default 2000)");
  sim->add_option("--reps", cfg.reps, "independent repetitions (default 5)");
  sim->add_option("--seed", cfg.seed, "RNG seed (default 42)");
  sim->add_option("--out", cfg.out, "eigenvalue CSV path")->required();

  auto* cmp = app.add_subcommand("compare",
                                 "KS distance and moment table: curve vs eigenvalues");
  cmp->add_option("--curve", cfg.curve_path, "curve CSV from `density`")->required();
  cmp->add_option("--eigs", cfg.eigs_path, "eigenvalue CSV from `simulate`")->required();
  cmp->add_flag("--oracle", cfg.oracle,
                "add combinatorial oracle moments (needs the curve sidecar)");
  cmp->add_option("--bins", cfg.bins, "histogram bins for the overlay file");
  cmp->add_option("--out", cfg.out, "gnuplot overlay data path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? freespec::kExitOk : freespec::kExitUsage;
  }

  try {
    for (const std::string& b : var_bindings) {
      auto [idx, spec] = split_binding(b);
      cfg.var_measures[idx] = spec;
    }
    for (const std::string& b : ensemble_bindings) {
      auto [idx, spec] = split_binding(b);
      cfg.var_ensembles[idx] = spec;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return freespec::kExitUsage;
  }

  if (lin->parsed()) cfg.command = freespec::RunConfig::Command::Linearize;
  if (den->parsed()) cfg.command = freespec::RunConfig::Command::Density;
  if (sim->parsed()) cfg.command = freespec::RunConfig::Command::Simulate;
  if (cmp->parsed()) cfg.command = freespec::RunConfig::Command::Compare;

  return freespec::run(cfg);
}
