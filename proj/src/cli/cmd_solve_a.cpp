#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "gcp/cli.hpp"
#include "gcp/special.hpp"

namespace gcp::cli {
namespace {

struct SolveAOptions {
  std::vector<double> alphas;
  std::string grid;
  bool log_grid = false;
};

void run_solve_a(const GlobalOptions& g, const SolveAOptions& o) {
  std::vector<double> alphas = o.alphas;
  if (!o.grid.empty()) {
    const GridSpec grid = parse_grid(o.grid, "--grid");
    if (o.log_grid && !(grid.lo > 0.0)) throw UsageError("--grid: log spacing needs lo > 0");
    for (int i = 0; i < grid.n; ++i) {
      const double t = grid.n == 1 ? 0.0 : static_cast<double>(i) / (grid.n - 1);
      alphas.push_back(o.log_grid ? std::exp(std::log(grid.lo) + t * std::log(grid.hi / grid.lo))
                                  : grid.lo + t * (grid.hi - grid.lo));
    }
  }
  if (alphas.empty()) throw UsageError("solve-a: give --alpha or --grid");
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw UsageError("solve-a: alpha must be positive and finite, got " + std::to_string(a));
    }
  }

  const auto path = g.out_dir() / "solve_a.csv";
  std::ofstream file(path);
  if (!file) throw ParseError(path.string() + ": cannot open for writing");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&file)}) {
    *os << "alpha,A,approx,deviation,residual\n";
  }
  for (double a : alphas) {
    const double gap = special::solve_gap(a);
    const double A = a - gap;
    const double approx = special::approx_A(a);
    const double residual = special::a_equation_residual_gap(a, gap);
    std::ostringstream row;
    row << std::setprecision(17) << a << "," << A << "," << approx << "," << A - approx << ","
        << residual << "\n";
    std::cout << row.str();
    file << row.str();
  }
  write_manifest(g, "solve-a",
                 {{"alphas", alphas}, {"grid", o.grid}, {"log", o.log_grid}});
}

}  // namespace

void add_solve_a(CLI::App& app, GlobalOptions& g) {
  auto opts = std::make_shared<SolveAOptions>();
  auto* sub = app.add_subcommand("solve-a", "Solve the A(alpha) equation");
  sub->add_option("--alpha", opts->alphas, "Shape value (repeatable)")->allow_extra_args(false);
  sub->add_option("--grid", opts->grid, "Grid lo:hi:n");
  sub->add_flag("--log", opts->log_grid, "Log-spaced grid");
  sub->callback([&g, opts] { run_solve_a(g, *opts); });
}

}  // namespace gcp::cli
