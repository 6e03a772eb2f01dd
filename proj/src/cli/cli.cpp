#include <iostream>

#include <CLI11.hpp>

#include "gcp/cli.hpp"

namespace gcp::cli {

int run(int argc, char** argv) {
  GlobalOptions g;
  g.argv.assign(argv, argv + argc);

  CLI::App app{"GCP networks: robust regression with normal-gamma output heads"};
  app.name("gcp");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("--out", g.out, "Run directory for all outputs")->capture_default_str();
  app.add_option("--config", g.config, "JSON file overriding defaults and presets");
  app.add_option("--jobs", g.jobs, "Concurrent workers for ensembles and bench")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  add_solve_a(app, g);
  add_train(app, g);
  add_dynamics(app, g);
  add_bench(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kPrecondition;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const SolverError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kSuccess;
}

}  // namespace gcp::cli
