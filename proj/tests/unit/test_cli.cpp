#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "gcp/cli.hpp"

namespace fs = std::filesystem;

namespace {

int gcp_run(std::vector<std::string> args) {
  args.insert(args.begin(), "gcp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return gcp::cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path run_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / "gcp_cli_tests" / name;
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve-a") {
  const auto d = run_dir("solve1");
  CHECK(gcp_run({"solve-a", "--alpha", "2", "--out", d.string()}) == 0);
  const auto rows = lines(d / "solve_a.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "alpha,A,approx,deviation,residual");
  const double residual = std::stod(rows[1].substr(rows[1].rfind(',') + 1));
  CHECK(std::abs(residual) < 1e-10);
  CHECK(fs::exists(d / "manifest.json"));

  const auto g = run_dir("solve2");
  CHECK(gcp_run({"solve-a", "--grid", "0.1:20:100", "--out", g.string()}) == 0);
  const auto grid = lines(g / "solve_a.csv");
  REQUIRE(grid.size() == 101);
  double prev = -1.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const auto c1 = grid[i].find(',');
    const double a = std::stod(grid[i].substr(c1 + 1));
    CHECK(a > prev);
    prev = a;
  }
  CHECK(gcp_run({"solve-a", "--alpha", "-1", "--out", run_dir("solve3").string()}) == 2);
  CHECK(gcp_run({"solve-a", "--grid", "1:2", "--out", run_dir("solve4").string()}) == 2);
  CHECK(gcp_run({"solve-a", "--bogus"}) == 2);
  CHECK(gcp_run({}) == 2);
}

TEST_CASE("presets resolve") {
  const auto& p = gcp::cli::find_preset("boston-gcp");
  CHECK(p.learning_rate == 1e-4);
  CHECK(p.dropout == 0.3);
  CHECK(p.epochs == 700);
  CHECK(p.minibatch == 5);
  CHECK_THROWS_AS(gcp::cli::find_preset("nope"), gcp::cli::UsageError);

  gcp::cli::TrainFlags f;
  f.preset = "boston-gcp";
  const auto s = gcp::cli::resolve_train_setup(f, nlohmann::json::object());
  CHECK(s.train.learning_rate == 1e-4);
  CHECK(s.train.dropout == 0.3);
  CHECK(s.train.epochs == 700);
  CHECK(s.train.minibatch == 5);

  // flags beat the config file, the config file beats the preset
  f.epochs = 3;
  const auto cfg = nlohmann::json{{"train", {{"epochs", 9}, {"dropout", 0.2}}}};
  const auto t = gcp::cli::resolve_train_setup(f, cfg);
  CHECK(t.train.epochs == 3);
  CHECK(t.train.dropout == 0.2);
  CHECK(t.train.learning_rate == 1e-4);
}

TEST_CASE("train writes all artifacts deterministically") {
  const auto a = run_dir("train_a"), b = run_dir("train_b");
  const std::vector<std::string> common{"train", "--epochs", "30", "--seed", "3"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string()});
  REQUIRE(gcp_run(args_a) == 0);
  REQUIRE(gcp_run(args_b) == 0);
  for (const char* f : {"checkpoint.json", "metrics.json", "rejection_curve.csv", "predictions.csv",
                        "manifest.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
  const auto preds = lines(a / "predictions.csv");
  CHECK(preds[0] == "x_hash,mean,v_p,v_st,alpha,target");
  CHECK(preds.size() == 201);

  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m.at("seed").get<int>() == 3);
  CHECK(m.at("resolved").at("train").at("epochs").get<int>() == 30);
}

TEST_CASE("train on a CSV file and error paths") {
  const auto dir = run_dir("csv");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "data.csv");
    out << "x1,x2,y\n";
    for (int i = 0; i < 60; ++i) out << i * 0.1 << "," << (i % 7) << "," << std::sin(i * 0.1) << "\n";
  }
  CHECK(gcp_run({"train", "--data", (dir / "data.csv").string(), "--epochs", "5", "--baseline",
                 "--out", (dir / "run").string()}) == 0);
  CHECK(fs::exists(dir / "run" / "metrics.json"));
  {
    std::ofstream out(dir / "bad.csv");
    out << "x,y\n1,2\n3,oops\n";
  }
  CHECK(gcp_run({"train", "--data", (dir / "bad.csv").string(), "--out", (dir / "r2").string()}) ==
        2);
  CHECK(gcp_run({"train", "--preset", "unknown", "--out", (dir / "r3").string()}) == 2);
  CHECK(gcp_run({"train", "--epochs", "0", "--out", (dir / "r4").string()}) == 2);
  CHECK(gcp_run({"train", "--loss", "bogus", "--out", (dir / "r5").string()}) == 2);
  // an absurd learning rate drives the loss to non-finite values
  CHECK(gcp_run({"train", "--lr", "1e300", "--epochs", "50", "--out", (dir / "r6").string()}) == 3);
}

TEST_CASE("dynamics subcommands") {
  const auto eq = run_dir("eq");
  CHECK(gcp_run({"dynamics", "equilibrium", "--epsilon", "0", "--out", eq.string()}) == 4);
  CHECK(gcp_run({"dynamics", "equilibrium", "--epsilon", "0.1", "--gaussian-outliers", "0,1",
                 "--out", eq.string()}) == 4);
  CHECK(gcp_run({"dynamics", "equilibrium", "--epsilon", "0.05", "--out", eq.string()}) == 0);
  const auto j = nlohmann::json::parse(slurp(eq / "equilibrium.json"));
  CHECK(j.at("equilibrium").at("converged").get<bool>());

  const auto sw = run_dir("sweep");
  CHECK(gcp_run({"dynamics", "sweep", "--eps", "0.08,0.04,0.02,0.01,0.005", "--gaussian-outliers",
                 "5,1", "--out", sw.string()}) == 0);
  CHECK(lines(sw / "sweep.csv").size() == 6);

  const auto f = run_dir("field");
  CHECK(gcp_run({"dynamics", "field", "--epsilon", "0", "--alpha-range", "0.1:100:8",
                 "--sigma-range", "0.1:100:8", "--out", f.string()}) == 0);
  CHECK(lines(f / "field.csv").size() == 65);

  const auto s = run_dir("sim");
  CHECK(gcp_run({"dynamics", "simulate", "--epsilon", "0.1", "--gaussian-outliers", "0,1",
                 "--t-end", "10", "--out", s.string()}) == 0);
  CHECK(fs::exists(s / "trajectory.csv"));
  CHECK(gcp_run({"dynamics", "simulate", "--method", "euler", "--out", s.string()}) == 2);
  CHECK(gcp_run({"dynamics", "sweep", "--eps", "0.1,x", "--out", s.string()}) == 2);

  const auto v = run_dir("verify");
  CHECK(gcp_run({"dynamics", "verify", "--eps", "0.004,0.002", "--out", v.string()}) == 0);
  CHECK(lines(v / "variance_correction.csv").size() == 3);
}

TEST_CASE("bench smoke") {
  const auto d = run_dir("bench");
  CHECK(gcp_run({"bench", "--repeats", "2", "--epochs", "3", "--fractions", "0,0.1", "--ensemble",
                 "--members", "2", "--jobs", "2", "--out", d.string()}) == 0);
  const auto longf = lines(d / "bench_long.csv");
  CHECK(longf[0] == "fraction,repeat,method,rmse,auc");
  CHECK(longf.size() == 1 + 2 * 2 * 4);
  CHECK(lines(d / "bench_summary.csv").size() == 1 + 2 * 4);
}

}  // TEST_SUITE
