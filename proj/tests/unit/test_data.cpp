#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <doctest.h>

#include "gcp/data.hpp"

using namespace gcp::data;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "gcp_data_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

Dataset toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  ds.targets.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    ds.features(i, 0) = rng.normal(3.0, 2.0);
    ds.features(i, 1) = rng.uniform(-5.0, 1.0);
    ds.targets(i) = 10.0 + 4.0 * rng.normal();
  }
  return ds;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("rng streams are reproducible and split independently") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(5);
  CHECK(c.split(0).next_u64() != c.split(1).next_u64());
  CHECK(Rng(5).split(3).next_u64() == Rng(5).split(3).next_u64());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  Rng d(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(d.below(7) < 7);
  }
}

TEST_CASE("rng normal draws have unit moments") {
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec clean;
  clean.n = 100000;
  clean.outlier_prob = 0.0;
  clean.seed = 1;
  const auto ds = generate_synthetic(clean);
  double s = 0.0, v = 0.0;
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    CHECK_FALSE((*ds.outlier_mask)[static_cast<std::size_t>(i)]);
    const double x = ds.features(i, 0);
    s += ds.targets(i) - synthetic_mean(x);
    v += synthetic_std(x) * synthetic_std(x);
  }
  const double n = static_cast<double>(clean.n);
  CHECK(std::abs(s / n) < 3.0 * std::sqrt(v / n) / std::sqrt(n));
  CHECK(synthetic_std(0.0) == 0.5);

  SyntheticSpec def;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    def.seed = seed;
    const auto d = generate_synthetic(def);
    const auto& m = *d.outlier_mask;
    const double k = static_cast<double>(std::count(m.begin(), m.end(), true));
    CHECK(std::abs(k - 20.0) < 3.0 * std::sqrt(400 * 0.05 * 0.95));
  }
  const auto a = generate_synthetic(def), b = generate_synthetic(def);
  CHECK(a.targets == b.targets);
  CHECK(a.features == b.features);
  CHECK_THROWS_AS(generate_synthetic(SyntheticSpec{0}), gcp::PreconditionError);
}

TEST_CASE("synthetic grid") {
  const auto g = synthetic_grid(200);
  CHECK(g.size() == 200);
  CHECK(g.features(0, 0) > -1.0);
  CHECK(g.features(199, 0) < 1.0);
  CHECK(g.targets(10) == synthetic_mean(g.features(10, 0)));
}

TEST_CASE("contamination") {
  const auto ds = toy(1000, 2);
  const auto same = contaminate(ds, 0.0, 1);
  CHECK(same.targets == ds.targets);

  const auto c = contaminate(ds, 0.05, 1);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (c.targets(r) != ds.targets(r)) ++changed;
    if (!(*c.outlier_mask)[i]) CHECK(c.targets(r) == ds.targets(r));
  }
  CHECK(changed == 50);
  CHECK(std::count(c.outlier_mask->begin(), c.outlier_mask->end(), true) == 50);
  CHECK(c.features == ds.features);
  CHECK(contaminate(ds, 0.05, 1).targets == c.targets);

  const auto big = toy(20000, 4);
  const auto cb = contaminate(big, 0.5, 9);
  std::vector<double> replaced;
  for (std::size_t i = 0; i < big.size(); ++i) {
    if ((*cb.outlier_mask)[i]) replaced.push_back(cb.targets(static_cast<Eigen::Index>(i)));
  }
  const Eigen::VectorXd rv = Eigen::Map<Eigen::VectorXd>(replaced.data(), static_cast<Eigen::Index>(replaced.size()));
  CHECK(std_of(rv) == doctest::Approx(10.0 * std_of(big.targets)).epsilon(0.2));
  CHECK_THROWS_AS(contaminate(normalize(ds), 0.1, 1), gcp::PreconditionError);
  CHECK_THROWS_AS(contaminate(ds, 1.0, 1), gcp::PreconditionError);
}

TEST_CASE("normalization round trip and train statistics") {
  auto ds = toy(500, 6);
  const auto n = normalize(ds);
  CHECK(std::abs(mean_of(n.targets)) < 1e-12);
  CHECK(std::abs(std_of(n.targets) - 1.0) < 1e-12);
  for (int c = 0; c < n.dim(); ++c) CHECK(std::abs(mean_of(n.features.col(c))) < 1e-12);
  const auto back = denormalize(n);
  CHECK((back.features - ds.features).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.targets - ds.targets).cwiseAbs().maxCoeff() < 1e-12);

  auto shifted = toy(100, 8);
  shifted.targets.array() += 7.0;
  const auto t = apply_normalization(shifted, *n.normalization);
  CHECK(mean_of(t.targets) > 1.0);

  ds.features.col(1).setConstant(2.0);
  ds.feature_names = {"a", "const"};
  const auto dropped = normalize(ds);
  CHECK(dropped.dim() == 1);
  CHECK(dropped.normalization->dropped_columns == std::vector<std::string>{"const"});
  ds.targets.setConstant(3.0);
  CHECK_THROWS_AS(normalize(ds), gcp::PreconditionError);
}

TEST_CASE("split") {
  const auto [tr, te] = split_indices(100, 0.95, 3);
  CHECK(tr.size() == 95);
  CHECK(te.size() == 5);
  std::set<std::size_t> all(tr.begin(), tr.end());
  for (auto i : te) CHECK(all.insert(i).second);
  CHECK(all.size() == 100);
  CHECK(split_indices(100, 0.95, 3) == split_indices(100, 0.95, 3));
  CHECK(split_indices(100, 0.95, 4) != split_indices(100, 0.95, 3));
  CHECK(split_indices(2, 0.95, 0).second.size() == 1);
  CHECK_THROWS_AS(split_indices(1, 0.5, 0), gcp::PreconditionError);
}

TEST_CASE("csv loading") {
  const auto ds = load_csv(temp_file("small.csv", "a,b\n1,2\n3,4"));
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 1);
  CHECK(ds.targets(0) == 2.0);
  CHECK(ds.targets(1) == 4.0);
  CHECK(ds.feature_names == std::vector<std::string>{"a"});
  CHECK(ds.target_name == "b");

  CHECK(load_csv(temp_file("trailing.csv", "a,b\n1,2\n3,4\n\n")).size() == 2);
  CHECK_THROWS_AS(load_csv(temp_file("empty.csv", "")), gcp::ParseError);
  CHECK_THROWS_AS(load_csv(temp_file("nofile_dir/x.csv", "")), gcp::ParseError);

  try {
    load_csv(temp_file("bad.csv", "a,b\n1,2\n3,x\n"));
    FAIL("expected a parse error");
  } catch (const gcp::ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad.csv:3") != std::string::npos);
    CHECK(what.find("column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(temp_file("ragged.csv", "a,b\n1,2,3\n")), gcp::ParseError);
}

TEST_CASE("csv round trip with outlier mask") {
  SyntheticSpec s;
  s.n = 50;
  const auto ds = generate_synthetic(s);
  const auto path = std::filesystem::temp_directory_path() / "gcp_data_tests" / "synth.csv";
  write_csv(ds, path);
  const auto back = load_csv(path);
  CHECK(back.targets == ds.targets);
  CHECK(back.features == ds.features);
  REQUIRE(back.outlier_mask);
  CHECK(*back.outlier_mask == *ds.outlier_mask);
}

}  // TEST_SUITE
