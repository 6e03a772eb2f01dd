#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <doctest.h>

#include "gcp/metrics.hpp"

using namespace gcp::metrics;

TEST_SUITE("metrics") {

TEST_CASE("rmse") {
  const std::vector<double> t{1.0, 2.0};
  CHECK(rmse(t, t) == 0.0);
  const std::vector<double> p{4.0, 6.0};
  CHECK(rmse(p, t) == doctest::Approx(std::sqrt(12.5)));
  const std::vector<double> one{2.5}, zero{0.0};
  CHECK(rmse(one, zero) == 2.5);
  const std::vector<double> empty;
  CHECK_THROWS(rmse(empty, empty));
}

TEST_CASE("rejection curve on two samples") {
  // sample 1 has the larger variance and is rejected first
  const double r0 = 0.3, r1 = -2.0;
  const std::vector<double> preds{0.0, 0.0}, targets{r0, r1}, var{0.1, 5.0};
  const auto c = rejection_curve(preds, var, targets);
  REQUIRE(c.rmse_at_n.size() == 2);
  const double rm0 = std::sqrt((r0 * r0 + r1 * r1) / 2.0);
  CHECK(c.rmse_at_n[0] == doctest::Approx(rm0).epsilon(1e-15));
  CHECK(c.rmse_at_n[1] == doctest::Approx(std::abs(r0)).epsilon(1e-15));
  CHECK(c.auc == doctest::Approx((rm0 + std::abs(r0)) / 2.0).epsilon(1e-15));
  CHECK(c.ordering == std::vector<std::size_t>{1, 0});
}

TEST_CASE("zero residuals give a zero curve") {
  const std::vector<double> y{1.0, -2.0, 3.0, 0.5}, var{1.0, 2.0, 0.5, 7.0};
  const auto c = rejection_curve(y, var, y);
  for (double v : c.rmse_at_n) CHECK(v == 0.0);
  CHECK(c.auc == 0.0);
}

TEST_CASE("ties break by index and infinite variance sorts first") {
  const std::vector<double> p{0, 0, 0, 0}, t{1, 2, 3, 4};
  const std::vector<gcp::StudentVariance> v{
      gcp::StudentVariance::finite(1.0), gcp::StudentVariance::infinite(),
      gcp::StudentVariance::finite(1.0), gcp::StudentVariance::infinite()};
  const auto c = rejection_curve(p, v, t);
  CHECK(c.ordering == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("input validation") {
  const std::vector<double> a{1.0, 2.0}, nan{1.0, std::nan("")}, one{1.0};
  CHECK_THROWS(rejection_curve(a, nan, a));
  CHECK_THROWS(rejection_curve(one, one, one));
  const std::vector<double> three{1.0, 2.0, 3.0};
  CHECK_THROWS(rejection_curve(a, three, a));
}

TEST_CASE("informative variances give a non-increasing curve") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 9;
    std::vector<double> p(n, 0.0), t(n), v(n);
    for (int i = 0; i < n; ++i) {
      t[i] = n01(gen);
      v[i] = t[i] * t[i];
    }
    const auto c = rejection_curve(p, v, t);
    for (std::size_t k = 1; k < c.rmse_at_n.size(); ++k) {
      CHECK(c.rmse_at_n[k] <= c.rmse_at_n[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("permutation invariance and bounds") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 30;
    std::vector<double> p(n), t(n), v(n);
    for (int i = 0; i < n; ++i) {
      p[i] = n01(gen);
      t[i] = n01(gen);
      v[i] = std::exp(n01(gen));
    }
    const auto c = rejection_curve(p, v, t);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> p2(n), t2(n), v2(n);
    for (int i = 0; i < n; ++i) {
      p2[i] = p[perm[i]];
      t2[i] = t[perm[i]];
      v2[i] = v[perm[i]];
    }
    const auto c2 = rejection_curve(p2, v2, t2);
    CHECK(c2.auc == doctest::Approx(c.auc).epsilon(1e-12));
    const double top = *std::max_element(c.rmse_at_n.begin(), c.rmse_at_n.end());
    CHECK(c.auc >= 0.0);
    CHECK(c.auc <= top + 1e-12);
  }
}

TEST_CASE("an infinite-variance exact sample never raises the tail") {
  const std::vector<double> p{0.0, 0.0, 0.0}, t{1.0, -0.5, 2.0}, v{1.0, 2.0, 3.0};
  const auto base = rejection_curve(p, v, t);
  const std::vector<double> p2{0.0, 0.0, 0.0, 4.0}, t2{1.0, -0.5, 2.0, 4.0};
  const std::vector<double> v2{1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()};
  const auto aug = rejection_curve(p2, v2, t2);
  for (std::size_t n = 1; n < aug.rmse_at_n.size(); ++n) {
    CHECK(aug.rmse_at_n[n] <= base.rmse_at_n[n - 1] + 1e-15);
  }
}

TEST_CASE("auc and exports") {
  const std::vector<double> curve{2.0, 1.0, 0.0};
  CHECK(curve_auc(curve) == doctest::Approx((1.5 + 0.5) / 2.0));
  const std::vector<double> p{0.0, 0.0}, t{1.0, 3.0}, v{1.0, 2.0};
  const auto c = rejection_curve(p, v, t);
  const auto j = summary_json(c);
  CHECK(j.at("n_samples").get<int>() == 2);
  CHECK(j.at("auc").get<double>() == c.auc);
  const auto path = std::filesystem::temp_directory_path() / "gcp_curve.csv";
  write_curve_csv(c, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "n,rmse");
}

}  // TEST_SUITE
