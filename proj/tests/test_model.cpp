#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "ghcm/errors.hpp"
#include "ghcm/model.hpp"

using ghcm::Distribution;
using ghcm::ModelSpec;

namespace {

ModelSpec z2_sync(double sigma) {
  ModelSpec s;
  s.lambda = 1.0;
  s.n = 1000;
  s.d = 1;
  s.labels = {-1, 1};
  s.prior = {0.5, 0.5};
  const auto same = Distribution::gaussian(1.0, sigma * sigma);
  const auto diff = Distribution::gaussian(-1.0, sigma * sigma);
  s.P = {{same, diff}, {diff, same}};
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("validation rejects malformed specs") {
  auto s = ghcm::symmetric_gsbm(2.0, 1000, 1, 2, 0.9, 0.1);
  auto bad = s;
  bad.prior = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), ghcm::Error);
  bad = s;
  bad.P[0][1] = Distribution::bernoulli(0.2);
  CHECK_THROWS_AS(bad.validate(), ghcm::Error);
  bad = s;
  bad.labels = {1, -1};
  CHECK_THROWS_AS(bad.validate(), ghcm::Error);
  bad = s;
  bad.labels = {1};
  bad.prior = {1.0};
  bad.P = {{Distribution::bernoulli(0.5)}};
  CHECK_THROWS_AS(bad.validate(), ghcm::Error);
  bad = s;
  bad.P[0][0] = Distribution::gaussian(0, 1);
  CHECK_THROWS_AS(bad.validate(), ghcm::Error);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("json round trip keeps every field") {
  const auto s = ghcm::symmetric_gsbm(1.5, 1e4, 2, 3, 0.7, 0.2);
  const nlohmann::json j = s;
  const auto back = j.get<ModelSpec>();
  CHECK(back.lambda == s.lambda);
  CHECK(back.n == s.n);
  CHECK(back.d == s.d);
  CHECK(back.labels == s.labels);
  CHECK(back.prior == s.prior);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j2 = 0; j2 < 3; ++j2) CHECK(back.P[i][j2].p == s.P[i][j2].p);
  }
}

TEST_CASE("unit ball volumes") {
  CHECK(ghcm::unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(ghcm::unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
  CHECK(ghcm::unit_ball_volume(3) == doctest::Approx(4.0 / 3.0 * std::numbers::pi));
}

TEST_CASE("two-community Bernoulli divergence closed form") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double a = u(rng), b = u(rng);
    const auto s = ghcm::symmetric_gsbm(1.0, 100, 1, 2, a, b);
    const double expected = 1 - std::sqrt(a * b) - std::sqrt((1 - a) * (1 - b));
    CHECK(std::abs(ghcm::min_pairwise_divergence(s) - expected) <= 1e-9);
  }
}

TEST_CASE("Z2 synchronization divergence closed form") {
  for (double sigma : {0.3, 0.7, 1.0, 2.5}) {
    CHECK(std::abs(ghcm::min_pairwise_divergence(z2_sync(sigma)) - (1 - std::exp(-1 / (2 * sigma * sigma)))) <= 1e-9);
  }
}

TEST_CASE("divergence of identical rows is zero at t = 0") {
  const auto s = ghcm::symmetric_gsbm(1.0, 100, 1, 2, 0.4, 0.4);
  const auto pd = ghcm::pairwise_divergences(s);
  REQUIRE(pd.size() == 1);
  CHECK(pd[0].result.value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(pd[0].result.argmin_t == 0.0);
}

TEST_CASE("threshold margin example") {
  const auto s = ghcm::symmetric_gsbm(2.0, 1000, 1, 2, 0.9, 0.1);
  CHECK(ghcm::threshold_margin(s) == doctest::Approx(1.6).epsilon(1e-9));
}

TEST_CASE("divergence is symmetric in its arguments and within [0,1]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 30; ++i) {
    std::vector<Distribution> ti, tj;
    std::vector<double> prior = {u(rng), u(rng), u(rng)};
    const double total = prior[0] + prior[1] + prior[2];
    for (auto& p : prior) p /= total;
    for (int r = 0; r < 3; ++r) {
      ti.push_back(Distribution::bernoulli(u(rng)));
      tj.push_back(Distribution::bernoulli(u(rng)));
    }
    const auto ij = ghcm::ch_divergence(ti, tj, prior);
    const auto ji = ghcm::ch_divergence(tj, ti, prior);
    CHECK(ij.value == doctest::Approx(ji.value).epsilon(1e-9));
    CHECK(ij.argmin_t == doctest::Approx(1 - ji.argmin_t).epsilon(1e-6));
    CHECK(ij.value >= 0.0);
    CHECK(ij.value <= 1.0);
  }
}

TEST_CASE("relabelings") {
  const auto sym = ghcm::symmetric_gsbm(1.0, 100, 1, 2, 0.9, 0.1);
  auto omegas = ghcm::enumerate_relabelings(sym);
  REQUIRE(omegas.size() == 2);
  CHECK(omegas[0].is_identity());
  CHECK(omegas[1].perm == std::vector<int>{1, 0});

  auto asym = sym;
  asym.prior = {0.3, 0.7};
  CHECK(ghcm::enumerate_relabelings(asym).size() == 1);

  const auto three = ghcm::symmetric_gsbm(1.0, 100, 1, 3, 0.9, 0.1);
  CHECK(ghcm::enumerate_relabelings(three).size() == 6);

  auto nine = ghcm::symmetric_gsbm(1.0, 100, 1, 9, 0.9, 0.1);
  CHECK_THROWS_AS(ghcm::enumerate_relabelings(nine), ghcm::Error);
}

TEST_CASE("every enumerated relabeling preserves prior and P; the rest do not") {
  // k = 3 with a structured P: communities 0 and 1 interchangeable, 2 distinct.
  ModelSpec s;
  s.lambda = 1;
  s.n = 100;
  s.d = 1;
  s.labels = {1, 2, 3};
  s.prior = {0.25, 0.25, 0.5};
  const auto B = [](double p) { return Distribution::bernoulli(p); };
  s.P = {{B(0.9), B(0.1), B(0.3)}, {B(0.1), B(0.9), B(0.3)}, {B(0.3), B(0.3), B(0.8)}};
  s.validate();
  const auto omegas = ghcm::enumerate_relabelings(s);
  std::set<std::vector<int>> found;
  for (const auto& w : omegas) found.insert(w.perm);
  std::vector<int> perm = {0, 1, 2};
  do {
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      ok = ok && s.prior[static_cast<std::size_t>(i)] == s.prior[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      for (int j = 0; j < 3; ++j) {
        ok = ok && s.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].p ==
                       s.P[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])][static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])].p;
      }
    }
    CHECK(ok == (found.count(perm) == 1));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(omegas.size() == 2);
}

TEST_CASE("relabeling composition") {
  ghcm::Relabeling a{{1, 2, 0}};
  ghcm::Relabeling b{{2, 0, 1}};
  CHECK(a.compose(b).is_identity());
  CHECK(a(0) == 1);
}

TEST_CASE("distinctness predicates") {
  const auto sym = ghcm::symmetric_gsbm(1.0, 100, 1, 2, 0.9, 0.1);
  CHECK(ghcm::satisfies_distinctness(sym));
  CHECK_FALSE(ghcm::satisfies_strong_distinctness(sym));  // P_11 = P_22
  auto strong = sym;
  strong.P[1][1] = Distribution::bernoulli(0.6);
  CHECK(ghcm::satisfies_strong_distinctness(strong));
  const auto flat = ghcm::symmetric_gsbm(1.0, 100, 1, 2, 0.4, 0.4);
  CHECK_FALSE(ghcm::satisfies_distinctness(flat));
}

}
