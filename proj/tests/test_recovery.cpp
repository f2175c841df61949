#include <doctest.h>

#include <cmath>
#include <random>

#include "ghcm/errors.hpp"
#include "ghcm/recovery.hpp"
#include "oracles.hpp"

using ghcm::Distribution;
using ghcm::Instance;
using ghcm::ModelSpec;
using ghcm::VertexId;

namespace {

ModelSpec gaussian_spec(double lambda, double n, int d, double sigma) {
  ModelSpec s;
  s.lambda = lambda;
  s.n = n;
  s.d = d;
  s.labels = {-1, 1};
  s.prior = {0.5, 0.5};
  const auto same = Distribution::gaussian(1.0, sigma * sigma);
  const auto diff = Distribution::gaussian(-1.0, sigma * sigma);
  s.P = {{same, diff}, {diff, same}};
  return s;
}

ModelSpec two_by_two(double p00, double p01, double p11, std::vector<double> prior, double lambda = 1.0,
                     double n = 1000, int d = 1) {
  ModelSpec s;
  s.lambda = lambda;
  s.n = n;
  s.d = d;
  s.labels = {-1, 1};
  s.prior = std::move(prior);
  const auto B = [](double p) { return Distribution::bernoulli(p); };
  s.P = {{B(p00), B(p01)}, {B(p01), B(p11)}};
  s.validate();
  return s;
}

// A handful of vertices at the origin with the given observations.
Instance tiny(const ModelSpec& spec, std::vector<int> truth, std::vector<ghcm::Observation> obs) {
  std::vector<std::vector<double>> coords(static_cast<std::size_t>(spec.d), std::vector<double>(truth.size(), 0.0));
  return Instance::from_parts(spec, 0, std::move(coords), std::move(truth), std::move(obs));
}

// u and up to m-1 of its neighbors.
std::vector<VertexId> local_subset(const Instance& inst, VertexId u, std::size_t m) {
  std::vector<VertexId> out = {u};
  for (auto v : inst.neighbors(u)) {
    if (out.size() >= m) break;
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_SUITE("recovery") {

TEST_CASE("likelihood table reproduces log_likelihood exactly") {
  const auto s = two_by_two(0.9, 0.2, 0.6, {0.3, 0.7});
  const ghcm::LikelihoodTable t(s);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (double y : {0.0, 1.0}) CHECK(t(i, j, y) == ghcm::log_likelihood(s.P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], y));
    }
  }
  const auto g = gaussian_spec(1.0, 100, 1, 0.7);
  const ghcm::LikelihoodTable tg(g);
  for (double y : {-2.0, 0.1, 3.3}) CHECK(tg(0, 1, y) == ghcm::log_likelihood(g.P[0][1], y));
}

TEST_CASE("MAP: single vertex takes the higher prior") {
  const auto s = two_by_two(0.9, 0.1, 0.8, {0.3, 0.7});
  const auto inst = tiny(s, {0}, {});
  const std::vector<VertexId> subset = {0};
  CHECK(ghcm::map_initial_block(inst, subset) == std::vector<int>{1});
}

TEST_CASE("MAP: three-vertex example") {
  const double eps = 0.01;
  const auto s = ghcm::symmetric_gsbm(1.0, 1000, 1, 2, 1 - eps, eps);
  const auto inst = tiny(s, {1, 1, 0}, {{0, 1, 1.0}, {0, 2, 0.0}, {1, 2, 0.0}});
  const std::vector<VertexId> subset = {0, 1, 2};
  const auto x = ghcm::map_initial_block(inst, subset);
  // (1, 1, -1) up to the swap; the lexicographic tie rule picks (-1, -1, 1).
  CHECK(x == std::vector<int>{0, 0, 1});
  CHECK(x == oracle::brute_force_map(inst, subset));
}

TEST_CASE("MAP equals brute-force enumeration on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ModelSpec s;
    const int kind = trial % 4;
    if (kind == 0) {
      s = ghcm::symmetric_gsbm(3.0, 400, 2, 2, u(rng), u(rng));
    } else if (kind == 1) {
      const double p0 = u(rng);
      s = two_by_two(u(rng), u(rng), u(rng), {p0, 1 - p0}, 3.0, 400, 2);
    } else if (kind == 2) {
      s = gaussian_spec(3.0, 400, 1, 0.5 + u(rng));
      s.prior = {0.35, 0.65};
    } else {
      s = ghcm::symmetric_gsbm(3.0, 400, 2, 3, u(rng), u(rng));
    }
    const auto inst = ghcm::sample_instance(s, static_cast<std::uint64_t>(trial));
    if (inst.num_vertices() == 0) continue;
    const std::size_t m = 1 + static_cast<std::size_t>(trial) % (kind == 3 ? 6 : 10);
    const auto subset = local_subset(inst, static_cast<VertexId>(rng() % inst.num_vertices()), m);
    CHECK(ghcm::map_initial_block(inst, subset) == oracle::brute_force_map(inst, subset));
    ++checked;
  }
  CHECK(checked > 190);
}

TEST_CASE("MAP posterior is never below that of the truth") {
  const auto s = ghcm::symmetric_gsbm(4.0, 300, 2, 2, 0.7, 0.3);
  const auto inst = ghcm::sample_instance(s, 9);
  const ghcm::LikelihoodTable t(s);
  auto score = [&](const std::vector<VertexId>& sub, const std::vector<int>& x) {
    double total = 0;
    for (std::size_t i = 0; i < sub.size(); ++i) total += t.log_prior(x[i]);
    for (std::size_t a = 0; a < sub.size(); ++a) {
      for (std::size_t b = a + 1; b < sub.size(); ++b) {
        if (auto y = inst.observation(sub[a], sub[b])) total += t(x[a], x[b], *y);
      }
    }
    return total;
  };
  for (VertexId u = 0; u < 30 && u < inst.num_vertices(); ++u) {
    const auto sub = local_subset(inst, u, 9);
    std::vector<int> truth;
    for (auto v : sub) truth.push_back(inst.truth()[v]);
    CHECK(score(sub, ghcm::map_initial_block(inst, sub)) >= score(sub, truth) - 1e-12);
  }
}

TEST_CASE("MAP budget") {
  const auto s = ghcm::symmetric_gsbm(1.0, 1000, 1, 2, 0.9, 0.1);
  const auto inst = tiny(s, std::vector<int>(30, 0), {});
  std::vector<VertexId> subset(27);
  std::iota(subset.begin(), subset.end(), 0);
  try {
    ghcm::map_initial_block(inst, subset);
    FAIL("expected MapBudgetExceeded");
  } catch (const ghcm::Error& e) {
    CHECK(e.code() == ghcm::ErrorCode::kMapBudgetExceeded);
  }
  subset.resize(4);
  CHECK_THROWS_AS(ghcm::map_initial_block(inst, subset, 15), ghcm::Error);
  CHECK_NOTHROW(ghcm::map_initial_block(inst, subset, 16));
}

TEST_CASE("propagate examples") {
  SUBCASE("deterministic model") {
    const auto s = ghcm::symmetric_gsbm(1.0, 1000, 1, 2, 1.0, 0.0);
    const auto inst = tiny(s, {1, 1, 1, 1}, {{0, 3, 1.0}, {1, 3, 1.0}, {2, 3, 1.0}});
    const std::vector<VertexId> ref = {0, 1, 2}, tgt = {3};
    const std::vector<int> labels = {1, 1, 1};
    CHECK(ghcm::propagate(inst, ref, labels, tgt) == std::vector<int>{1});
  }
  SUBCASE("Gaussian with small noise") {
    const auto s = gaussian_spec(1.0, 1000, 1, 0.05);
    std::vector<ghcm::Observation> obs;
    std::vector<VertexId> ref;
    for (VertexId v = 0; v < 10; ++v) {
      obs.push_back({v, 10, -1.0 + 0.01 * v});
      ref.push_back(v);
    }
    const auto inst = tiny(s, std::vector<int>(11, 1), obs);
    const std::vector<int> labels(10, 1);
    const std::vector<VertexId> tgt = {10};
    CHECK(ghcm::propagate(inst, ref, labels, tgt) == std::vector<int>{0});
  }
  SUBCASE("equal community sizes pick the smaller label") {
    const auto s = ghcm::symmetric_gsbm(1.0, 1000, 1, 2, 0.9, 0.1);
    // Target observes only the reference vertex labeled 1, with an edge.
    const auto inst = tiny(s, {0, 1, 1}, {{1, 2, 1.0}});
    const std::vector<VertexId> ref = {0, 1}, tgt = {2};
    const std::vector<int> labels = {0, 1};
    CHECK(ghcm::propagate(inst, ref, labels, tgt) == std::vector<int>{0});
  }
  SUBCASE("empty reference") {
    const auto s = ghcm::symmetric_gsbm(1.0, 1000, 1, 2, 0.9, 0.1);
    const auto inst = tiny(s, {0, 1}, {});
    const std::vector<VertexId> ref = {0}, tgt = {1};
    const std::vector<int> labels = {ghcm::kUnknown};
    try {
      ghcm::propagate(inst, ref, labels, tgt);
      FAIL("expected EmptyReference");
    } catch (const ghcm::Error& e) {
      CHECK(e.code() == ghcm::ErrorCode::kEmptyReference);
    }
  }
}

TEST_CASE("propagate is equivariant under the swap") {
  const auto s = ghcm::symmetric_gsbm(4.0, 2000, 2, 2, 0.8, 0.25);
  const auto inst = ghcm::sample_instance(s, 31);
  std::mt19937_64 rng(4);
  const ghcm::Relabeling swap{{1, 0}};
  for (VertexId u = 0; u < 200; ++u) {
    const auto nb = inst.neighbors(u);
    if (nb.size() < 6) continue;
    std::vector<VertexId> ref(nb.begin(), nb.begin() + 5);
    std::vector<int> labels(5);
    int ones = 0;
    for (auto& l : labels) ones += (l = static_cast<int>(rng() % 2));
    if (ones == 0 || ones == 5) labels[0] = 1 - labels[0];
    std::vector<int> swapped;
    for (int l : labels) swapped.push_back(swap(l));
    const std::vector<VertexId> tgt = {u};
    const auto a = ghcm::propagate(inst, ref, labels, tgt);
    const auto b = ghcm::propagate(inst, ref, swapped, tgt);
    CHECK(b[0] == swap(a[0]));
  }
}

TEST_CASE("refine with the truth equals an independent genie implementation") {
  std::vector<ModelSpec> specs = {ghcm::symmetric_gsbm(3.0, 3000, 2, 2, 0.8, 0.3),
                                  two_by_two(0.9, 0.3, 0.6, {0.3, 0.7}, 3.0, 3000, 1),
                                  gaussian_spec(2.0, 3000, 2, 1.3),
                                  ghcm::symmetric_gsbm(2.0, 2000, 2, 3, 0.7, 0.2)};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto inst = ghcm::sample_instance(specs[i], 50 + i);
    std::size_t mismatches = 0;
    for (VertexId u = 0; u < inst.num_vertices(); ++u) {
      if (ghcm::refine(inst, inst.truth(), u) != oracle::genie(inst, u)) ++mismatches;
      if (ghcm::genie(inst, u) != ghcm::refine(inst, inst.truth(), u)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("genie commutes with permissible relabelings") {
  const auto s = gaussian_spec(2.0, 2000, 2, 1.0);
  const auto inst = ghcm::sample_instance(s, 12);
  const ghcm::Relabeling swap{{1, 0}};
  ghcm::Labeling swapped;
  for (int l : inst.truth()) swapped.push_back(swap(l));
  for (VertexId u = 0; u < inst.num_vertices(); ++u) {
    CHECK(ghcm::refine(inst, swapped, u) == swap(ghcm::genie(inst, u)));
  }
}

TEST_CASE("refine ignores unknown neighbors and falls back to the prior") {
  const auto s = two_by_two(0.9, 0.1, 0.8, {0.3, 0.7});
  const auto inst = tiny(s, {0, 0, 0}, {{0, 1, 1.0}, {0, 2, 1.0}});
  ghcm::Labeling labels = {ghcm::kUnknown, ghcm::kUnknown, ghcm::kUnknown};
  CHECK(ghcm::refine(inst, labels, 0) == 1);
  labels[1] = 0;
  CHECK(ghcm::refine(inst, labels, 0) == 0);
}

TEST_CASE("refine is stable under a few flipped neighbor labels at strong signal") {
  const auto s = gaussian_spec(1.0, 1000, 1, 0.1);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> truth(51);
    for (auto& t : truth) t = static_cast<int>(rng() % 2);
    std::vector<ghcm::Observation> obs;
    for (VertexId v = 1; v <= 50; ++v) {
      const double mean = truth[0] == truth[v] ? 1.0 : -1.0;
      obs.push_back({0, v, mean + noise(rng)});
    }
    const auto inst = tiny(s, truth, obs);
    ghcm::Labeling labels = truth;
    const int before = ghcm::refine(inst, labels, 0);
    labels[1 + rng() % 25] ^= 1;
    labels[26 + rng() % 25] ^= 1;
    CHECK(ghcm::refine(inst, labels, 0) == before);
    CHECK(before == truth[0]);
  }
}

TEST_CASE("agreement") {
  const std::vector<ghcm::Relabeling> omegas = {ghcm::Relabeling{{0, 1}}, ghcm::Relabeling{{1, 0}}};
  const ghcm::Labeling truth = {0, 1, 1, 0};
  CHECK(ghcm::agreement(truth, truth, omegas).value == 1.0);
  const auto swapped = ghcm::agreement({1, 0, 0, 1}, truth, omegas);
  CHECK(swapped.value == 1.0);
  CHECK(swapped.best.perm == std::vector<int>{1, 0});
  const ghcm::Labeling unknown(4, ghcm::kUnknown);
  CHECK(ghcm::agreement(unknown, truth, omegas).value == 0.0);
  const auto half = ghcm::agreement({0, 0, 0, 0}, truth, omegas);
  CHECK(half.value == 0.5);
  CHECK(half.best.is_identity());
}

TEST_CASE("deterministic model is recovered exactly when the visibility graph is connected") {
  for (int d = 1; d <= 2; ++d) {
    const double lambda = d == 1 ? 2.0 : 2.0 / M_PI;
    auto s = ghcm::symmetric_gsbm(lambda, 10000, d, 2, 1.0, 0.0);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto inst = ghcm::sample_instance(s, seed);
      ghcm::RecoveryOptions opts;
      opts.allow_1d_fallback = false;
      const auto report = ghcm::recover(inst, opts);
      if (report.status == ghcm::RecoveryStatus::kOk) {
        CHECK(report.agreement == 1.0);
        CHECK(report.mistakes == 0);
        CHECK(report.mistakes_per_block.empty());
      } else {
        CHECK(report.status == ghcm::RecoveryStatus::kVisibilityDisconnected);
      }
    }
  }
}

TEST_CASE("recover reports overrides and rejects indistinct models") {
  const auto s = ghcm::symmetric_gsbm(3.0 / M_PI, 5000, 2, 2, 1.0, 0.0);
  const auto inst = ghcm::sample_instance(s, 1);
  ghcm::RecoveryOptions opts;
  opts.chi = 0.05;
  opts.delta = 0.0;
  opts.epsilon0 = 0.3;
  const auto report = ghcm::recover(inst, opts);
  CHECK(report.chi == 0.05);
  CHECK(report.delta == 0.0);
  CHECK(report.epsilon0 == 0.3);
  const auto flat = ghcm::sample_instance(ghcm::symmetric_gsbm(1.0, 1000, 2, 2, 0.5, 0.5), 1);
  try {
    ghcm::recover(flat);
    FAIL("expected DistinctnessViolated");
  } catch (const ghcm::Error& e) {
    CHECK(e.code() == ghcm::ErrorCode::kDistinctnessViolated);
  }
}

TEST_CASE("phase II uses the phase I labels of unoccupied blocks' neighbors") {
  const auto s = ghcm::symmetric_gsbm(3.0 / M_PI, 5000, 2, 2, 1.0, 0.0);
  const auto inst = ghcm::sample_instance(s, 4);
  ghcm::RecoveryOptions opts;
  opts.delta = 0.3;  // leaves many blocks unoccupied
  const auto report = ghcm::recover(inst, opts);
  if (report.status == ghcm::RecoveryStatus::kOk) {
    const auto unknown = std::count(report.phase1.begin(), report.phase1.end(), ghcm::kUnknown);
    CHECK(unknown > 0);
    CHECK(std::count(report.final.begin(), report.final.end(), ghcm::kUnknown) == 0);
  }
}

TEST_CASE("recover_1d with refinement labels both segments exactly") {
  auto s = two_by_two(1.0, 0.0, 0.5, {0.3, 0.7}, 1.0, 10000, 1);
  // Two clusters far apart on the circle.
  std::vector<std::vector<double>> coords(1);
  std::vector<int> truth;
  std::mt19937_64 rng(3);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 200; ++i) {
      coords[0].push_back(-4000.0 + 3000.0 * c + 0.25 * i);
      truth.push_back(static_cast<int>(rng() % 2));
    }
  }
  std::vector<ghcm::Observation> obs;
  for (const auto& [u, v] : ghcm::visible_pairs(coords, s.side(), s.radius())) {
    double y = truth[u] == truth[v] ? 1.0 : 0.0;
    if (truth[u] == 1 && truth[v] == 1) y = static_cast<double>(rng() % 2);
    obs.push_back({u, v, y});
  }
  const auto inst = Instance::from_parts(s, 0, coords, truth, obs);
  ghcm::RecoveryOptions opts;
  opts.refine_1d = true;
  const auto report = ghcm::recover_1d(inst, opts);
  CHECK(report.segments == 2);
  CHECK(report.agreement == 1.0);
}

TEST_CASE("recover_1d preconditions") {
  const auto sym = ghcm::sample_instance(ghcm::symmetric_gsbm(2.0, 1000, 1, 2, 0.9, 0.1), 1);
  CHECK_THROWS_AS(ghcm::recover_1d(sym), ghcm::Error);
  const auto two_d = ghcm::sample_instance(two_by_two(0.9, 0.1, 0.8, {0.3, 0.7}, 1.0, 1000, 2), 1);
  CHECK_THROWS_AS(ghcm::recover_1d(two_d), ghcm::Error);
}

TEST_CASE("recover falls back to the segmented variant below the d = 1 threshold") {
  const auto s = two_by_two(0.99, 0.01, 0.9, {0.3, 0.7}, 0.8, 20000, 1);
  const auto inst = ghcm::sample_instance(s, 2);
  const auto report = ghcm::recover(inst);
  CHECK(report.algorithm == "one_d");
  CHECK(report.segments > 1);
}

TEST_CASE("report JSON carries user-facing labels") {
  const auto s = ghcm::symmetric_gsbm(2.0, 2000, 1, 2, 1.0, 0.0);
  const auto inst = ghcm::sample_instance(s, 5);
  const auto report = ghcm::recover(inst);
  const auto j = ghcm::report_to_json(inst, report);
  CHECK(j.at("status") == "Ok");
  CHECK(j.at("labels").size() == inst.num_vertices());
  for (const auto& l : j.at("labels")) CHECK((l == -1 || l == 1));
  CHECK(j.at("timings_ms").contains("phase1"));
  CHECK_FALSE(ghcm::report_to_json(inst, report, false).contains("labels"));
}

}
