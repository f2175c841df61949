#include <doctest.h>

#include <cstring>
#include <random>

#include "ghcm/kernels.hpp"

namespace k = ghcm::kernels;

namespace {

struct Batch {
  std::vector<std::vector<double>> coords;
  std::vector<const double*> ptrs;
  k::PointBatch view() {
    ptrs.clear();
    for (auto& a : coords) ptrs.push_back(a.data());
    return {ptrs, coords.empty() ? 0 : coords[0].size()};
  }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar radius filter against direct distances") {
  std::mt19937_64 rng(1);
  const double side = 10.0;
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int d = 1; d <= 3; ++d) {
    Batch b;
    b.coords.assign(static_cast<std::size_t>(d), std::vector<double>(257));
    for (auto& a : b.coords) {
      for (auto& x : a) x = u(rng);
    }
    std::vector<double> q(static_cast<std::size_t>(d));
    for (auto& x : q) x = u(rng);
    std::vector<std::uint32_t> out(257);
    const auto view = b.view();
    const std::size_t got = k::scalar::radius_filter(view, q, side, 9.0, out.data());
    std::vector<std::uint32_t> expect;
    for (std::uint32_t i = 0; i < 257; ++i) {
      double s = 0;
      for (int ax = 0; ax < d; ++ax) {
        double diff = std::fabs(q[static_cast<std::size_t>(ax)] - b.coords[static_cast<std::size_t>(ax)][i]);
        diff = std::min(diff, side - diff);
        s += diff * diff;
      }
      if (s <= 9.0) expect.push_back(i);
    }
    CHECK(std::vector<std::uint32_t>(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(got)) == expect);
  }
}

TEST_CASE("avx2 radius filter is identical to scalar") {
  if (!k::isa_available(k::Isa::kAvx2)) return;
  std::mt19937_64 rng(2);
  const double side = 7.0;
  std::uniform_real_distribution<double> u(-3.5, 3.5);
  for (std::size_t count : {0u, 1u, 3u, 4u, 5u, 31u, 64u, 1000u}) {
    for (int d = 1; d <= 4; ++d) {
      Batch b;
      b.coords.assign(static_cast<std::size_t>(d), std::vector<double>(count));
      for (auto& a : b.coords) {
        for (auto& x : a) x = u(rng);
      }
      std::vector<double> q(static_cast<std::size_t>(d));
      for (auto& x : q) x = u(rng);
      // Put a point exactly on the radius boundary when possible.
      if (count > 2) {
        for (int ax = 0; ax < d; ++ax) b.coords[static_cast<std::size_t>(ax)][2] = q[static_cast<std::size_t>(ax)];
        b.coords[0][2] = q[0] + 1.5;
      }
      std::vector<std::uint32_t> s(count + 1), v(count + 1);
      const auto view = b.view();
      const auto ns = k::scalar::radius_filter(view, q, side, 2.25, s.data());
      const auto nv = k::radius_filter(k::Isa::kAvx2, view, q, side, 2.25, v.data());
      REQUIRE(ns == nv);
      CHECK(std::equal(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(ns), v.begin()));
    }
  }
}

TEST_CASE("binary MAP scores: avx2 bit-identical to scalar, scalar matches direct sum") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int m = 1; m <= 11; ++m) {
    k::BinaryMapProblem p;
    p.m = m;
    p.log_prior[0] = g(rng);
    p.log_prior[1] = g(rng);
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        if (rng() % 2) continue;
        k::BinaryMapProblem::Pair pr;
        pr.a = a;
        pr.b = b;
        for (double& w : pr.w) w = g(rng);
        p.pairs.push_back(pr);
      }
    }
    const std::size_t total = std::size_t{1} << m;
    std::vector<double> s(total), v(total);
    k::scalar::map_scores_binary(p, 0, total, s.data());
    if (k::isa_available(k::Isa::kAvx2)) {
      k::map_scores_binary(k::Isa::kAvx2, p, 0, total, v.data());
      CHECK(std::memcmp(s.data(), v.data(), total * sizeof(double)) == 0);
      // Unaligned starting code exercises the scalar tail.
      k::map_scores_binary(k::Isa::kAvx2, p, 1, total - 1, v.data());
      CHECK(std::memcmp(s.data() + 1, v.data(), (total - 1) * sizeof(double)) == 0);
    }
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> x(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) x[static_cast<std::size_t>(i)] = static_cast<int>((code >> (m - 1 - i)) & 1);
      double direct = 0;
      for (int xi : x) direct += p.log_prior[xi];
      for (const auto& pr : p.pairs) direct += pr.w[x[static_cast<std::size_t>(pr.a)] + x[static_cast<std::size_t>(pr.b)]];
      CHECK(s[code] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("dispatch honours forced ISA") {
  k::force_isa(k::Isa::kScalar);
  CHECK(k::active_isa() == k::Isa::kScalar);
  if (k::isa_available(k::Isa::kAvx2)) {
    k::force_isa(k::Isa::kAvx2);
    CHECK(k::active_isa() == k::Isa::kAvx2);
  }
  CHECK(std::string(k::to_string(k::Isa::kScalar)) == "scalar");
}

}
