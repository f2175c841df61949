#include <atomic>
#include <cstdlib>
#include <string_view>

#include "ghcm/kernels.hpp"

namespace ghcm::kernels {

namespace {

std::atomic<int> g_forced{-1};

Isa detect() {
  if (const char* env = std::getenv("GHCM_SIMD")) {
    const std::string_view v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && isa_available(Isa::kAvx2)) return Isa::kAvx2;
  }
  return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

}  // namespace

const char* to_string(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(GHCM_HAVE_AVX2)
  static const bool has_avx2 = __builtin_cpu_supports("avx2");
  return has_avx2;
#else
  return false;
#endif
}

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  static const Isa detected = detect();
  return detected;
}

void force_isa(Isa isa) {
  g_forced.store(isa_available(isa) ? static_cast<int>(isa) : static_cast<int>(Isa::kScalar),
                 std::memory_order_relaxed);
}

std::size_t radius_filter(Isa isa, const PointBatch& batch, std::span<const double> query,
                          double side, double r2, std::uint32_t* out) {
#if defined(GHCM_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2::radius_filter(batch, query, side, r2, out);
#endif
  (void)isa;
  return scalar::radius_filter(batch, query, side, r2, out);
}

void map_scores_binary(Isa isa, const BinaryMapProblem& problem, std::uint64_t first,
                       std::size_t count, double* scores) {
#if defined(GHCM_HAVE_AVX2)
  if (isa == Isa::kAvx2) return avx2::map_scores_binary(problem, first, count, scores);
#endif
  (void)isa;
  scalar::map_scores_binary(problem, first, count, scores);
}

}  // namespace ghcm::kernels
