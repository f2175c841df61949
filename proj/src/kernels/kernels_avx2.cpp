#include <immintrin.h>

#include <cmath>

#include "ghcm/kernels.hpp"

namespace ghcm::kernels::avx2 {

std::size_t radius_filter(const PointBatch& batch, std::span<const double> query, double side,
                          double r2, std::uint32_t* out) {
  const std::size_t dims = query.size();
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vside = _mm256_set1_pd(side);
  const __m256d vr2 = _mm256_set1_pd(r2);
  std::size_t written = 0;
  std::size_t i = 0;
  for (; i + 4 <= batch.count; i += 4) {
    __m256d sum = _mm256_setzero_pd();
    for (std::size_t ax = 0; ax < dims; ++ax) {
      const __m256d c = _mm256_loadu_pd(batch.coords[ax] + i);
      const __m256d diff = _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_set1_pd(query[ax]), c));
      const __m256d wrapped = _mm256_sub_pd(vside, diff);
      const __m256d m = _mm256_min_pd(wrapped, diff);
      sum = _mm256_add_pd(sum, _mm256_mul_pd(m, m));
    }
    int mask = _mm256_movemask_pd(_mm256_cmp_pd(sum, vr2, _CMP_LE_OQ));
    while (mask != 0) {
      const int lane = __builtin_ctz(static_cast<unsigned>(mask));
      out[written++] = static_cast<std::uint32_t>(i + static_cast<std::size_t>(lane));
      mask &= mask - 1;
    }
  }
  if (i < batch.count) {
    const double* tail[16];
    std::vector<const double*> tail_heap;
    const double** tail_ptr = tail;
    if (dims > 16) {
      tail_heap.resize(dims);
      tail_ptr = tail_heap.data();
    }
    for (std::size_t ax = 0; ax < dims; ++ax) tail_ptr[ax] = batch.coords[ax] + i;
    PointBatch rest{std::span<const double* const>(tail_ptr, dims), batch.count - i};
    const std::size_t got = scalar::radius_filter(rest, query, side, r2, out + written);
    for (std::size_t t = 0; t < got; ++t) out[written + t] += static_cast<std::uint32_t>(i);
    written += got;
  }
  return written;
}

void map_scores_binary(const BinaryMapProblem& problem, std::uint64_t first, std::size_t count,
                       double* scores) {
  const int m = problem.m;
  const __m256i one = _mm256_set1_epi64x(1);
  std::size_t c = 0;
  for (; c + 4 <= count; c += 4) {
    const auto base = static_cast<long long>(first + c);
    const __m256i code = _mm256_setr_epi64x(base, base + 1, base + 2, base + 3);
    __m256d s = _mm256_setzero_pd();
    for (int i = 0; i < m; ++i) {
      const __m256i bit =
          _mm256_and_si256(_mm256_srl_epi64(code, _mm_cvtsi32_si128(m - 1 - i)), one);
      s = _mm256_add_pd(s, _mm256_i64gather_pd(problem.log_prior, bit, 8));
    }
    for (const auto& pr : problem.pairs) {
      const __m256i xa =
          _mm256_and_si256(_mm256_srl_epi64(code, _mm_cvtsi32_si128(m - 1 - pr.a)), one);
      const __m256i xb =
          _mm256_and_si256(_mm256_srl_epi64(code, _mm_cvtsi32_si128(m - 1 - pr.b)), one);
      s = _mm256_add_pd(s, _mm256_i64gather_pd(pr.w, _mm256_add_epi64(xa, xb), 8));
    }
    _mm256_storeu_pd(scores + c, s);
  }
  if (c < count) scalar::map_scores_binary(problem, first + c, count - c, scores + c);
}

}  // namespace ghcm::kernels::avx2
