#include <algorithm>
#include <cmath>

#include "ghcm/kernels.hpp"

namespace ghcm::kernels::scalar {

std::size_t radius_filter(const PointBatch& batch, std::span<const double> query, double side,
                          double r2, std::uint32_t* out) {
  std::size_t written = 0;
  const std::size_t dims = query.size();
  for (std::size_t i = 0; i < batch.count; ++i) {
    double sum = 0.0;
    for (std::size_t ax = 0; ax < dims; ++ax) {
      const double diff = std::abs(query[ax] - batch.coords[ax][i]);
      const double wrapped = side - diff;
      const double m = wrapped < diff ? wrapped : diff;
      sum = sum + m * m;
    }
    if (sum <= r2) out[written++] = static_cast<std::uint32_t>(i);
  }
  return written;
}

void map_scores_binary(const BinaryMapProblem& problem, std::uint64_t first, std::size_t count,
                       double* scores) {
  const int m = problem.m;
  for (std::size_t c = 0; c < count; ++c) {
    const std::uint64_t code = first + c;
    double s = 0.0;
    for (int i = 0; i < m; ++i) s = s + problem.log_prior[(code >> (m - 1 - i)) & 1U];
    for (const auto& pr : problem.pairs) {
      const auto xa = (code >> (m - 1 - pr.a)) & 1U;
      const auto xb = (code >> (m - 1 - pr.b)) & 1U;
      s = s + pr.w[xa + xb];
    }
    scores[c] = s;
  }
}

}  // namespace ghcm::kernels::scalar
