#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Data-parallel inner loops. Every kernel has a scalar reference version and,
// where the target supports it, an AVX2 version that performs the identical
// sequence of IEEE operations per lane, so both produce bit-identical output.
namespace ghcm::kernels {

enum class Isa { kScalar, kAvx2 };

const char* to_string(Isa isa);
bool isa_available(Isa isa);

// Best available ISA, unless GHCM_SIMD=scalar|avx2 says otherwise.
Isa active_isa();
// Test hook; overrides active_isa() for the whole process.
void force_isa(Isa isa);

// Candidate points in structure-of-arrays form: coords[axis][i].
struct PointBatch {
  std::span<const double* const> coords;
  std::size_t count = 0;
};

// Writes offset i of every candidate whose toroidal squared distance to
// `query` is <= r2 into `out` (ascending), returns how many were written.
// `out` must hold batch.count entries.
std::size_t radius_filter(Isa isa, const PointBatch& batch, std::span<const double> query,
                          double side, double r2, std::uint32_t* out);

// Log-posterior of binary labelings of m vertices. Bit (m-1-i) of a labeling
// code is the community index of vertex i, so ascending codes enumerate label
// vectors in lexicographic order.
struct BinaryMapProblem {
  int m = 0;
  double log_prior[2] = {0.0, 0.0};
  struct Pair {
    int a = 0;
    int b = 0;
    double w[3] = {0.0, 0.0, 0.0};  // indexed by x_a + x_b
  };
  std::vector<Pair> pairs;
};

// scores[c] = log posterior of labeling code (first + c), c < count.
void map_scores_binary(Isa isa, const BinaryMapProblem& problem, std::uint64_t first,
                       std::size_t count, double* scores);

namespace scalar {
std::size_t radius_filter(const PointBatch& batch, std::span<const double> query, double side,
                          double r2, std::uint32_t* out);
void map_scores_binary(const BinaryMapProblem& problem, std::uint64_t first, std::size_t count,
                       double* scores);
}  // namespace scalar

namespace avx2 {
std::size_t radius_filter(const PointBatch& batch, std::span<const double> query, double side,
                          double r2, std::uint32_t* out);
void map_scores_binary(const BinaryMapProblem& problem, std::uint64_t first, std::size_t count,
                       double* scores);
}  // namespace avx2

}  // namespace ghcm::kernels
