#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "ghcm/distribution.hpp"

namespace ghcm {

using Matrix = std::vector<std::vector<Distribution>>;

// Full GHCM(lambda, n, prior, P, d) parameterization. Communities are
// addressed internally by index 0..k-1; `labels` maps an index to the
// user-facing integer label and is kept strictly increasing so that index
// order and label order coincide (all argmax tie rules rely on this).
struct ModelSpec {
  double lambda = 1.0;
  double n = 1000.0;
  int d = 1;
  std::vector<int> labels;
  std::vector<double> prior;
  Matrix P;

  std::size_t k() const { return labels.size(); }

  // Throws Error(kInvalidSpec) describing the first violated invariant.
  void validate() const;

  // Edge length of the torus, n^(1/d).
  double side() const;
  // Visibility radius, (log n)^(1/d).
  double radius() const;
  double log_n() const;

  int index_of(int label) const;
};

void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

// Symmetric k-community Bernoulli model: P_ii = Bern(a), P_ij = Bern(b).
ModelSpec symmetric_gsbm(double lambda, double n, int d, int k, double a, double b);

// Volume of the unit Euclidean ball in R^d.
double unit_ball_volume(int d);

// A permutation of community indices.
struct Relabeling {
  std::vector<int> perm;

  int operator()(int index) const { return perm[static_cast<std::size_t>(index)]; }
  static Relabeling identity(std::size_t k);
  bool is_identity() const;
  Relabeling compose(const Relabeling& inner) const;  // (*this) o inner
  friend bool operator==(const Relabeling&, const Relabeling&) = default;
};

struct DivergenceResult {
  double value = 0.0;
  double argmin_t = 0.0;
};

// 1 - inf_t sum_r prior_r phi_t(theta_i[r], theta_j[r]).
DivergenceResult ch_divergence(std::span<const Distribution> theta_i,
                               std::span<const Distribution> theta_j,
                               std::span<const double> prior);

struct PairDivergence {
  int i = 0;
  int j = 0;
  DivergenceResult result;
};

std::vector<PairDivergence> pairwise_divergences(const ModelSpec& spec);
double min_pairwise_divergence(const ModelSpec& spec);

// lambda * nu_d * min_{i != j} D+(theta_i, theta_j); exact recovery is
// possible above 1.
double threshold_margin(const ModelSpec& spec);

inline constexpr std::size_t kMaxEnumerableCommunities = 8;

// All permissible relabelings, identity first, then lexicographic order of
// the permutation vector.
std::vector<Relabeling> enumerate_relabelings(const ModelSpec& spec);

// P_ir != P_is for every i and r != s.
bool satisfies_distinctness(const ModelSpec& spec);
// All unordered entries {P_ij} pairwise distinct.
bool satisfies_strong_distinctness(const ModelSpec& spec);

}  // namespace ghcm
