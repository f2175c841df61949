#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ghcm/geometry.hpp"
#include "ghcm/recovery.hpp"

namespace ghcm {

struct AdversaryPolicy {
  enum class Kind { kNone, kSimulateUniform, kRandomMonotone };

  Kind kind = Kind::kNone;
  double target_intra = 0.0;  // SimulateUniform: a
  double target_inter = 0.0;  // SimulateUniform: b
  double add_frac = 0.0;      // RandomMonotone: P(intra 0 -> 1)
  double del_frac = 0.0;      // RandomMonotone: P(inter 1 -> 0)
  std::uint64_t seed = 0;

  static AdversaryPolicy none() { return {}; }
  static AdversaryPolicy simulate_uniform(double a, double b, std::uint64_t seed);
  static AdversaryPolicy random_monotone(double add_frac, double del_frac, std::uint64_t seed);
};

void to_json(nlohmann::json& j, const AdversaryPolicy& p);
void from_json(const nlohmann::json& j, AdversaryPolicy& p);

// Applies a monotone corruption: intra-community pairs may only flip 0 -> 1
// and inter-community pairs only 1 -> 0. Positions, labels and the pair set
// are unchanged. Throws kNotBernoulli or kMonotonicityViolated.
Instance corrupt(const Instance& instance, const AdversaryPolicy& policy);

// Degree-threshold propagation for k = 2: a target joins the largest
// reference community j iff its edges into j number at least
// ((a + b) / 2) |j|, otherwise it joins the other community.
std::vector<int> propagate_two_community(const Instance& instance, std::span<const VertexId> reference,
                                         std::span<const int> reference_labels,
                                         std::span<const VertexId> targets, double a, double b);

// Intra/inter probabilities used by the robust path: a = min intra p,
// b = inter p. Throws kNotTwoCommunities / kNotBernoulli.
std::pair<double, double> robust_thresholds(const ModelSpec& spec);

// recover() with propagate_two_community in Phase I. `a`/`b` default to
// robust_thresholds(spec).
RecoveryReport recover_robust(const Instance& instance, const RecoveryOptions& options = {},
                              std::optional<double> a = std::nullopt,
                              std::optional<double> b = std::nullopt);

}  // namespace ghcm
