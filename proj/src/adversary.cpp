#include "ghcm/adversary.hpp"

#include <algorithm>

#include "ghcm/errors.hpp"
#include "ghcm/rng.hpp"

namespace ghcm {

namespace {

void require_bernoulli(const ModelSpec& spec) {
  for (const auto& row : spec.P) {
    for (const auto& d : row) {
      if (!d.is_bernoulli()) throw Error(ErrorCode::kNotBernoulli, "adversaries act on Bernoulli models only");
    }
  }
}

void require_fraction(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, std::string(name) + " must lie in [0,1]");
  }
}

}  // namespace

AdversaryPolicy AdversaryPolicy::simulate_uniform(double a, double b, std::uint64_t seed) {
  AdversaryPolicy p;
  p.kind = Kind::kSimulateUniform;
  p.target_intra = a;
  p.target_inter = b;
  p.seed = seed;
  return p;
}

AdversaryPolicy AdversaryPolicy::random_monotone(double add_frac, double del_frac, std::uint64_t seed) {
  AdversaryPolicy p;
  p.kind = Kind::kRandomMonotone;
  p.add_frac = add_frac;
  p.del_frac = del_frac;
  p.seed = seed;
  return p;
}

void to_json(nlohmann::json& j, const AdversaryPolicy& p) {
  switch (p.kind) {
    case AdversaryPolicy::Kind::kNone:
      j = nlohmann::json{{"kind", "none"}, {"seed", p.seed}};
      break;
    case AdversaryPolicy::Kind::kSimulateUniform:
      j = nlohmann::json{{"kind", "simulate_uniform"}, {"a", p.target_intra}, {"b", p.target_inter}, {"seed", p.seed}};
      break;
    case AdversaryPolicy::Kind::kRandomMonotone:
      j = nlohmann::json{{"kind", "random_monotone"}, {"add_frac", p.add_frac}, {"del_frac", p.del_frac}, {"seed", p.seed}};
      break;
  }
}

void from_json(const nlohmann::json& j, AdversaryPolicy& p) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const std::uint64_t seed = j.value("seed", std::uint64_t{0});
    if (kind == "none") {
      p = AdversaryPolicy::none();
      p.seed = seed;
    } else if (kind == "simulate_uniform") {
      p = AdversaryPolicy::simulate_uniform(j.at("a").get<double>(), j.at("b").get<double>(), seed);
    } else if (kind == "random_monotone") {
      p = AdversaryPolicy::random_monotone(j.at("add_frac").get<double>(), j.at("del_frac").get<double>(), seed);
    } else {
      throw Error(ErrorCode::kInvalidSpec, "unknown adversary kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("malformed adversary policy: ") + e.what());
  }
}

Instance corrupt(const Instance& instance, const AdversaryPolicy& policy) {
  if (policy.kind == AdversaryPolicy::Kind::kNone) return instance;
  const auto& spec = instance.spec();
  require_bernoulli(spec);
  const std::size_t k = spec.k();

  // Per (i, j): probability that an eligible pair flips.
  std::vector<double> flip(k * k, 0.0);
  if (policy.kind == AdversaryPolicy::Kind::kRandomMonotone) {
    require_fraction(policy.add_frac, "add_frac");
    require_fraction(policy.del_frac, "del_frac");
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) flip[i * k + j] = i == j ? policy.add_frac : policy.del_frac;
    }
  } else {
    const double a = policy.target_intra;
    const double b = policy.target_inter;
    require_fraction(a, "a");
    require_fraction(b, "b");
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double p = spec.P[i][j].p;
        if (i == j) {
          if (a < p) throw Error(ErrorCode::kMonotonicityViolated, "target a is below an intra probability");
          // Adding non-edges w.p. (a - p) / (1 - p) lifts the edge rate to a.
          flip[i * k + j] = p < 1.0 ? (a - p) / (1.0 - p) : 0.0;
        } else {
          if (b > p) throw Error(ErrorCode::kMonotonicityViolated, "target b exceeds an inter probability");
          // Keeping edges w.p. b / p lowers the edge rate to b.
          flip[i * k + j] = p > 0.0 ? 1.0 - b / p : 0.0;
        }
      }
    }
  }

  const auto& truth = instance.truth();
  const std::uint64_t key = derive_seed(policy.seed, static_cast<std::uint64_t>(Stream::kAdversary));
  return instance.with_values([&](VertexId u, VertexId v, double y) {
    const auto i = static_cast<std::size_t>(truth[u]);
    const auto j = static_cast<std::size_t>(truth[v]);
    const bool eligible = i == j ? y == 0.0 : y == 1.0;
    if (!eligible) return y;
    CounterRng rng(derive_seed(key, u, v));
    if (rng.uniform() < flip[i * k + j]) return i == j ? 1.0 : 0.0;
    return y;
  });
}

std::pair<double, double> robust_thresholds(const ModelSpec& spec) {
  if (spec.k() != 2) throw Error(ErrorCode::kNotTwoCommunities, "robust propagation needs k = 2");
  require_bernoulli(spec);
  return {std::min(spec.P[0][0].p, spec.P[1][1].p), spec.P[0][1].p};
}

std::vector<int> propagate_two_community(const Instance& instance, std::span<const VertexId> reference,
                                         std::span<const int> reference_labels,
                                         std::span<const VertexId> targets, double a, double b) {
  if (instance.spec().k() != 2) throw Error(ErrorCode::kNotTwoCommunities, "robust propagation needs k = 2");
  std::size_t sizes[2] = {0, 0};
  for (int l : reference_labels) {
    if (l != kUnknown) ++sizes[l];
  }
  const int j = sizes[1] > sizes[0] ? 1 : 0;
  const std::size_t size_j = sizes[j];
  if (size_j == 0) throw Error(ErrorCode::kEmptyReference, "reference set has no labeled vertex");
  std::vector<VertexId> anchors;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference_labels[i] == j) anchors.push_back(reference[i]);
  }
  std::sort(anchors.begin(), anchors.end());
  const double cut = 0.5 * (a + b) * static_cast<double>(size_j);

  std::vector<int> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto nbrs = instance.neighbors(targets[t]);
    const auto vals = instance.values(targets[t]);
    std::size_t edges = 0;
    for (const VertexId v : anchors) {
      const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v);
      if (it != nbrs.end() && *it == v && vals[static_cast<std::size_t>(it - nbrs.begin())] == 1.0) ++edges;
    }
    out[t] = static_cast<double>(edges) >= cut ? j : 1 - j;
  }
  return out;
}

RecoveryReport recover_robust(const Instance& instance, const RecoveryOptions& options,
                              std::optional<double> a, std::optional<double> b) {
  const auto [a0, b0] = robust_thresholds(instance.spec());
  const double aa = a.value_or(a0);
  const double bb = b.value_or(b0);
  if (!(aa > bb)) throw Error(ErrorCode::kDomainError, "robust propagation needs a > b");
  RecoveryOptions opts = options;
  opts.allow_1d_fallback = false;
  return recover_with(
      instance, opts,
      [aa, bb](const Instance& inst, std::span<const VertexId> ref, std::span<const int> labels,
               std::span<const VertexId> targets) {
        return propagate_two_community(inst, ref, labels, targets, aa, bb);
      },
      "robust");
}

}  // namespace ghcm
