#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghcm/geometry.hpp"
#include "ghcm/model.hpp"

namespace ghcm {

// Community index per vertex; kUnknown marks a vertex left unlabeled.
inline constexpr int kUnknown = -1;
using Labeling = std::vector<int>;

// log p_ij(y) with the per-entry constants hoisted out of the inner loops.
// Produces exactly the same doubles as log_likelihood().
class LikelihoodTable {
 public:
  explicit LikelihoodTable(const ModelSpec& spec);

  std::size_t k() const { return k_; }
  double operator()(int i, int j, double y) const;
  double log_prior(int i) const { return log_prior_[static_cast<std::size_t>(i)]; }

 private:
  struct Entry {
    bool bernoulli = true;
    double log_p1 = 0.0;
    double log_p0 = 0.0;
    double mean = 0.0;
    double variance = 1.0;
    double log_norm = 0.0;
  };
  std::size_t k_ = 0;
  std::vector<Entry> entries_;
  std::vector<double> log_prior_;
};

inline constexpr std::uint64_t kDefaultMapBudget = std::uint64_t{1} << 26;

// Exact MAP labeling of `subset` (community indices, in subset order). Ties
// go to the lexicographically smallest label vector. Throws
// kMapBudgetExceeded when k^|subset| > budget.
std::vector<int> map_initial_block(const Instance& instance, std::span<const VertexId> subset,
                                   std::uint64_t budget = kDefaultMapBudget);

// Labels each target by likelihood against the reference vertices of the
// largest labeled community j: argmax_r sum log p_jr(y_uv). Throws
// kEmptyReference when no reference vertex is labeled.
std::vector<int> propagate(const Instance& instance, std::span<const VertexId> reference,
                           std::span<const int> reference_labels, std::span<const VertexId> targets);

// argmax_i sum over labeled neighbors v of log p_{i, labels(v)}(y_uv); falls
// back to the most likely prior community when no neighbor is labeled.
int refine(const Instance& instance, const Labeling& labels, VertexId u);
int refine(const Instance& instance, const LikelihoodTable& table, const Labeling& labels, VertexId u);

// The genie-aided estimate: refine against the ground truth.
int genie(const Instance& instance, VertexId u);

struct AgreementResult {
  double value = 0.0;
  Relabeling best;
};

// max over omega of the fraction of u with estimate(u) = omega(truth(u)).
// kUnknown never matches; ties keep the earliest relabeling.
AgreementResult agreement(const Labeling& estimate, const Labeling& truth,
                          const std::vector<Relabeling>& omegas);

enum class RecoveryStatus { kOk, kVisibilityDisconnected, kMapBudgetExceeded };
const char* to_string(RecoveryStatus status);

struct RecoveryOptions {
  std::optional<double> chi;
  std::optional<double> delta;
  std::optional<double> epsilon0;
  int refine_rounds = 1;
  bool gauss_seidel = false;
  std::uint64_t map_budget = kDefaultMapBudget;
  // recover(): hand d = 1 instances that cannot be recovered exactly to
  // recover_1d() when its preconditions hold.
  bool allow_1d_fallback = true;
  // recover_1d(): run refine_rounds passes after the segmented propagation.
  bool refine_1d = false;
};

struct RecoveryTimings {
  double setup_ms = 0.0;
  double phase1_ms = 0.0;
  double phase2_ms = 0.0;
  double total_ms = 0.0;
};

struct RecoveryReport {
  std::string algorithm;
  RecoveryStatus status = RecoveryStatus::kOk;
  Labeling phase1;
  Labeling final;
  double agreement = 0.0;
  Relabeling best_relabeling;
  std::size_t mistakes = 0;
  std::map<BlockId, std::size_t> mistakes_per_block;  // blocks with at least one mistake
  double chi = 0.0;
  double delta = 0.0;
  double epsilon0 = 0.0;
  std::size_t initial_subset_size = 0;
  std::int64_t num_blocks = 0;
  std::size_t occupied_blocks = 0;
  std::size_t segments = 0;
  RecoveryTimings timings;
};

nlohmann::json report_to_json(const Instance& instance, const RecoveryReport& report,
                              bool include_labels = true);

using PropagateFn = std::function<std::vector<int>(
    const Instance&, std::span<const VertexId>, std::span<const int>, std::span<const VertexId>)>;

// Two-phase exact recovery: MAP on an initial subset of the root block,
// propagation along the BFS order of the visibility graph, then refinement.
RecoveryReport recover(const Instance& instance, const RecoveryOptions& options = {});

// recover() with a different Phase I propagation rule.
RecoveryReport recover_with(const Instance& instance, const RecoveryOptions& options,
                            const PropagateFn& propagate_fn, const std::string& algorithm);

// d = 1 segmented variant: every run of occupied blocks is labeled
// independently from its leftmost block, left to right.
RecoveryReport recover_1d(const Instance& instance, const RecoveryOptions& options = {});

}  // namespace ghcm
