#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghcm/adversary.hpp"
#include "ghcm/model.hpp"
#include "ghcm/recovery.hpp"

namespace ghcm {

enum class SweepMode { kExact, kAlmostExact, kGenieErrorRate, kConnectivity };
enum class SweepAlgorithm { kStandard, kRobust, kOneD };
enum class ConnectivityGraph { kVisibility, kVertex };

struct SweepPlan {
  ModelSpec base_spec;
  // "lambda", "n", "log10_n", "prior[i]", "P[i][j].p", "P[i][j].mean", "P[i][j].variance".
  std::string axis = "lambda";
  std::vector<double> values;
  int trials_per_value = 1;
  std::uint64_t master_seed = 0;
  SweepMode mode = SweepMode::kExact;
  double epsilon = 0.05;  // AlmostExact: success iff agreement >= 1 - epsilon
  ConnectivityGraph connectivity_graph = ConnectivityGraph::kVisibility;
  SweepAlgorithm algorithm = SweepAlgorithm::kStandard;
  std::optional<AdversaryPolicy> adversary;
  RecoveryOptions options;

  void validate() const;
};

void to_json(nlohmann::json& j, const SweepPlan& p);
void from_json(const nlohmann::json& j, SweepPlan& p);

// base with one parameter replaced. Off-diagonal P entries are set on both
// sides; prior[i] rescales the other entries to keep the sum at 1.
ModelSpec apply_axis(const ModelSpec& base, const std::string& axis, double value);

struct TrialOutcome {
  bool success = false;
  bool error = false;
  std::string reason;  // failure status or error code, empty on success
  double agreement = 0.0;
  double mistakes = 0.0;
  std::size_t vertices = 0;
  double runtime_ms = 0.0;
};

TrialOutcome run_trial(const SweepPlan& plan, const ModelSpec& spec, std::uint64_t seed);

struct SweepRow {
  double value = 0.0;
  int trials = 0;
  int successes = 0;
  int failures = 0;
  int errors = 0;
  double mean_agreement = 0.0;
  double mean_mistakes = 0.0;
  double margin = 0.0;
  double mean_runtime_ms = 0.0;
  double total_mistakes = 0.0;
  double total_vertices = 0.0;
  std::map<std::string, int> reasons;
};

struct SweepResult {
  int schema_version = 1;
  std::vector<SweepRow> rows;
};

// Seed of trial t at value index i: derive_seed(master, i, t).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t value_index, std::size_t trial);

// Worker count: explicit > 0, else GHCM_WORKERS, else hardware concurrency.
int resolve_workers(int requested);

SweepResult run_sweep(const SweepPlan& plan, int workers = 0);

// CSV with header value,trials,successes,mean_agreement,mean_mistakes,margin,mean_runtime_ms.
// Runtime is wall-clock and so written as 0 unless `with_timings`.
void emit_csv(const SweepResult& result, std::ostream& out, bool with_timings = false);
void emit_csv(const SweepResult& result, const std::string& path, bool with_timings = false);
std::vector<SweepRow> parse_csv(std::istream& in);

nlohmann::json sweep_to_json(const SweepResult& result);

}  // namespace ghcm
