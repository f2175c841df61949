#include "ghcm/recovery.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

#include "ghcm/errors.hpp"
#include "ghcm/kernels.hpp"

namespace ghcm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int argmax_smallest(std::span<const double> scores) {
  int best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

// k^m, or budget + 1 once it exceeds the budget.
std::uint64_t capped_power(std::uint64_t k, std::size_t m, std::uint64_t budget) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < m; ++i) {
    if (total > budget / k) return budget + 1;
    total *= k;
  }
  return total;
}

struct SubsetPair {
  int a = 0;
  int b = 0;
  double y = 0.0;
};

// Observed pairs inside `subset`, indexed by subset position, in the order
// (a ascending, then neighbor id ascending).
std::vector<SubsetPair> subset_pairs(const Instance& instance, std::span<const VertexId> subset) {
  std::vector<std::pair<VertexId, int>> index;
  index.reserve(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) index.emplace_back(subset[i], static_cast<int>(i));
  std::sort(index.begin(), index.end());
  std::vector<SubsetPair> pairs;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    const auto nbrs = instance.neighbors(subset[a]);
    const auto vals = instance.values(subset[a]);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const auto it = std::lower_bound(index.begin(), index.end(), std::make_pair(nbrs[e], 0));
      if (it != index.end() && it->first == nbrs[e] && it->second > static_cast<int>(a)) {
        pairs.push_back({static_cast<int>(a), it->second, vals[e]});
      }
    }
  }
  return pairs;
}

std::vector<int> map_binary(const LikelihoodTable& table, std::size_t m,
                            const std::vector<SubsetPair>& pairs) {
  kernels::BinaryMapProblem problem;
  problem.m = static_cast<int>(m);
  problem.log_prior[0] = table.log_prior(0);
  problem.log_prior[1] = table.log_prior(1);
  for (const auto& p : pairs) {
    kernels::BinaryMapProblem::Pair q;
    q.a = p.a;
    q.b = p.b;
    q.w[0] = table(0, 0, p.y);
    q.w[1] = table(0, 1, p.y);
    q.w[2] = table(1, 1, p.y);
    problem.pairs.push_back(q);
  }
  const kernels::Isa isa = kernels::active_isa();
  const std::uint64_t total = std::uint64_t{1} << m;
  constexpr std::size_t kChunk = 4096;
  std::vector<double> scores(kChunk);
  std::uint64_t best_code = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t first = 0; first < total; first += kChunk) {
    const auto count = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, total - first));
    kernels::map_scores_binary(isa, problem, first, count, scores.data());
    for (std::size_t c = 0; c < count; ++c) {
      if (scores[c] > best || (first == 0 && c == 0)) {
        best = scores[c];
        best_code = first + c;
      }
    }
  }
  std::vector<int> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<int>((best_code >> (m - 1 - i)) & 1U);
  return out;
}

std::vector<int> map_general(const LikelihoodTable& table, std::size_t m,
                             const std::vector<SubsetPair>& pairs) {
  const int k = static_cast<int>(table.k());
  std::vector<int> x(m, 0);
  std::vector<int> best_x = x;
  double best = -std::numeric_limits<double>::infinity();
  bool first = true;
  while (true) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s = s + table.log_prior(x[i]);
    for (const auto& p : pairs) {
      s = s + table(x[static_cast<std::size_t>(p.a)], x[static_cast<std::size_t>(p.b)], p.y);
    }
    if (first || s > best) {
      best = s;
      best_x = x;
      first = false;
    }
    // Odometer with the last vertex as the fastest digit: lexicographic order.
    std::size_t pos = m;
    while (pos > 0 && x[pos - 1] == k - 1) x[--pos] = 0;
    if (pos == 0) break;
    ++x[pos - 1];
  }
  return best_x;
}

Labeling truth_labeling(const Instance& instance) { return instance.truth(); }

void refine_all(const Instance& instance, const LikelihoodTable& table, Labeling& labels, int rounds,
                bool gauss_seidel) {
  for (int r = 0; r < rounds; ++r) {
    if (gauss_seidel) {
      for (VertexId u = 0; u < labels.size(); ++u) labels[u] = refine(instance, table, labels, u);
    } else {
      Labeling next(labels.size());
      for (VertexId u = 0; u < labels.size(); ++u) next[u] = refine(instance, table, labels, u);
      labels = std::move(next);
    }
  }
}

void score_report(const Instance& instance, const BlockGrid* grid, RecoveryReport& report) {
  const auto omegas = enumerate_relabelings(instance.spec());
  const Labeling truth = truth_labeling(instance);
  const auto agree = agreement(report.final, truth, omegas);
  report.agreement = agree.value;
  report.best_relabeling = agree.best;
  report.mistakes = 0;
  report.mistakes_per_block.clear();
  for (VertexId u = 0; u < truth.size(); ++u) {
    if (report.final[u] == kUnknown || report.final[u] != agree.best(truth[u])) {
      ++report.mistakes;
      if (grid != nullptr) ++report.mistakes_per_block[grid->block_of_vertex[u]];
    }
  }
}

int initial_subset_size(double epsilon0, double log_n, std::size_t available) {
  const double want = std::max(1.0, std::ceil(epsilon0 * log_n));
  return static_cast<int>(std::min<double>(want, static_cast<double>(available)));
}

RecoveryReport fallback_1d(const Instance& instance, const RecoveryOptions& options) {
  RecoveryOptions opts = options;
  opts.chi.reset();
  opts.delta.reset();
  opts.epsilon0.reset();
  return recover_1d(instance, opts);
}

bool can_fall_back(const Instance& instance, const RecoveryOptions& options) {
  const auto& spec = instance.spec();
  return options.allow_1d_fallback && spec.d == 1 && enumerate_relabelings(spec).size() == 1 &&
         satisfies_strong_distinctness(spec);
}

}  // namespace

LikelihoodTable::LikelihoodTable(const ModelSpec& spec) : k_(spec.k()) {
  entries_.resize(k_ * k_);
  for (std::size_t i = 0; i < k_; ++i) {
    log_prior_.push_back(std::log(spec.prior[i]));
    for (std::size_t j = 0; j < k_; ++j) {
      const auto& d = spec.P[i][j];
      Entry& e = entries_[i * k_ + j];
      e.bernoulli = d.is_bernoulli();
      if (e.bernoulli) {
        e.log_p1 = log_likelihood(d, 1.0);
        e.log_p0 = log_likelihood(d, 0.0);
      } else {
        e.mean = d.mean;
        e.variance = d.variance;
        e.log_norm = 0.5 * std::log(2.0 * std::numbers::pi * d.variance);
      }
    }
  }
}

double LikelihoodTable::operator()(int i, int j, double y) const {
  const Entry& e = entries_[static_cast<std::size_t>(i) * k_ + static_cast<std::size_t>(j)];
  if (e.bernoulli) {
    if (y == 1.0) return e.log_p1;
    if (y == 0.0) return e.log_p0;
    throw Error(ErrorCode::kDomainError, "Bernoulli observation must be 0 or 1");
  }
  const double diff = y - e.mean;
  return -diff * diff / (2.0 * e.variance) - e.log_norm;
}

std::vector<int> map_initial_block(const Instance& instance, std::span<const VertexId> subset,
                                   std::uint64_t budget) {
  const auto& spec = instance.spec();
  const std::size_t m = subset.size();
  if (m == 0) return {};
  if (capped_power(spec.k(), m, budget) > budget) {
    throw Error(ErrorCode::kMapBudgetExceeded,
                "k^|subset| labelings exceed the MAP budget of " + std::to_string(budget));
  }
  const LikelihoodTable table(spec);
  const auto pairs = subset_pairs(instance, subset);
  if (spec.k() == 2 && m < 63) return map_binary(table, m, pairs);
  return map_general(table, m, pairs);
}

std::vector<int> propagate(const Instance& instance, std::span<const VertexId> reference,
                           std::span<const int> reference_labels, std::span<const VertexId> targets) {
  const auto& spec = instance.spec();
  const std::size_t k = spec.k();
  std::vector<std::size_t> sizes(k, 0);
  for (int l : reference_labels) {
    if (l != kUnknown) ++sizes[static_cast<std::size_t>(l)];
  }
  const auto j = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  if (sizes[static_cast<std::size_t>(j)] == 0) {
    throw Error(ErrorCode::kEmptyReference, "reference set has no labeled vertex");
  }
  std::vector<VertexId> anchors;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference_labels[i] == j) anchors.push_back(reference[i]);
  }
  std::sort(anchors.begin(), anchors.end());

  const LikelihoodTable table(spec);
  std::vector<double> scores(k);
  std::vector<int> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const VertexId u = targets[t];
    const auto nbrs = instance.neighbors(u);
    const auto vals = instance.values(u);
    std::fill(scores.begin(), scores.end(), 0.0);
    for (const VertexId v : anchors) {
      const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v);
      if (it == nbrs.end() || *it != v) continue;
      const double y = vals[static_cast<std::size_t>(it - nbrs.begin())];
      for (std::size_t r = 0; r < k; ++r) scores[r] += table(j, static_cast<int>(r), y);
    }
    out[t] = argmax_smallest(scores);
  }
  return out;
}

int refine(const Instance& instance, const LikelihoodTable& table, const Labeling& labels, VertexId u) {
  const std::size_t k = table.k();
  constexpr std::size_t kInline = 16;
  std::array<double, kInline> inline_scores{};
  std::vector<double> heap_scores;
  std::span<double> scores;
  if (k <= kInline) {
    scores = std::span<double>(inline_scores.data(), k);
  } else {
    heap_scores.assign(k, 0.0);
    scores = heap_scores;
  }
  const auto nbrs = instance.neighbors(u);
  const auto vals = instance.values(u);
  bool any = false;
  for (std::size_t e = 0; e < nbrs.size(); ++e) {
    const int l = labels[nbrs[e]];
    if (l == kUnknown) continue;
    any = true;
    for (std::size_t i = 0; i < k; ++i) scores[i] += table(static_cast<int>(i), l, vals[e]);
  }
  if (!any) {
    for (std::size_t i = 0; i < k; ++i) scores[i] = table.log_prior(static_cast<int>(i));
  }
  return argmax_smallest(scores);
}

int refine(const Instance& instance, const Labeling& labels, VertexId u) {
  return refine(instance, LikelihoodTable(instance.spec()), labels, u);
}

int genie(const Instance& instance, VertexId u) { return refine(instance, instance.truth(), u); }

AgreementResult agreement(const Labeling& estimate, const Labeling& truth,
                          const std::vector<Relabeling>& omegas) {
  AgreementResult out;
  if (omegas.empty()) throw Error(ErrorCode::kDomainError, "no relabelings to maximize over");
  out.best = omegas.front();
  if (truth.empty()) {
    out.value = 1.0;
    return out;
  }
  std::size_t best_hits = 0;
  bool first = true;
  for (const auto& w : omegas) {
    std::size_t hits = 0;
    for (std::size_t u = 0; u < truth.size(); ++u) {
      if (estimate[u] != kUnknown && truth[u] != kUnknown && estimate[u] == w(truth[u])) ++hits;
    }
    if (first || hits > best_hits) {
      best_hits = hits;
      out.best = w;
      first = false;
    }
  }
  out.value = static_cast<double>(best_hits) / static_cast<double>(truth.size());
  return out;
}

const char* to_string(RecoveryStatus status) {
  switch (status) {
    case RecoveryStatus::kOk: return "Ok";
    case RecoveryStatus::kVisibilityDisconnected: return "VisibilityDisconnected";
    case RecoveryStatus::kMapBudgetExceeded: return "MapBudgetExceeded";
  }
  return "Unknown";
}

RecoveryReport recover(const Instance& instance, const RecoveryOptions& options) {
  return recover_with(instance, options, propagate, "standard");
}

RecoveryReport recover_with(const Instance& instance, const RecoveryOptions& options,
                            const PropagateFn& propagate_fn, const std::string& algorithm) {
  const auto start = Clock::now();
  const auto& spec = instance.spec();
  if (!satisfies_distinctness(spec)) {
    throw Error(ErrorCode::kDistinctnessViolated, "P_ir must differ from P_is for r != s");
  }
  RecoveryReport report;
  report.algorithm = algorithm;
  report.phase1.assign(instance.num_vertices(), kUnknown);

  try {
    report.chi = options.chi ? *options.chi : compute_chi(spec.lambda, spec.d);
    report.delta = options.delta ? *options.delta : compute_delta(spec.lambda, spec.d, report.chi).delta;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInfeasibleRegime && can_fall_back(instance, options)) {
      return fallback_1d(instance, options);
    }
    throw;
  }
  const double log_n = spec.log_n();
  const BlockGrid grid = build_grid(instance, report.chi);
  const VisibilityGraph vg = build_visibility_graph(grid, report.delta, log_n);
  report.num_blocks = grid.num_blocks();
  report.occupied_blocks = vg.size();

  std::vector<TreeStep> order;
  try {
    order = bfs_spanning_order(vg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDisconnected) throw;
    if (can_fall_back(instance, options)) return fallback_1d(instance, options);
    report.status = RecoveryStatus::kVisibilityDisconnected;
    report.final = report.phase1;
    report.timings.setup_ms = ms_since(start);
    report.timings.total_ms = report.timings.setup_ms;
    score_report(instance, &grid, report);
    return report;
  }
  report.segments = 1;
  report.timings.setup_ms = ms_since(start);

  // Phase I.
  const auto phase1_start = Clock::now();
  const double k = static_cast<double>(spec.k());
  report.epsilon0 = options.epsilon0 ? *options.epsilon0 : std::min(1.0 / (2.0 * std::log(k)), report.delta);
  const auto root = grid.members_of(order.front().block);
  const int m0 = initial_subset_size(report.epsilon0, log_n, root.size());
  report.initial_subset_size = static_cast<std::size_t>(m0);
  const auto initial = root.first(static_cast<std::size_t>(m0));
  try {
    const auto labels = map_initial_block(instance, initial, options.map_budget);
    for (int i = 0; i < m0; ++i) report.phase1[initial[static_cast<std::size_t>(i)]] = labels[static_cast<std::size_t>(i)];
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMapBudgetExceeded) throw;
    report.status = RecoveryStatus::kMapBudgetExceeded;
    report.final = report.phase1;
    score_report(instance, &grid, report);
    return report;
  }
  auto label_block = [&](std::span<const VertexId> reference, std::span<const VertexId> targets) {
    if (targets.empty()) return;
    std::vector<int> ref_labels(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) ref_labels[i] = report.phase1[reference[i]];
    const auto labels = propagate_fn(instance, reference, ref_labels, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) report.phase1[targets[i]] = labels[i];
  };
  label_block(initial, root.subspan(static_cast<std::size_t>(m0)));
  for (std::size_t s = 1; s < order.size(); ++s) {
    label_block(grid.members_of(order[s].parent), grid.members_of(order[s].block));
  }
  report.timings.phase1_ms = ms_since(phase1_start);

  // Phase II.
  const auto phase2_start = Clock::now();
  report.final = report.phase1;
  refine_all(instance, LikelihoodTable(spec), report.final, options.refine_rounds, options.gauss_seidel);
  report.timings.phase2_ms = ms_since(phase2_start);
  report.timings.total_ms = ms_since(start);
  score_report(instance, &grid, report);
  return report;
}

RecoveryReport recover_1d(const Instance& instance, const RecoveryOptions& options) {
  const auto start = Clock::now();
  const auto& spec = instance.spec();
  if (spec.d != 1) throw Error(ErrorCode::kDomainError, "recover_1d requires d = 1");
  if (enumerate_relabelings(spec).size() != 1) {
    throw Error(ErrorCode::kDistinctnessViolated, "recover_1d requires the identity to be the only relabeling");
  }
  if (!satisfies_strong_distinctness(spec)) {
    throw Error(ErrorCode::kDistinctnessViolated, "recover_1d requires pairwise distinct P entries");
  }
  RecoveryReport report;
  report.algorithm = "one_d";
  report.phase1.assign(instance.num_vertices(), kUnknown);
  report.chi = options.chi.value_or(0.5);
  // Any nonempty block counts as occupied.
  report.delta = options.delta.value_or(0.0);
  const double log_n = spec.log_n();
  const BlockGrid grid = build_grid(instance, report.chi);
  const VisibilityGraph vg = build_visibility_graph(grid, report.delta, log_n);
  const auto segments = connected_components(vg);
  report.num_blocks = grid.num_blocks();
  report.occupied_blocks = vg.size();
  report.segments = segments.size();
  report.epsilon0 = options.epsilon0.value_or(spec.lambda / (4.0 * std::log(static_cast<double>(spec.k()))));
  report.timings.setup_ms = ms_since(start);

  const auto phase1_start = Clock::now();
  const LikelihoodTable table(spec);
  auto label_block = [&](std::span<const VertexId> reference, std::span<const VertexId> targets) {
    if (targets.empty()) return;
    std::vector<int> ref_labels(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) ref_labels[i] = report.phase1[reference[i]];
    const auto labels = propagate(instance, reference, ref_labels, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) report.phase1[targets[i]] = labels[i];
  };
  for (const auto& segment : segments) {
    const auto lead = grid.members_of(segment.front());
    const int m0 = initial_subset_size(report.epsilon0, log_n, lead.size());
    report.initial_subset_size = std::max(report.initial_subset_size, static_cast<std::size_t>(m0));
    const auto initial = lead.first(static_cast<std::size_t>(m0));
    try {
      const auto labels = map_initial_block(instance, initial, options.map_budget);
      for (int i = 0; i < m0; ++i) report.phase1[initial[static_cast<std::size_t>(i)]] = labels[static_cast<std::size_t>(i)];
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMapBudgetExceeded) throw;
      report.status = RecoveryStatus::kMapBudgetExceeded;
      report.final = report.phase1;
      score_report(instance, &grid, report);
      return report;
    }
    label_block(initial, lead.subspan(static_cast<std::size_t>(m0)));
    for (std::size_t b = 1; b < segment.size(); ++b) {
      label_block(grid.members_of(segment[b - 1]), grid.members_of(segment[b]));
    }
  }
  report.timings.phase1_ms = ms_since(phase1_start);

  const auto phase2_start = Clock::now();
  report.final = report.phase1;
  if (options.refine_1d) {
    refine_all(instance, table, report.final, options.refine_rounds, options.gauss_seidel);
  }
  report.timings.phase2_ms = ms_since(phase2_start);
  report.timings.total_ms = ms_since(start);
  score_report(instance, &grid, report);
  return report;
}

nlohmann::json report_to_json(const Instance& instance, const RecoveryReport& report,
                              bool include_labels) {
  const auto& labels = instance.spec().labels;
  nlohmann::json relabel = nlohmann::json::object();
  for (std::size_t i = 0; i < report.best_relabeling.perm.size(); ++i) {
    relabel[std::to_string(labels[i])] = labels[static_cast<std::size_t>(report.best_relabeling.perm[i])];
  }
  nlohmann::json per_block = nlohmann::json::object();
  for (const auto& [block, count] : report.mistakes_per_block) per_block[std::to_string(block)] = count;
  const auto unknown = static_cast<std::size_t>(std::count(report.phase1.begin(), report.phase1.end(), kUnknown));
  nlohmann::json j{{"algorithm", report.algorithm},
                   {"status", to_string(report.status)},
                   {"num_vertices", instance.num_vertices()},
                   {"agreement", report.agreement},
                   {"mistakes", report.mistakes},
                   {"best_relabeling", relabel},
                   {"mistakes_per_block", per_block},
                   {"chi", report.chi},
                   {"delta", report.delta},
                   {"epsilon0", report.epsilon0},
                   {"initial_subset_size", report.initial_subset_size},
                   {"num_blocks", report.num_blocks},
                   {"occupied_blocks", report.occupied_blocks},
                   {"segments", report.segments},
                   {"phase1_unknown", unknown},
                   {"timings_ms",
                    {{"setup", report.timings.setup_ms},
                     {"phase1", report.timings.phase1_ms},
                     {"phase2", report.timings.phase2_ms},
                     {"total", report.timings.total_ms}}}};
  if (include_labels) {
    nlohmann::json out = nlohmann::json::array();
    for (int l : report.final) {
      if (l == kUnknown) {
        out.push_back(nullptr);
      } else {
        out.push_back(labels[static_cast<std::size_t>(l)]);
      }
    }
    j["labels"] = std::move(out);
  }
  return j;
}

}  // namespace ghcm
