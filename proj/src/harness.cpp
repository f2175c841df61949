#include "ghcm/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>

#include "ghcm/errors.hpp"
#include "ghcm/geometry.hpp"
#include "ghcm/rng.hpp"

namespace ghcm {

namespace {

const std::vector<std::pair<SweepMode, const char*>> kModes = {
    {SweepMode::kExact, "exact"},
    {SweepMode::kAlmostExact, "almost_exact"},
    {SweepMode::kGenieErrorRate, "genie_error_rate"},
    {SweepMode::kConnectivity, "connectivity"},
};

const std::vector<std::pair<SweepAlgorithm, const char*>> kAlgorithms = {
    {SweepAlgorithm::kStandard, "standard"},
    {SweepAlgorithm::kRobust, "robust"},
    {SweepAlgorithm::kOneD, "one_d"},
};

template <typename E>
const char* name_of(const std::vector<std::pair<E, const char*>>& table, E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename E>
E parse_name(const std::vector<std::pair<E, const char*>>& table, const std::string& name, const char* what) {
  for (const auto& [e, n] : table) {
    if (name == n) return e;
  }
  throw Error(ErrorCode::kInvalidSpec, std::string("unknown ") + what + " '" + name + "'");
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

RecoveryReport run_algorithm(const SweepPlan& plan, const Instance& instance) {
  switch (plan.algorithm) {
    case SweepAlgorithm::kStandard: return recover(instance, plan.options);
    case SweepAlgorithm::kRobust: return recover_robust(instance, plan.options);
    case SweepAlgorithm::kOneD: return recover_1d(instance, plan.options);
  }
  return recover(instance, plan.options);
}

bool visibility_connected(const Instance& instance, const RecoveryOptions& options) {
  const auto& spec = instance.spec();
  const double chi = options.chi ? *options.chi : compute_chi(spec.lambda, spec.d);
  const double delta = options.delta ? *options.delta : compute_delta(spec.lambda, spec.d, chi).delta;
  const auto grid = build_grid(instance, chi);
  const auto vg = build_visibility_graph(grid, delta, spec.log_n());
  try {
    bfs_spanning_order(vg);
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDisconnected) throw;
    return false;
  }
}

}  // namespace

void SweepPlan::validate() const {
  base_spec.validate();
  if (values.empty()) throw Error(ErrorCode::kInvalidSpec, "sweep needs at least one value");
  if (trials_per_value < 1) throw Error(ErrorCode::kInvalidSpec, "trials_per_value must be >= 1");
  if (mode == SweepMode::kAlmostExact && !(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kInvalidSpec, "epsilon must lie in [0,1]");
  }
  if (options.refine_rounds < 0) throw Error(ErrorCode::kInvalidSpec, "refine_rounds must be >= 0");
  for (double v : values) apply_axis(base_spec, axis, v);
}

void to_json(nlohmann::json& j, const SweepPlan& p) {
  j = nlohmann::json{{"base_spec", p.base_spec},
                     {"axis", p.axis},
                     {"values", p.values},
                     {"trials_per_value", p.trials_per_value},
                     {"master_seed", p.master_seed},
                     {"mode", name_of(kModes, p.mode)},
                     {"algorithm", name_of(kAlgorithms, p.algorithm)},
                     {"refine_rounds", p.options.refine_rounds}};
  if (p.mode == SweepMode::kAlmostExact) j["epsilon"] = p.epsilon;
  if (p.mode == SweepMode::kConnectivity) {
    j["connectivity_graph"] = p.connectivity_graph == ConnectivityGraph::kVertex ? "vertex" : "visibility";
  }
  if (p.adversary) j["adversary"] = *p.adversary;
  nlohmann::json overrides = nlohmann::json::object();
  if (p.options.chi) overrides["chi"] = *p.options.chi;
  if (p.options.delta) overrides["delta"] = *p.options.delta;
  if (p.options.epsilon0) overrides["epsilon0"] = *p.options.epsilon0;
  if (!overrides.empty()) j["overrides"] = overrides;
}

void from_json(const nlohmann::json& j, SweepPlan& p) {
  try {
    p = SweepPlan{};
    p.base_spec = j.at("base_spec").get<ModelSpec>();
    p.axis = j.at("axis").get<std::string>();
    p.values = j.at("values").get<std::vector<double>>();
    p.trials_per_value = j.at("trials_per_value").get<int>();
    p.master_seed = j.at("master_seed").get<std::uint64_t>();
    p.mode = parse_name(kModes, j.value("mode", std::string("exact")), "mode");
    p.epsilon = j.value("epsilon", 0.05);
    const auto graph = j.value("connectivity_graph", std::string("visibility"));
    if (graph == "vertex") {
      p.connectivity_graph = ConnectivityGraph::kVertex;
    } else if (graph != "visibility") {
      throw Error(ErrorCode::kInvalidSpec, "connectivity_graph must be 'visibility' or 'vertex'");
    }
    p.algorithm = parse_name(kAlgorithms, j.value("algorithm", std::string("standard")), "algorithm");
    if (j.contains("adversary")) p.adversary = j.at("adversary").get<AdversaryPolicy>();
    p.options.refine_rounds = j.value("refine_rounds", 1);
    if (j.contains("overrides")) {
      const auto& o = j.at("overrides");
      if (o.contains("chi")) p.options.chi = o.at("chi").get<double>();
      if (o.contains("delta")) p.options.delta = o.at("delta").get<double>();
      if (o.contains("epsilon0")) p.options.epsilon0 = o.at("epsilon0").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("malformed sweep plan: ") + e.what());
  }
  p.validate();
}

ModelSpec apply_axis(const ModelSpec& base, const std::string& axis, double value) {
  ModelSpec s = base;
  static const std::regex prior_re(R"(prior\[(\d+)\])");
  static const std::regex entry_re(R"(P\[(\d+)\]\[(\d+)\]\.(p|mean|variance))");
  std::smatch m;
  if (axis == "lambda") {
    s.lambda = value;
  } else if (axis == "n") {
    s.n = value;
  } else if (axis == "log10_n") {
    s.n = std::pow(10.0, value);
  } else if (std::regex_match(axis, m, prior_re)) {
    const auto i = std::stoul(m[1].str());
    if (i >= s.k()) throw Error(ErrorCode::kInvalidSpec, "axis index out of range");
    if (!(value > 0.0 && value < 1.0)) throw Error(ErrorCode::kInvalidSpec, "prior value must lie in (0,1)");
    const double rest = 1.0 - s.prior[i];
    for (std::size_t r = 0; r < s.k(); ++r) {
      if (r != i) s.prior[r] = s.prior[r] / rest * (1.0 - value);
    }
    s.prior[i] = value;
    // Push the rounding residue into the last other entry.
    const std::size_t last = i + 1 == s.k() ? s.k() - 2 : s.k() - 1;
    s.prior[last] = 0.0;
    s.prior[last] = 1.0 - std::accumulate(s.prior.begin(), s.prior.end(), 0.0);
  } else if (std::regex_match(axis, m, entry_re)) {
    const auto i = std::stoul(m[1].str());
    const auto j = std::stoul(m[2].str());
    if (i >= s.k() || j >= s.k()) throw Error(ErrorCode::kInvalidSpec, "axis index out of range");
    for (auto* d : {&s.P[i][j], &s.P[j][i]}) {
      if (m[3] == "p") {
        d->p = value;
      } else if (m[3] == "mean") {
        d->mean = value;
      } else {
        d->variance = value;
      }
    }
  } else {
    throw Error(ErrorCode::kInvalidSpec, "unknown sweep axis '" + axis + "'");
  }
  s.validate();
  return s;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t value_index, std::size_t trial) {
  return derive_seed(master_seed, value_index, trial);
}

TrialOutcome run_trial(const SweepPlan& plan, const ModelSpec& spec, std::uint64_t seed) {
  TrialOutcome out;
  try {
    Instance instance = sample_instance(spec, seed);
    out.vertices = instance.num_vertices();
    out.mistakes = static_cast<double>(out.vertices);
    if (plan.adversary) {
      AdversaryPolicy policy = *plan.adversary;
      policy.seed = derive_seed(seed, policy.seed);
      instance = corrupt(instance, policy);
    }
    const auto start = std::chrono::steady_clock::now();
    switch (plan.mode) {
      case SweepMode::kConnectivity: {
        out.success = plan.connectivity_graph == ConnectivityGraph::kVertex
                          ? vertex_graph_connected(instance)
                          : visibility_connected(instance, plan.options);
        out.agreement = out.success ? 1.0 : 0.0;
        out.mistakes = 0.0;
        if (!out.success) out.reason = "Disconnected";
        break;
      }
      case SweepMode::kGenieErrorRate: {
        const LikelihoodTable table(spec);
        std::size_t wrong = 0;
        for (VertexId u = 0; u < instance.num_vertices(); ++u) {
          if (refine(instance, table, instance.truth(), u) != instance.truth()[u]) ++wrong;
        }
        out.mistakes = static_cast<double>(wrong);
        out.agreement = out.vertices == 0 ? 1.0 : 1.0 - out.mistakes / static_cast<double>(out.vertices);
        out.success = wrong == 0;
        if (!out.success) out.reason = "GenieErrors";
        break;
      }
      case SweepMode::kExact:
      case SweepMode::kAlmostExact: {
        const auto report = run_algorithm(plan, instance);
        out.agreement = report.agreement;
        out.mistakes = static_cast<double>(report.mistakes);
        const double need = plan.mode == SweepMode::kExact ? 1.0 : 1.0 - plan.epsilon;
        out.success = report.status == RecoveryStatus::kOk && report.agreement >= need;
        if (!out.success) {
          out.reason = report.status == RecoveryStatus::kOk ? "BelowTarget" : to_string(report.status);
        }
        break;
      }
    }
    out.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  } catch (const Error& e) {
    out.success = false;
    out.error = true;
    out.agreement = 0.0;
    out.reason = to_string(e.code());
  }
  return out;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GHCM_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const SweepPlan& plan, int workers) {
  plan.validate();
  std::vector<ModelSpec> specs;
  for (double v : plan.values) specs.push_back(apply_axis(plan.base_spec, plan.axis, v));
  const std::size_t per_value = static_cast<std::size_t>(plan.trials_per_value);
  const std::size_t total = specs.size() * per_value;
  std::vector<TrialOutcome> outcomes(total);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < total; t = next++) {
      const std::size_t vi = t / per_value;
      const std::size_t trial = t % per_value;
      outcomes[t] = run_trial(plan, specs[vi], trial_seed(plan.master_seed, vi, trial));
    }
  };
  const int w = std::min<int>(resolve_workers(workers), static_cast<int>(std::max<std::size_t>(total, 1)));
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < w; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  // Aggregate in trial order so sums do not depend on scheduling.
  SweepResult result;
  for (std::size_t vi = 0; vi < specs.size(); ++vi) {
    SweepRow row;
    row.value = plan.values[vi];
    row.margin = threshold_margin(specs[vi]);
    double sum_agreement = 0.0;
    double sum_runtime = 0.0;
    for (std::size_t trial = 0; trial < per_value; ++trial) {
      const auto& o = outcomes[vi * per_value + trial];
      ++row.trials;
      if (o.success) {
        ++row.successes;
      } else if (o.error) {
        ++row.errors;
      } else {
        ++row.failures;
      }
      if (!o.reason.empty()) ++row.reasons[o.reason];
      sum_agreement += o.agreement;
      row.total_mistakes += o.mistakes;
      row.total_vertices += static_cast<double>(o.vertices);
      sum_runtime += o.runtime_ms;
    }
    row.mean_agreement = sum_agreement / row.trials;
    row.mean_mistakes = row.total_mistakes / row.trials;
    row.mean_runtime_ms = sum_runtime / row.trials;
    result.rows.push_back(std::move(row));
  }
  return result;
}

void emit_csv(const SweepResult& result, std::ostream& out, bool with_timings) {
  out << "value,trials,successes,mean_agreement,mean_mistakes,margin,mean_runtime_ms\n";
  for (const auto& r : result.rows) {
    out << format_double(r.value) << ',' << r.trials << ',' << r.successes << ','
        << format_double(r.mean_agreement) << ',' << format_double(r.mean_mistakes) << ','
        << format_double(r.margin) << ',' << format_double(with_timings ? r.mean_runtime_ms : 0.0)
        << '\n';
  }
}

void emit_csv(const SweepResult& result, const std::string& path, bool with_timings) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  emit_csv(result, out, with_timings);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

std::vector<SweepRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "value,trials,successes,mean_agreement,mean_mistakes,margin,mean_runtime_ms") {
    throw Error(ErrorCode::kFormat, "unexpected CSV header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::kFormat, "CSV row must have 7 fields");
    SweepRow r;
    r.value = std::stod(cells[0]);
    r.trials = std::stoi(cells[1]);
    r.successes = std::stoi(cells[2]);
    r.mean_agreement = std::stod(cells[3]);
    r.mean_mistakes = std::stod(cells[4]);
    r.margin = std::stod(cells[5]);
    r.mean_runtime_ms = std::stod(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"value", r.value},
                    {"trials", r.trials},
                    {"successes", r.successes},
                    {"failures", r.failures},
                    {"errors", r.errors},
                    {"mean_agreement", r.mean_agreement},
                    {"mean_mistakes", r.mean_mistakes},
                    {"margin", r.margin},
                    {"total_mistakes", r.total_mistakes},
                    {"total_vertices", r.total_vertices},
                    {"reasons", r.reasons}});
  }
  return {{"schema_version", result.schema_version}, {"rows", rows}};
}

}  // namespace ghcm
