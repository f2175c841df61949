#include "ghcm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ghcm/adversary.hpp"
#include "ghcm/errors.hpp"
#include "ghcm/harness.hpp"
#include "ghcm/instance_io.hpp"
#include "ghcm/recovery.hpp"

namespace ghcm {

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, "'" + path + "' is not valid JSON: " + e.what());
  }
}

// Inline JSON, or @path to read it from a file.
nlohmann::json read_json_arg(const std::string& text) {
  if (!text.empty() && text.front() == '@') return read_json_file(text.substr(1));
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("argument is not valid JSON: ") + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

nlohmann::json threshold_json(const ModelSpec& spec) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& pd : pairwise_divergences(spec)) {
    pairs.push_back({{"i", spec.labels[static_cast<std::size_t>(pd.i)]},
                     {"j", spec.labels[static_cast<std::size_t>(pd.j)]},
                     {"divergence", pd.result.value},
                     {"argmin_t", pd.result.argmin_t}});
  }
  return {{"margin", threshold_margin(spec)},
          {"lambda", spec.lambda},
          {"d", spec.d},
          {"nu_d", unit_ball_volume(spec.d)},
          {"min_divergence", min_pairwise_divergence(spec)},
          {"pairs", pairs}};
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geometric hidden community model toolkit"};
  app.name("ghcm");
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_path;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("generate", "Sample an instance (.json output is JSON, else binary)");
  gen->add_option("--spec", spec_path, "Model spec JSON")->required();
  gen->add_option("--seed", seed, "Sampling seed")->required();
  gen->add_option("--out", out_path, "Output instance path")->required();

  std::string in_path;
  std::string report_path;
  std::string algorithm = "standard";
  double chi = 0.0;
  double delta = 0.0;
  double epsilon0 = 0.0;
  int refine_rounds = 1;
  bool gauss_seidel = false;
  bool refine_1d = false;
  bool no_labels = false;
  auto* rec = app.add_subcommand("recover", "Recover communities from an instance");
  rec->add_option("--in", in_path, "Instance path")->required();
  rec->add_option("--report", report_path, "Report JSON path (stdout if omitted)");
  rec->add_option("--algorithm", algorithm, "standard | robust | one_d")
      ->check(CLI::IsMember({"standard", "robust", "one_d"}));
  auto* chi_opt = rec->add_option("--chi", chi, "Block volume factor override");
  auto* delta_opt = rec->add_option("--delta", delta, "Occupancy threshold override");
  auto* eps_opt = rec->add_option("--epsilon0", epsilon0, "Initial subset factor override");
  rec->add_option("--refine-rounds", refine_rounds, "Refinement passes")->check(CLI::NonNegativeNumber);
  rec->add_flag("--gauss-seidel", gauss_seidel, "Refine in place instead of against the frozen labels");
  rec->add_flag("--refine", refine_1d, "one_d: run refinement after propagation");
  rec->add_flag("--no-labels", no_labels, "Omit the per-vertex labels from the report");

  auto* thr = app.add_subcommand("threshold", "Print the exact-recovery margin and pairwise divergences");
  thr->add_option("--spec", spec_path, "Model spec JSON")->required();

  std::string plan_path;
  std::string summary_path;
  int workers = 0;
  bool timings = false;
  std::uint64_t sweep_seed = 0;
  auto* swp = app.add_subcommand("sweep", "Run a seeded Monte Carlo sweep and write CSV");
  swp->add_option("--plan", plan_path, "Sweep plan JSON")->required();
  swp->add_option("--out", out_path, "CSV output path")->required();
  auto* sweep_seed_opt = swp->add_option("--seed", sweep_seed, "Override the plan's master_seed");
  swp->add_option("--workers", workers, "Worker threads (default GHCM_WORKERS or all cores)");
  swp->add_option("--summary", summary_path, "Also write per-row failure reasons as JSON");
  swp->add_flag("--timings", timings, "Write measured mean_runtime_ms instead of 0");

  std::string policy_text;
  std::uint64_t adv_seed = 0;
  auto* adv = app.add_subcommand("adversary", "Apply a monotone corruption policy");
  adv->add_option("--in", in_path, "Instance path")->required();
  adv->add_option("--policy", policy_text, "Policy JSON, or @file")->required();
  adv->add_option("--out", out_path, "Output instance path")->required();
  auto* adv_seed_opt = adv->add_option("--seed", adv_seed, "Override the policy seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ghcm: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen) {
      const auto spec = read_json_file(spec_path).get<ModelSpec>();
      save_instance(sample_instance(spec, seed), out_path);
    } else if (*rec) {
      const Instance instance = load_instance(in_path);
      RecoveryOptions options;
      if (*chi_opt) options.chi = chi;
      if (*delta_opt) options.delta = delta;
      if (*eps_opt) options.epsilon0 = epsilon0;
      options.refine_rounds = refine_rounds;
      options.gauss_seidel = gauss_seidel;
      options.refine_1d = refine_1d;
      RecoveryReport report;
      if (algorithm == "robust") {
        report = recover_robust(instance, options);
      } else if (algorithm == "one_d") {
        report = recover_1d(instance, options);
      } else {
        report = recover(instance, options);
      }
      const std::string text = report_to_json(instance, report, !no_labels).dump(2) + "\n";
      if (report_path.empty()) {
        out << text;
      } else {
        write_text(report_path, text);
      }
    } else if (*thr) {
      const auto spec = read_json_file(spec_path).get<ModelSpec>();
      out << threshold_json(spec).dump(2) << "\n";
    } else if (*swp) {
      auto plan = read_json_file(plan_path).get<SweepPlan>();
      if (*sweep_seed_opt) plan.master_seed = sweep_seed;
      const auto result = run_sweep(plan, workers);
      emit_csv(result, out_path, timings);
      if (!summary_path.empty()) write_text(summary_path, sweep_to_json(result).dump(2) + "\n");
    } else if (*adv) {
      auto policy = read_json_arg(policy_text).get<AdversaryPolicy>();
      if (*adv_seed_opt) policy.seed = adv_seed;
      save_instance(corrupt(load_instance(in_path), policy), out_path);
    }
  } catch (const Error& e) {
    err << "ghcm: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const nlohmann::json::exception& e) {
    err << "ghcm: FormatError: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "ghcm: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace ghcm
