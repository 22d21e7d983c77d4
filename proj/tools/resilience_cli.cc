// Command-line front end: analyze, sweep, heatmap and validate experiments
// described by TOML configs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "resilience/experiment.h"
#include "resilience/experiment_config.h"
#include "resilience/parallel.h"

namespace fs = std::filesystem;
using namespace resilience;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailed = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;
constexpr int kExitSolverLimit = 4;

struct Flags {
  std::string config;
  bool conservative = false;
  bool strict = false;
  bool exact_joint = false;
  bool component_bounds = false;
  int workers = 0;
  std::string out;
  std::string dump_qp;
  std::string wbar_list;
  int samples = -1;
  long long seed = -1;
};

void AddCommonFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("config", f.config, "Experiment config (TOML)")->required();
  cmd->add_flag("--conservative-tightening", f.conservative,
                "Tighten by ||M||_1 * wbar per constraint group instead of per row");
  cmd->add_flag("--strict-eventually", f.strict,
                "Eventually and Until witnesses start one step after evaluation");
  cmd->add_flag("--exact-joint", f.exact_joint, "Solve the full spec jointly");
  cmd->add_flag("--component-bounds", f.component_bounds,
                "Bound the spec from the [compose] components");
  cmd->add_option("--workers", f.workers,
                  "Worker threads (default: RESILIENCE_WORKERS or core count)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory (default: output.dir of the config)");
}

RunOptions MakeOptions(const Flags& f, const ExperimentConfig& cfg) {
  RunOptions opts;
  opts.analysis.tightening =
      f.conservative ? TighteningMode::kMatrixNorm : TighteningMode::kRowWise;
  opts.analysis.strict_eventually = f.strict;
  opts.workers = f.workers > 0 ? f.workers : DefaultWorkers();
  opts.analysis.workers = opts.workers;
  if (f.exact_joint || f.component_bounds) {
    opts.exact_joint = f.exact_joint;
    opts.component_bounds = f.component_bounds;
  } else {
    opts.exact_joint = true;
    opts.component_bounds = cfg.compose.has_value();
  }
  return opts;
}

fs::path OutputDir(const Flags& f, const ExperimentConfig& cfg) {
  fs::path dir = f.out.empty() ? fs::path(cfg.output_dir) : fs::path(f.out);
  fs::create_directories(dir);
  return dir;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void DumpQps(const fs::path& dir, const EnergyReport& report) {
  fs::create_directories(dir);
  auto dump = [&](const char* name, const EnergyResult& r) {
    if (!r.feasible()) return;
    std::ostringstream text;
    WriteQpText(text, r.qp);
    WriteFile(dir / name, text.str());
  };
  dump("nominal.qp.txt", report.nominal);
  dump("malfunctioning.qp.txt", report.malfunctioning);
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) {
      throw ConfigError("--wbar", fmt::format("'{}' is not a number", item));
    }
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("--wbar", "empty list");
  return values;
}

int Analyze(const Flags& f) {
  const ExperimentConfig cfg = LoadConfig(f.config);
  const RunOptions opts = MakeOptions(f, cfg);
  const ExperimentResult result = RunExperiment(cfg, opts);
  std::ostringstream text;
  WriteTextReport(text, cfg, opts, result);
  std::cout << text.str();
  const fs::path dir = OutputDir(f, cfg);
  WriteFile(dir / "report.txt", text.str());
  WriteFile(dir / "report.json", ReportJson(cfg, opts, result));
  if (!f.dump_qp.empty() && result.exact) DumpQps(f.dump_qp, *result.exact);
  return result.ExitCode();
}

int SweepCommand(const Flags& f) {
  const ExperimentConfig cfg = LoadConfig(f.config);
  const RunOptions opts = MakeOptions(f, cfg);
  const std::vector<double> wbars = f.wbar_list.empty() ? cfg.sweep_wbar : ParseList(f.wbar_list);
  if (wbars.empty()) throw ConfigError("sweep.wbar", "no wbar values (config or --wbar)");
  const auto records = SweepWbar(cfg, wbars, opts);
  std::ostringstream csv;
  WriteSweepCsv(csv, records);
  const fs::path path = OutputDir(f, cfg) / "sweep.csv";
  WriteFile(path, csv.str());
  std::cout << csv.str();
  fmt::print("wrote {}\n", path.string());
  for (const auto& r : records) {
    if (r.status == ResilienceStatus::kSolverLimit) return kExitSolverLimit;
  }
  return kExitOk;
}

int HeatmapCommand(const Flags& f) {
  const ExperimentConfig cfg = LoadConfig(f.config);
  const RunOptions opts = MakeOptions(f, cfg);
  const auto records = Heatmap(cfg, opts);
  std::ostringstream csv;
  WriteHeatmapCsv(csv, cfg, records);
  const fs::path path = OutputDir(f, cfg) / "heatmap.csv";
  WriteFile(path, csv.str());
  int undefined = 0;
  bool limited = false;
  for (const auto& r : records) {
    undefined += r.status != ResilienceStatus::kOk;
    limited = limited || r.status == ResilienceStatus::kSolverLimit;
  }
  fmt::print("wrote {} ({} cells, {} undefined)\n", path.string(), records.size(), undefined);
  return limited ? kExitSolverLimit : kExitOk;
}

int Validate(const Flags& f) {
  const ExperimentConfig cfg = LoadConfig(f.config);
  RunOptions opts = MakeOptions(f, cfg);
  opts.exact_joint = true;
  opts.component_bounds = false;
  const int samples = f.samples >= 0 ? f.samples : cfg.samples;
  const std::uint64_t seed = f.seed >= 0 ? static_cast<std::uint64_t>(f.seed) : cfg.seed;
  const ExperimentResult result = RunExperiment(cfg, opts);
  const EnergyReport& report = *result.exact;
  if (!report.malfunctioning.feasible()) {
    fmt::print(std::cerr, "validate: no worst-case solution ({})\n", ToString(report.status));
    return ExitCodeFor(report.status) == kExitOk ? kExitInfeasible : ExitCodeFor(report.status);
  }
  const ValidationSummary summary =
      MonteCarloValidate(cfg, report, samples, seed, {opts.analysis.strict_eventually});
  WriteFile(OutputDir(f, cfg) / "validation.json", ValidationJson(cfg, report, summary));
  fmt::print("samples: {}  seed: {}\n", summary.samples, summary.seed);
  fmt::print("satisfied: {}/{}\n", summary.satisfied, summary.samples);
  if (summary.samples > 0) {
    fmt::print("max constraint value H x - h: {}\n", FormatNumber(summary.max_violation));
  }
  fmt::print("extremal rows: {} checked, {} active, {} violated\n", summary.rows.size(),
             summary.active_rows, summary.extremal_violations);
  return summary.passed() ? kExitOk : kExitValidationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energetic resilience of linear systems under temporal logic tasks"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* analyze = app.add_subcommand("analyze", "Nominal and worst-case energies at x0");
  AddCommonFlags(analyze, f);
  analyze->add_option("--dump-qp", f.dump_qp, "Write the winning QPs as text to this directory");

  CLI::App* sweep = app.add_subcommand("sweep", "Resilience over a list of disturbance bounds");
  AddCommonFlags(sweep, f);
  sweep->add_option("--wbar", f.wbar_list, "Comma-separated wbar values (default: [sweep])");

  CLI::App* heatmap = app.add_subcommand("heatmap", "Resilience over a grid of initial states");
  AddCommonFlags(heatmap, f);

  CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo check of the worst-case inputs");
  AddCommonFlags(validate, f);
  validate->add_option("--samples", f.samples, "Rollouts (default: validation.samples)")
      ->check(CLI::NonNegativeNumber);
  validate->add_option("--seed", f.seed, "RNG seed (default: validation.seed)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (analyze->parsed()) return Analyze(f);
    if (sweep->parsed()) return SweepCommand(f);
    if (heatmap->parsed()) return HeatmapCommand(f);
    if (validate->parsed()) return Validate(f);
  } catch (const ConfigError& e) {
    fmt::print(std::cerr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const SpecSyntaxError& e) {
    fmt::print(std::cerr, "spec error: {}\n", e.what());
    return kExitConfig;
  } catch (const UnsupportedSpecError& e) {
    fmt::print(std::cerr, "unsupported spec: {}\n", e.what());
    return kExitConfig;
  } catch (const PlanCapExceeded& e) {
    fmt::print(std::cerr, "plan cap: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(std::cerr, "error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
