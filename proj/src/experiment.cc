#include "resilience/experiment.h"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "resilience/parallel.h"

namespace resilience {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool HasUntil(const SpecNode& node) {
  if (node.kind == SpecKind::kUntil) return true;
  for (const auto& c : node.children) {
    if (HasUntil(*c)) return true;
  }
  return false;
}

std::string Short(double v) {
  if (!std::isfinite(v)) return FormatNumber(v);
  return fmt::format("{:.10g}", v);
}

std::string VectorText(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt::format("{:.6g}", v(i));
  }
  return out + "]";
}

Json NumberJson(double v) {
  if (std::isfinite(v)) return v;
  return FormatNumber(v);
}

Json VectorJson(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(NumberJson(v(i)));
  return arr;
}

Json EnergyJson(const EnergyResult& r, int input_dim) {
  Json j;
  j["status"] = ToString(r.status);
  j["energy"] = NumberJson(r.energy);
  if (!r.feasible()) return j;
  j["plan_index"] = r.plan_index;
  j["plan"] = r.plan.Describe();
  j["reach_times"] = r.plan.ReachTimes();
  Json steps = Json::array();
  for (int t = 0; t * input_dim < r.inputs.size(); ++t) {
    steps.push_back(VectorJson(r.inputs.segment(t * input_dim, input_dim)));
  }
  j["inputs"] = steps;
  const KktResiduals kkt = ComputeKktResiduals(r.qp, r.solution.primal, r.solution.dual);
  j["solver"] = {{"status", ToString(r.solution.status)},
                 {"iterations", r.solution.iterations},
                 {"polished", r.solution.polished},
                 {"kkt_stationarity", kkt.stationarity},
                 {"kkt_feasibility", kkt.feasibility},
                 {"kkt_complementarity", kkt.complementarity}};
  j["plans"] = r.plan_energies.size();
  return j;
}

Json ReportToJson(const EnergyReport& r, int input_dim) {
  Json j;
  j["x0"] = VectorJson(r.x0);
  j["wbar"] = r.wbar;
  j["horizon"] = r.horizon;
  j["tightening"] = ToString(r.tightening);
  j["status"] = ToString(r.status);
  j["e_nom"] = NumberJson(r.e_nom());
  j["e_mal"] = NumberJson(r.e_mal());
  j["resilience"] = NumberJson(r.resilience);
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["controllable"] = r.controllable;
  j["nominal"] = EnergyJson(r.nominal, input_dim);
  j["malfunctioning"] = EnergyJson(r.malfunctioning, input_dim);
  j["warnings"] = r.warnings;
  return j;
}

void WriteEnergy(std::ostream& out, const char* label, const EnergyResult& r,
                 int input_dim) {
  fmt::print(out, "  {}: {} ({})\n", label, Short(r.energy), ToString(r.status));
  if (!r.feasible()) return;
  fmt::print(out, "    plan #{} of {}: {}\n", r.plan_index, r.plan_energies.size(),
             r.plan.Describe());
  const KktResiduals kkt = ComputeKktResiduals(r.qp, r.solution.primal, r.solution.dual);
  fmt::print(out, "    solver: {} iterations, polished {}, KKT max {:.2e}\n",
             r.solution.iterations, r.solution.polished ? "yes" : "no", kkt.max());
  for (int t = 0; t * input_dim < r.inputs.size(); ++t) {
    fmt::print(out, "    u_{} = {}\n", t, VectorText(r.inputs.segment(t * input_dim, input_dim)));
  }
}

void WriteReportBody(std::ostream& out, const EnergyReport& r, int input_dim) {
  fmt::print(out, "  status: {}\n", ToString(r.status));
  if (!r.reason.empty()) fmt::print(out, "  reason: {}\n", r.reason);
  WriteEnergy(out, "e_nom", r.nominal, input_dim);
  WriteEnergy(out, "e_mal", r.malfunctioning, input_dim);
  fmt::print(out, "  resilience: {}\n", Short(r.resilience));
  for (const auto& w : r.warnings) fmt::print(out, "  warning: {}\n", w);
}

int Combine(int a, int b) {
  if (a == 4 || b == 4) return 4;
  if (a == 2 || b == 2) return 2;
  return std::max(a, b);
}

}  // namespace

int ExitCodeFor(ResilienceStatus status) {
  switch (status) {
    case ResilienceStatus::kOk:
      return 0;
    case ResilienceStatus::kNominalInfeasible:
    case ResilienceStatus::kMalInfeasible:
      return 2;
    case ResilienceStatus::kSolverLimit:
      return 4;
  }
  return 4;
}

int ExperimentResult::ExitCode() const {
  int code = 0;
  if (exact) code = Combine(code, ExitCodeFor(exact->status));
  if (components) {
    for (const auto& c : components->components) code = Combine(code, ExitCodeFor(c.status));
  }
  return code;
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, const RunOptions& options) {
  if (!cfg.x0) throw ConfigError("x0", "this command needs a single initial state");
  const auto start = Clock::now();
  ExperimentResult result;
  result.spec_hash = SpecHash(*cfg.spec);
  if (options.exact_joint) {
    result.exact = EnergeticResilience(cfg.system, cfg.sets, *cfg.x0, *cfg.spec,
                                       cfg.horizon, options.analysis);
  }
  if (options.component_bounds) {
    if (!cfg.compose) throw ConfigError("compose", "component bounds need a [compose] table");
    const std::vector<SpecPtr> specs = cfg.ComponentSpecs();
    if (cfg.compose->mode == CompositionMode::kConjunction) {
      result.components =
          ChainedComponentBounds(cfg.system, cfg.sets, *cfg.x0, specs, options.analysis);
    } else {
      ChainedComponents c;
      for (const auto& s : specs) {
        c.specs.push_back(s);
        c.nominal_anchors.push_back(*cfg.x0);
        c.mal_anchors.push_back(*cfg.x0);
        c.components.push_back(EnergeticResilience(cfg.system, cfg.sets, *cfg.x0, *s,
                                                   std::max(1, RequiredHorizon(*s)),
                                                   options.analysis));
      }
      c.bound = ComposeBounds(c.components, CompositionMode::kDisjunction);
      result.components = std::move(c);
    }
  }
  result.wall_seconds = Seconds(start);
  return result;
}

void WriteTextReport(std::ostream& out, const ExperimentConfig& cfg,
                     const RunOptions& options, const ExperimentResult& result) {
  const int m = cfg.system.input_dim();
  fmt::print(out, "experiment: {}\n", cfg.name);
  if (!cfg.description.empty()) fmt::print(out, "description: {}\n", cfg.description);
  fmt::print(out, "spec: {}  (hash {})\n", PrintSpec(*cfg.spec), result.spec_hash);
  fmt::print(out, "initial state x0: {}\n", VectorText(*cfg.x0));
  fmt::print(out, "horizon: {}   wbar: {}   tightening: {}   eventually: {}\n", cfg.horizon,
             Short(cfg.system.wbar()), ToString(options.analysis.tightening),
             options.analysis.strict_eventually ? "strict (t >= i+1)" : "inclusive (t >= i)");
  if (cfg.reference_resilience) {
    fmt::print(out,
               "reference resilience: {} (published figure; its initial state is "
               "not stated, so this is a target, not a reproduction)\n",
               Short(*cfg.reference_resilience));
  }
  if (HasUntil(*cfg.spec)) {
    fmt::print(out, "note: Until is synthesized by witness-time enumeration (extension)\n");
  }
  if (result.exact) {
    fmt::print(out, "\nexact joint analysis\n");
    WriteReportBody(out, *result.exact, m);
  }
  if (result.components) {
    const auto& c = *result.components;
    const bool conj = c.bound.mode == CompositionMode::kConjunction;
    fmt::print(out, "\ncomponent bounds ({})\n",
               conj ? "conjunction, chained anchors" : "disjunction, shared x0");
    for (std::size_t k = 0; k < c.components.size(); ++k) {
      const EnergyReport& r = c.components[k];
      fmt::print(out, "  [{}] {}  start nominal {}  worst-case {}", k + 1,
                 PrintSpec(*c.specs[k]), VectorText(c.nominal_anchors[k]),
                 VectorText(c.mal_anchors[k]));
      if (k < c.mal_offsets.size() && c.mal_offsets[k] > 0) {
        fmt::print(out, " after {} disturbed steps", c.mal_offsets[k]);
      }
      fmt::print(out, "\n");
      fmt::print(out, "      e_nom {}  e_mal {}  resilience {}  ({})\n",
                 Short(r.e_nom()), Short(r.e_mal()),
                 Short(r.resilience), ToString(r.status));
    }
    fmt::print(out, "  sum e_nom: {}\n  sum e_mal: {}\n", Short(c.bound.e_nom),
               Short(c.bound.e_mal));
    if (conj) {
      fmt::print(out, "  resilience bound (sum of component resiliences): {}\n",
                 Short(c.bound.stated_bound));
      if (result.exact && result.exact->malfunctioning.feasible()) {
        fmt::print(out, "  exact e_mal {} <= sum e_mal: {}\n",
                   Short(result.exact->e_mal()),
                   result.exact->e_mal() <= c.bound.e_mal + kResilienceSlack ? "yes" : "no");
      }
    } else {
      fmt::print(out, "  resilience from energy minima: {}\n", Short(c.bound.resilience));
      fmt::print(out, "  min of component resiliences: {}{}\n",
                 Short(c.bound.stated_bound),
                 c.bound.stated_bound_violated ? "  (exceeded)" : "");
    }
  }
  fmt::print(out, "\nwall time: {:.3f} s\n", result.wall_seconds);
}

std::string ReportJson(const ExperimentConfig& cfg, const RunOptions& options,
                       const ExperimentResult& result) {
  const int m = cfg.system.input_dim();
  Json j;
  j["name"] = cfg.name;
  j["spec"] = PrintSpec(*cfg.spec);
  j["spec_hash"] = result.spec_hash;
  j["horizon"] = cfg.horizon;
  j["x0"] = VectorJson(*cfg.x0);
  j["wbar"] = cfg.system.wbar();
  j["tightening"] = ToString(options.analysis.tightening);
  j["strict_eventually"] = options.analysis.strict_eventually;
  if (cfg.reference_resilience) j["reference_resilience"] = *cfg.reference_resilience;
  if (HasUntil(*cfg.spec)) j["until_extension"] = true;
  if (result.exact) j["exact"] = ReportToJson(*result.exact, m);
  if (result.components) {
    const auto& c = *result.components;
    Json comp;
    comp["mode"] = c.bound.mode == CompositionMode::kConjunction ? "conjunction" : "disjunction";
    Json parts = Json::array();
    for (std::size_t k = 0; k < c.components.size(); ++k) {
      Json part = ReportToJson(c.components[k], m);
      part["spec"] = PrintSpec(*c.specs[k]);
      part["nominal_anchor"] = VectorJson(c.nominal_anchors[k]);
      part["mal_anchor"] = VectorJson(c.mal_anchors[k]);
      if (k < c.mal_offsets.size()) part["mal_offset"] = c.mal_offsets[k];
      parts.push_back(std::move(part));
    }
    comp["components"] = std::move(parts);
    comp["e_nom"] = NumberJson(c.bound.e_nom);
    comp["e_mal"] = NumberJson(c.bound.e_mal);
    comp["resilience"] = NumberJson(c.bound.resilience);
    comp["stated_bound"] = NumberJson(c.bound.stated_bound);
    comp["stated_bound_violated"] = c.bound.stated_bound_violated;
    comp["horizons_disjoint"] = c.bound.horizons_disjoint;
    j["components"] = std::move(comp);
  }
  j["exit_code"] = result.ExitCode();
  j["wall_seconds"] = result.wall_seconds;
  return j.dump(2) + "\n";
}

ResilienceRecord MakeRecord(const EnergyReport& report, const std::string& spec_hash,
                            double wall_seconds) {
  ResilienceRecord rec;
  rec.x0 = report.x0;
  rec.wbar = report.wbar;
  rec.e_nom = report.e_nom();
  rec.e_mal = report.e_mal();
  rec.resilience = report.resilience;
  rec.status = report.status;
  rec.spec_hash = spec_hash;
  rec.wall_seconds = wall_seconds;
  return rec;
}

std::vector<ResilienceRecord> SweepWbar(const ExperimentConfig& cfg,
                                        const std::vector<double>& wbar_values,
                                        const RunOptions& options) {
  if (!cfg.x0) throw ConfigError("x0", "a sweep needs a single initial state");
  for (std::size_t i = 0; i < wbar_values.size(); ++i) {
    if (!(wbar_values[i] >= 0.0) || (i > 0 && wbar_values[i] < wbar_values[i - 1])) {
      throw ConfigError("sweep.wbar", "values must be nonnegative and sorted");
    }
  }
  const auto plans = EnumeratePlans(
      *cfg.spec, cfg.horizon,
      {options.analysis.strict_eventually, options.analysis.plan_cap});
  const std::string hash = SpecHash(*cfg.spec);
  std::vector<ResilienceRecord> records(wbar_values.size());
  AnalysisOptions inner = options.analysis;
  if (options.workers > 1) inner.workers = 1;
  ParallelFor(wbar_values.size(), options.workers, [&](std::size_t i) {
    const auto start = Clock::now();
    const EnergyReport r = EnergeticResilience(cfg.system.WithWbar(wbar_values[i]), cfg.sets,
                                               *cfg.x0, plans, cfg.horizon, inner);
    records[i] = MakeRecord(r, hash, Seconds(start));
  });
  return records;
}

std::vector<ResilienceRecord> Heatmap(const ExperimentConfig& cfg, const RunOptions& options) {
  if (!cfg.grid) throw ConfigError("grid", "a heatmap needs a [grid] table");
  const std::vector<Eigen::VectorXd> points = cfg.grid->Points();
  const auto start = Clock::now();
  const SetExtensionResult ext = SetExtension(cfg.system, cfg.sets, points, *cfg.spec,
                                              cfg.horizon, options.analysis, options.workers);
  const double per_point = Seconds(start) / static_cast<double>(points.size());
  const std::string hash = SpecHash(*cfg.spec);
  std::vector<ResilienceRecord> records;
  records.reserve(points.size());
  for (const auto& r : ext.points) records.push_back(MakeRecord(r, hash, per_point));
  return records;
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

void WriteSweepCsv(std::ostream& out, const std::vector<ResilienceRecord>& records) {
  out << "wbar,e_nom,e_mal,resilience,status\n";
  for (const auto& r : records) {
    out << FormatNumber(r.wbar) << ',' << FormatNumber(r.e_nom) << ','
        << FormatNumber(r.e_mal) << ',' << FormatNumber(r.resilience) << ','
        << ToString(r.status) << '\n';
  }
}

void WriteHeatmapCsv(std::ostream& out, const ExperimentConfig& cfg,
                     const std::vector<ResilienceRecord>& records) {
  if (!cfg.grid) throw ConfigError("grid", "a heatmap needs a [grid] table");
  out << "x,y,resilience,status\n";
  for (const auto& r : records) {
    out << FormatNumber(r.x0(cfg.grid->dims[0])) << ','
        << FormatNumber(r.x0(cfg.grid->dims[1])) << ',' << FormatNumber(r.resilience)
        << ',' << ToString(r.status) << '\n';
  }
}

ValidationSummary MonteCarloValidate(const ExperimentConfig& cfg, const EnergyReport& report,
                                     int samples, std::uint64_t seed,
                                     const SemanticsOptions& semantics) {
  if (!report.malfunctioning.feasible()) {
    throw std::logic_error("no worst-case solution to validate (" +
                           ToString(report.status) + ")");
  }
  const LtiSystem sys = cfg.system.WithWbar(report.wbar);
  const int N = report.horizon;
  const int p = sys.disturbance_dim();
  const Eigen::MatrixXd u = Unstack(report.malfunctioning.inputs, sys.input_dim());
  const ConstraintPlan& plan = report.malfunctioning.plan;
  const std::vector<ReachRow> requirements = plan.Requirements();

  ValidationSummary summary;
  summary.samples = samples;
  summary.seed = seed;

  // Extremal disturbance per constraint row: w = wbar * sign(H_j Gw_t).
  const auto lift = sys.Lift(N);
  for (const auto& req : requirements) {
    if (req.time == 0) continue;
    const Polytope& set = cfg.sets.at(req.set);
    const Eigen::MatrixXd rows = set.H() * lift->DisturbanceRows(req.time);
    for (int j = 0; j < set.num_rows(); ++j) {
      const Eigen::VectorXd w_stacked = sys.wbar() * rows.row(j).transpose().cwiseSign();
      const Eigen::MatrixXd w = Unstack(w_stacked, p);
      const Eigen::MatrixXd nominal = Simulate(sys, report.x0, u, Eigen::MatrixXd::Zero(p, N));
      const Eigen::MatrixXd extremal = Simulate(sys, report.x0, u, w);
      RowCheck check;
      check.label = fmt::format("{}@{}[{}]", req.set, req.time, j);
      check.time = req.time;
      check.nominal_margin = set.h()(j) - set.H().row(j).dot(nominal.col(req.time));
      check.extremal_margin = set.h()(j) - set.H().row(j).dot(extremal.col(req.time));
      const double scale = std::max(1.0, std::abs(set.h()(j)));
      check.active = check.extremal_margin <= 1e-6 * scale;
      if (check.extremal_margin < -kMembershipTolerance * scale) ++summary.extremal_violations;
      if (check.active) ++summary.active_rows;
      summary.rows.push_back(std::move(check));
    }
  }

  std::mt19937_64 rng(seed);
  Eigen::MatrixXd w(p, N);
  for (int s = 0; s < samples; ++s) {
    for (int t = 0; t < N; ++t) {
      for (int i = 0; i < p; ++i) {
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        w(i, t) = sys.wbar() * (2.0 * unit - 1.0);
      }
    }
    const Eigen::MatrixXd traj = Simulate(sys, report.x0, u, w);
    if (Evaluate(*cfg.spec, traj, cfg.sets, semantics)) ++summary.satisfied;
    for (const auto& req : requirements) {
      summary.max_violation = std::max(
          summary.max_violation, cfg.sets.at(req.set).MaxViolation(traj.col(req.time)));
    }
  }
  return summary;
}

std::string ValidationJson(const ExperimentConfig& cfg, const EnergyReport& report,
                           const ValidationSummary& summary) {
  Json j;
  j["name"] = cfg.name;
  j["spec"] = PrintSpec(*cfg.spec);
  j["x0"] = VectorJson(report.x0);
  j["wbar"] = report.wbar;
  j["plan"] = report.malfunctioning.plan.Describe();
  j["rng"] = "mt19937_64, 53-bit uniform";
  j["seed"] = summary.seed;
  j["samples"] = summary.samples;
  j["satisfied"] = summary.satisfied;
  j["max_violation"] = NumberJson(summary.max_violation);
  j["extremal_violations"] = summary.extremal_violations;
  j["active_rows"] = summary.active_rows;
  Json rows = Json::array();
  for (const auto& r : summary.rows) {
    rows.push_back({{"row", r.label},
                    {"nominal_margin", r.nominal_margin},
                    {"extremal_margin", r.extremal_margin},
                    {"active", r.active}});
  }
  j["rows"] = std::move(rows);
  j["passed"] = summary.passed();
  return j.dump(2) + "\n";
}

}  // namespace resilience
