#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resilience/energetics.h"
#include "resilience/experiment_config.h"

namespace resilience {

struct RunOptions {
  AnalysisOptions analysis;
  /// Solve the full spec jointly.
  bool exact_joint = true;
  /// Also bound the spec from the [compose] components.
  bool component_bounds = false;
  /// Threads for grid points and sweep values.
  int workers = 1;
};

/// 0 ok, 2 infeasible, 4 solver limit.
int ExitCodeFor(ResilienceStatus status);

struct ExperimentResult {
  std::string spec_hash;
  std::optional<EnergyReport> exact;
  /// Conjunction: chained components. Disjunction: components share x0.
  std::optional<ChainedComponents> components;
  double wall_seconds = 0.0;

  int ExitCode() const;
};

/// Needs cfg.x0.
ExperimentResult RunExperiment(const ExperimentConfig& cfg, const RunOptions& options);

void WriteTextReport(std::ostream& out, const ExperimentConfig& cfg,
                     const RunOptions& options, const ExperimentResult& result);

/// Machine-readable report, pretty-printed JSON.
std::string ReportJson(const ExperimentConfig& cfg, const RunOptions& options,
                       const ExperimentResult& result);

/// One evaluation at a single (x0, wbar).
struct ResilienceRecord {
  Eigen::VectorXd x0;
  double wbar = 0.0;
  double e_nom = kInfinity;
  double e_mal = kInfinity;
  double resilience = std::numeric_limits<double>::quiet_NaN();
  ResilienceStatus status = ResilienceStatus::kOk;
  std::string spec_hash;
  double wall_seconds = 0.0;
};

ResilienceRecord MakeRecord(const EnergyReport& report, const std::string& spec_hash,
                            double wall_seconds);

/// Needs cfg.x0. Records follow the order of `wbar_values`.
std::vector<ResilienceRecord> SweepWbar(const ExperimentConfig& cfg,
                                        const std::vector<double>& wbar_values,
                                        const RunOptions& options);

/// Needs cfg.grid. Records are row-major over the grid.
std::vector<ResilienceRecord> Heatmap(const ExperimentConfig& cfg, const RunOptions& options);

/// %.17g, with "inf", "-inf" and "nan" for non-finite values.
std::string FormatNumber(double value);

/// Header "wbar,e_nom,e_mal,resilience,status"; LF line endings.
void WriteSweepCsv(std::ostream& out, const std::vector<ResilienceRecord>& records);

/// Header "x,y,resilience,status" with x, y the two grid coordinates.
void WriteHeatmapCsv(std::ostream& out, const ExperimentConfig& cfg,
                     const std::vector<ResilienceRecord>& records);

/// Sign-pattern worst case of one tightened constraint row.
struct RowCheck {
  std::string label;
  int time = 0;
  /// h - H x_t with zero disturbance and with the extremal disturbance.
  double nominal_margin = 0.0;
  double extremal_margin = 0.0;
  /// The extremal disturbance drives the row to its bound.
  bool active = false;
};

struct ValidationSummary {
  int samples = 0;
  std::uint64_t seed = 0;
  int satisfied = 0;
  /// Largest H x_t - h over sampled rollouts and plan rows (<= 0 when all hold).
  double max_violation = -kInfinity;
  std::vector<RowCheck> rows;
  int extremal_violations = 0;
  int active_rows = 0;

  bool passed() const { return satisfied == samples && extremal_violations == 0; }
};

/// Disturbance draws for rollout k: i.i.d. uniform on [-wbar, wbar] from
/// mt19937_64 seeded with `seed`, 53-bit mantissa per draw, consumed step by
/// step and component by component. Throws std::logic_error when `report`
/// has no worst-case solution.
ValidationSummary MonteCarloValidate(const ExperimentConfig& cfg, const EnergyReport& report,
                                     int samples, std::uint64_t seed,
                                     const SemanticsOptions& semantics = {});

std::string ValidationJson(const ExperimentConfig& cfg, const EnergyReport& report,
                           const ValidationSummary& summary);

}  // namespace resilience
