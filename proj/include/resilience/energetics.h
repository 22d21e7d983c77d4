#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resilience/lti_model.h"
#include "resilience/polytope.h"
#include "resilience/qp_solver.h"
#include "resilience/spec_lang.h"

namespace resilience {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Slack allowed on resilience >= 0 before a report carries a warning.
inline constexpr double kResilienceSlack = 1e-7;

enum class TighteningMode {
  kRowWise,     // exact per-row worst case
  kMatrixNorm,  // uniform ||M||_1 * wbar per constraint group
};

std::string ToString(TighteningMode mode);

struct AnalysisOptions {
  TighteningMode tightening = TighteningMode::kRowWise;
  bool strict_eventually = false;
  std::size_t plan_cap = 100000;
  /// Threads used to solve the plan QPs of one energy computation.
  int workers = 1;
  QpSettings qp;
};

/// Quadratic program for one plan over a horizon of `horizon` inputs. Each
/// requirement (t, set) contributes H (Gu block t) u <= h - H A^t x0, less the
/// disturbance support of H (Gw block t) when `worst_case`. Input rows
/// H_U u_t <= h_U are added for every t and never tightened. Requirements at
/// t = 0 become coefficient-free rows h - H x0 >= 0. A positive
/// `disturbance_offset` says x0 is a prediction that the disturbance has
/// already acted on for that many steps; the tightening then covers those
/// steps too.
Qp BuildPlanQp(const LtiSystem& sys, const SetTable& sets,
               const Eigen::VectorXd& x0, const ConstraintPlan& plan,
               int horizon, bool worst_case,
               TighteningMode mode = TighteningMode::kRowWise,
               int disturbance_offset = 0);

enum class EnergyStatus { kFeasible, kInfeasible, kSolverLimit };

std::string ToString(EnergyStatus status);

struct EnergyResult {
  EnergyStatus status = EnergyStatus::kInfeasible;
  double energy = kInfinity;
  int plan_index = -1;
  ConstraintPlan plan;
  Eigen::VectorXd inputs;  // stacked [u_0; ...; u_{N-1}]
  Qp qp;
  QpSolution solution;
  /// Per plan: objective, +inf when infeasible, NaN when the solver gave up.
  std::vector<double> plan_energies;
  std::vector<std::string> warnings;

  bool feasible() const { return status == EnergyStatus::kFeasible; }
};

/// Minimum over plans of the plan QP optimum; ties keep the earliest plan.
EnergyResult MinimumEnergy(const LtiSystem& sys, const SetTable& sets,
                           const Eigen::VectorXd& x0,
                           std::span<const ConstraintPlan> plans, int horizon,
                           bool worst_case, const AnalysisOptions& options = {},
                           int disturbance_offset = 0);

EnergyResult NominalEnergy(const LtiSystem& sys, const SetTable& sets,
                           const Eigen::VectorXd& x0, const SpecNode& spec,
                           int horizon, const AnalysisOptions& options = {});

EnergyResult MalfunctioningEnergy(const LtiSystem& sys, const SetTable& sets,
                                  const Eigen::VectorXd& x0,
                                  const SpecNode& spec, int horizon,
                                  const AnalysisOptions& options = {});

enum class ResilienceStatus {
  kOk,
  kNominalInfeasible,
  kMalInfeasible,
  kSolverLimit,
};

/// "ok", "nominal-infeasible", "mal-infeasible", "solver-limit".
std::string ToString(ResilienceStatus status);

struct EnergyReport {
  Eigen::VectorXd x0;
  double wbar = 0.0;
  int horizon = 0;
  TighteningMode tightening = TighteningMode::kRowWise;
  EnergyResult nominal;
  EnergyResult malfunctioning;
  ResilienceStatus status = ResilienceStatus::kOk;
  /// e_mal - e_nom when both are finite, NaN otherwise.
  double resilience = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
  bool controllable = true;
  std::vector<std::string> warnings;

  double e_nom() const { return nominal.energy; }
  double e_mal() const { return malfunctioning.energy; }
  bool defined() const { return status == ResilienceStatus::kOk; }
};

EnergyReport EnergeticResilience(const LtiSystem& sys, const SetTable& sets,
                                 const Eigen::VectorXd& x0,
                                 std::span<const ConstraintPlan> plans,
                                 int horizon,
                                 const AnalysisOptions& options = {});

EnergyReport EnergeticResilience(const LtiSystem& sys, const SetTable& sets,
                                 const Eigen::VectorXd& x0,
                                 const SpecNode& spec, int horizon,
                                 const AnalysisOptions& options = {});

/// Disturbance-free trajectory x_0..x_N under stacked inputs.
Eigen::MatrixXd PredictTrajectory(const LtiSystem& sys,
                                  const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& stacked_inputs);

enum class CompositionMode { kConjunction, kDisjunction };

struct CompositionBound {
  CompositionMode mode = CompositionMode::kConjunction;
  /// Sums (conjunction) or minima (disjunction); +inf for infeasible parts.
  double e_nom = 0.0;
  double e_mal = 0.0;
  /// Conjunction: sum of component resiliences (+inf if any is undefined).
  /// Disjunction: e_mal - e_nom from the minima above.
  double resilience = 0.0;
  /// The compositional bound as stated: sum of r_i, or min of r_i.
  double stated_bound = 0.0;
  /// Disjunction only: resilience exceeded min r_i.
  bool stated_bound_violated = false;
  /// Conjunction only: caller vouched that component horizons are disjoint.
  bool horizons_disjoint = false;
};

/// Throws std::invalid_argument on an empty report list.
CompositionBound ComposeBounds(std::span<const EnergyReport> reports,
                               CompositionMode mode,
                               bool horizons_disjoint = false);

struct SetExtensionResult {
  /// Largest finite resilience over the grid (-inf if none is finite).
  double sup_resilience = -kInfinity;
  int argmax = -1;
  int undefined_count = 0;
  std::vector<EnergyReport> points;
};

/// Sample-based supremum of resilience over a finite set of initial states.
/// Points are evaluated independently on `workers` threads.
SetExtensionResult SetExtension(const LtiSystem& sys, const SetTable& sets,
                                std::span<const Eigen::VectorXd> grid,
                                const SpecNode& spec, int horizon,
                                const AnalysisOptions& options = {},
                                int workers = 1);

struct ChainedComponents {
  std::vector<SpecPtr> specs;
  std::vector<EnergyReport> components;
  /// Start states of each component in the nominal and worst-case chains.
  std::vector<Eigen::VectorXd> nominal_anchors;
  std::vector<Eigen::VectorXd> mal_anchors;
  /// Disturbance steps already elapsed when each worst-case component starts.
  std::vector<int> mal_offsets;
  CompositionBound bound;
};

/// Solves sequential sub-tasks one after another. Component k starts where
/// component k-1's winning plan ends: the nominal chain follows u_nom, the
/// worst-case chain follows the disturbance-free prediction under u_mal and
/// tightens against the disturbance accumulated since time 0, so the
/// concatenated worst-case inputs stay robust. Each component uses its own
/// required horizon.
ChainedComponents ChainedComponentBounds(const LtiSystem& sys,
                                         const SetTable& sets,
                                         const Eigen::VectorXd& x0,
                                         std::span<const SpecPtr> components,
                                         const AnalysisOptions& options = {});

}  // namespace resilience
