#include "resilience/energetics.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "resilience/parallel.h"

namespace resilience {

std::string ToString(TighteningMode mode) {
  return mode == TighteningMode::kRowWise ? "row-wise" : "matrix-norm";
}

std::string ToString(EnergyStatus status) {
  switch (status) {
    case EnergyStatus::kFeasible: return "feasible";
    case EnergyStatus::kInfeasible: return "infeasible";
    case EnergyStatus::kSolverLimit: return "solver-limit";
  }
  return "?";
}

std::string ToString(ResilienceStatus status) {
  switch (status) {
    case ResilienceStatus::kOk: return "ok";
    case ResilienceStatus::kNominalInfeasible: return "nominal-infeasible";
    case ResilienceStatus::kMalInfeasible: return "mal-infeasible";
    case ResilienceStatus::kSolverLimit: return "solver-limit";
  }
  return "?";
}

namespace {

const Polytope& Lookup(const SetTable& sets, const std::string& name) {
  auto it = sets.find(name);
  if (it == sets.end()) {
    throw std::invalid_argument(fmt::format("unbound set '{}'", name));
  }
  return it->second;
}

// Rows of one membership requirement x_t in `set`, expressed in the stacked
// input (and disturbance) coordinates.
struct RequirementRows {
  Eigen::MatrixXd input;
  Eigen::MatrixXd disturbance;
  Eigen::VectorXd rhs;
};

// `dlift` covers offset + horizon steps of disturbance, where the first
// `offset` steps acted before x0.
RequirementRows Requirement(const LtiSystem& sys, const HorizonLift* lift,
                            const HorizonLift* dlift, int horizon, int offset,
                            const Eigen::VectorXd& x0, int t,
                            const Polytope& set) {
  const int q = set.num_rows();
  RequirementRows rows;
  if (set.dim() != sys.state_dim()) {
    throw std::invalid_argument(
        fmt::format("set '{}' has dimension {}, state dimension is {}",
                    set.name(), set.dim(), sys.state_dim()));
  }
  const int dcols = (offset + horizon) * sys.disturbance_dim();
  if (t == 0) {
    rows.input = Eigen::MatrixXd::Zero(q, horizon * sys.input_dim());
    rows.disturbance = offset > 0 ? Eigen::MatrixXd(set.H() * dlift->DisturbanceRows(offset))
                                  : Eigen::MatrixXd::Zero(q, dcols);
    rows.rhs = set.h() - set.H() * x0;
    return rows;
  }
  rows.input = set.H() * lift->InputRows(t);
  rows.disturbance = offset > 0 ? set.H() * dlift->DisturbanceRows(offset + t)
                                : set.H() * lift->DisturbanceRows(t);
  rows.rhs = set.h() - set.H() * (lift->FreeRows(t) * x0);
  return rows;
}

Eigen::VectorXd Tightening(const Eigen::MatrixXd& disturbance, double wbar,
                           TighteningMode mode) {
  return mode == TighteningMode::kRowWise
             ? RowSupport(disturbance, wbar)
             : MatrixNormSupport(disturbance, wbar);
}

}  // namespace

Qp BuildPlanQp(const LtiSystem& sys, const SetTable& sets,
               const Eigen::VectorXd& x0, const ConstraintPlan& plan,
               int horizon, bool worst_case, TighteningMode mode,
               int disturbance_offset) {
  if (disturbance_offset < 0) {
    throw std::invalid_argument("negative disturbance offset");
  }
  if (x0.size() != sys.state_dim()) {
    throw std::invalid_argument(fmt::format(
        "x0 has dimension {}, expected {}", x0.size(), sys.state_dim()));
  }
  if (horizon < 0 || plan.horizon() > horizon) {
    throw std::invalid_argument(
        fmt::format("plan '{}' references step {} beyond horizon {}",
                    plan.Describe(), plan.horizon(), horizon));
  }
  const int m = sys.input_dim();
  std::shared_ptr<const HorizonLift> lift;
  if (horizon >= 1) lift = sys.Lift(horizon);
  std::shared_ptr<const HorizonLift> dlift;
  if (disturbance_offset > 0) dlift = sys.Lift(disturbance_offset + horizon);
  auto requirement = [&](int t, const Polytope& set) {
    return Requirement(sys, lift.get(), dlift.get(), horizon,
                       disturbance_offset, x0, t, set);
  };

  Qp qp(horizon * m);
  std::set<ReachRow> emitted;

  // Safety windows first so that a window's rows form one tightening group.
  for (const auto& window : plan.safety_rows) {
    const Polytope& set = Lookup(sets, window.set);
    std::vector<RequirementRows> group;
    std::vector<int> times;
    for (int t = window.first; t <= window.last; ++t) {
      if (!emitted.insert({t, window.set}).second) continue;
      group.push_back(requirement(t, set));
      times.push_back(t);
    }
    if (group.empty()) continue;
    const int q = set.num_rows();
    const Eigen::Index count = static_cast<Eigen::Index>(group.size());
    Eigen::MatrixXd input(count * q, qp.dim);
    Eigen::MatrixXd dist(count * q, group.front().disturbance.cols());
    Eigen::VectorXd rhs(count * q);
    for (Eigen::Index g = 0; g < count; ++g) {
      input.middleRows(g * q, q) = group[g].input;
      dist.middleRows(g * q, q) = group[g].disturbance;
      rhs.segment(g * q, q) = group[g].rhs;
    }
    if (worst_case) rhs -= Tightening(dist, sys.wbar(), mode);
    for (Eigen::Index g = 0; g < count; ++g) {
      qp.AddRows(input.middleRows(g * q, q), rhs.segment(g * q, q),
                 fmt::format("safety:{}@{}", window.set, times[g]));
    }
  }
  for (const auto& reach : plan.reach_rows) {
    if (!emitted.insert(reach).second) continue;
    const Polytope& set = Lookup(sets, reach.set);
    RequirementRows rows = requirement(reach.time, set);
    if (worst_case) rows.rhs -= Tightening(rows.disturbance, sys.wbar(), mode);
    qp.AddRows(rows.input, rows.rhs,
               fmt::format("reach:{}@{}", reach.set, reach.time));
  }

  const Polytope& input_set = sys.input_set();
  for (int t = 0; t < horizon; ++t) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(input_set.num_rows(), qp.dim);
    rows.middleCols(t * m, m) = input_set.H();
    qp.AddRows(rows, input_set.h(), fmt::format("input@{}", t));
  }
  return qp;
}

EnergyResult MinimumEnergy(const LtiSystem& sys, const SetTable& sets,
                           const Eigen::VectorXd& x0,
                           std::span<const ConstraintPlan> plans, int horizon,
                           bool worst_case, const AnalysisOptions& options,
                           int disturbance_offset) {
  const std::size_t count = plans.size();
  std::vector<Qp> qps(count);
  std::vector<QpSolution> solutions(count);
  ParallelFor(count, options.workers, [&](std::size_t i) {
    qps[i] = BuildPlanQp(sys, sets, x0, plans[i], horizon, worst_case,
                         options.tightening, disturbance_offset);
    solutions[i] = SolveQp(qps[i], options.qp);
  });

  EnergyResult result;
  result.plan_energies.resize(count);
  int limited = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const QpSolution& sol = solutions[i];
    switch (sol.status) {
      case QpStatus::kOptimal:
        result.plan_energies[i] = sol.objective;
        break;
      case QpStatus::kInfeasible:
        result.plan_energies[i] = kInfinity;
        break;
      case QpStatus::kMaxIters:
        result.plan_energies[i] = std::numeric_limits<double>::quiet_NaN();
        ++limited;
        result.warnings.push_back(
            fmt::format("plan {} ({}) hit the iteration limit; treated as "
                        "infeasible",
                        i, plans[i].Describe()));
        break;
    }
    if (sol.status != QpStatus::kOptimal) continue;
    const double best = result.energy;
    const double tie = 1e-9 * std::max(1.0, std::abs(sol.objective));
    if (result.plan_index < 0 || sol.objective < best - tie) {
      result.energy = sol.objective;
      result.plan_index = static_cast<int>(i);
    }
  }
  if (result.plan_index >= 0) {
    const auto idx = static_cast<std::size_t>(result.plan_index);
    result.status = EnergyStatus::kFeasible;
    result.plan = plans[idx];
    result.inputs = solutions[idx].primal;
    result.qp = std::move(qps[idx]);
    result.solution = std::move(solutions[idx]);
  } else {
    result.status =
        limited > 0 ? EnergyStatus::kSolverLimit : EnergyStatus::kInfeasible;
    result.inputs = Eigen::VectorXd::Zero(horizon * sys.input_dim());
  }
  return result;
}

EnergyResult NominalEnergy(const LtiSystem& sys, const SetTable& sets,
                           const Eigen::VectorXd& x0, const SpecNode& spec,
                           int horizon, const AnalysisOptions& options) {
  const auto plans = EnumeratePlans(
      spec, horizon, {options.strict_eventually, options.plan_cap});
  return MinimumEnergy(sys, sets, x0, plans, horizon, false, options);
}

EnergyResult MalfunctioningEnergy(const LtiSystem& sys, const SetTable& sets,
                                  const Eigen::VectorXd& x0,
                                  const SpecNode& spec, int horizon,
                                  const AnalysisOptions& options) {
  const auto plans = EnumeratePlans(
      spec, horizon, {options.strict_eventually, options.plan_cap});
  return MinimumEnergy(sys, sets, x0, plans, horizon, true, options);
}

EnergyReport EnergeticResilience(const LtiSystem& sys, const SetTable& sets,
                                 const Eigen::VectorXd& x0,
                                 std::span<const ConstraintPlan> plans,
                                 int horizon, const AnalysisOptions& options) {
  EnergyReport report;
  report.x0 = x0;
  report.wbar = sys.wbar();
  report.horizon = horizon;
  report.tightening = options.tightening;
  report.controllable = CheckControllable(sys);
  if (!report.controllable) {
    report.warnings.push_back("(A, Bu) fails the controllability rank test");
  }
  report.nominal = MinimumEnergy(sys, sets, x0, plans, horizon, false, options);
  for (const auto& w : report.nominal.warnings) report.warnings.push_back(w);

  if (report.nominal.status == EnergyStatus::kInfeasible) {
    report.status = ResilienceStatus::kNominalInfeasible;
    report.reason = "specification is unsatisfiable without disturbance";
    report.malfunctioning.status = EnergyStatus::kInfeasible;
    return report;
  }
  if (report.nominal.status == EnergyStatus::kSolverLimit) {
    report.status = ResilienceStatus::kSolverLimit;
    report.reason = "nominal QPs hit the iteration limit";
    return report;
  }
  report.malfunctioning =
      MinimumEnergy(sys, sets, x0, plans, horizon, true, options);
  for (const auto& w : report.malfunctioning.warnings) {
    report.warnings.push_back(w);
  }
  switch (report.malfunctioning.status) {
    case EnergyStatus::kInfeasible:
      report.status = ResilienceStatus::kMalInfeasible;
      report.reason = fmt::format(
          "not resiliently satisfiable at wbar = {:g}", sys.wbar());
      return report;
    case EnergyStatus::kSolverLimit:
      report.status = ResilienceStatus::kSolverLimit;
      report.reason = "worst-case QPs hit the iteration limit";
      return report;
    case EnergyStatus::kFeasible:
      break;
  }
  report.status = ResilienceStatus::kOk;
  report.resilience = report.e_mal() - report.e_nom();
  if (report.resilience < -kResilienceSlack) {
    report.warnings.push_back(fmt::format(
        "negative resilience {:.3e} exceeds numerical slack",
        report.resilience));
  }
  return report;
}

EnergyReport EnergeticResilience(const LtiSystem& sys, const SetTable& sets,
                                 const Eigen::VectorXd& x0,
                                 const SpecNode& spec, int horizon,
                                 const AnalysisOptions& options) {
  const auto plans = EnumeratePlans(
      spec, horizon, {options.strict_eventually, options.plan_cap});
  return EnergeticResilience(sys, sets, x0, plans, horizon, options);
}

Eigen::MatrixXd PredictTrajectory(const LtiSystem& sys,
                                  const Eigen::VectorXd& x0,
                                  const Eigen::VectorXd& stacked_inputs) {
  const Eigen::MatrixXd inputs = Unstack(stacked_inputs, sys.input_dim());
  return Simulate(sys, x0, inputs,
                  Eigen::MatrixXd::Zero(sys.disturbance_dim(), inputs.cols()));
}

CompositionBound ComposeBounds(std::span<const EnergyReport> reports,
                               CompositionMode mode, bool horizons_disjoint) {
  if (reports.empty()) {
    throw std::invalid_argument("ComposeBounds: no component reports");
  }
  CompositionBound bound;
  bound.mode = mode;
  auto r_of = [](const EnergyReport& r) {
    return r.defined() ? r.resilience : kInfinity;
  };
  if (mode == CompositionMode::kConjunction) {
    bound.horizons_disjoint = horizons_disjoint;
    for (const auto& r : reports) {
      bound.e_nom += r.nominal.feasible() ? r.e_nom() : kInfinity;
      bound.e_mal += r.malfunctioning.feasible() ? r.e_mal() : kInfinity;
      bound.resilience += r_of(r);
    }
    bound.stated_bound = bound.resilience;
    return bound;
  }
  bound.e_nom = kInfinity;
  bound.e_mal = kInfinity;
  bound.stated_bound = kInfinity;
  for (const auto& r : reports) {
    if (r.nominal.feasible()) bound.e_nom = std::min(bound.e_nom, r.e_nom());
    if (r.malfunctioning.feasible()) {
      bound.e_mal = std::min(bound.e_mal, r.e_mal());
    }
    bound.stated_bound = std::min(bound.stated_bound, r_of(r));
  }
  if (std::isfinite(bound.e_nom) && std::isfinite(bound.e_mal)) {
    bound.resilience = bound.e_mal - bound.e_nom;
    bound.stated_bound_violated =
        bound.resilience > bound.stated_bound + kResilienceSlack;
  } else {
    bound.resilience = std::isfinite(bound.e_nom)
                           ? kInfinity
                           : std::numeric_limits<double>::quiet_NaN();
  }
  return bound;
}

SetExtensionResult SetExtension(const LtiSystem& sys, const SetTable& sets,
                                std::span<const Eigen::VectorXd> grid,
                                const SpecNode& spec, int horizon,
                                const AnalysisOptions& options, int workers) {
  if (grid.empty()) throw std::invalid_argument("SetExtension: empty grid");
  const auto plans = EnumeratePlans(
      spec, horizon, {options.strict_eventually, options.plan_cap});
  SetExtensionResult result;
  result.points.resize(grid.size());
  AnalysisOptions inner = options;
  if (workers > 1) inner.workers = 1;
  ParallelFor(grid.size(), workers, [&](std::size_t i) {
    result.points[i] =
        EnergeticResilience(sys, sets, grid[i], plans, horizon, inner);
  });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const EnergyReport& r = result.points[i];
    if (!r.defined()) {
      ++result.undefined_count;
    } else if (r.resilience > result.sup_resilience) {
      result.sup_resilience = r.resilience;
      result.argmax = static_cast<int>(i);
    }
  }
  return result;
}

ChainedComponents ChainedComponentBounds(const LtiSystem& sys,
                                         const SetTable& sets,
                                         const Eigen::VectorXd& x0,
                                         std::span<const SpecPtr> components,
                                         const AnalysisOptions& options) {
  if (components.empty()) {
    throw std::invalid_argument("ChainedComponentBounds: no components");
  }
  ChainedComponents out;
  Eigen::VectorXd nominal_anchor = x0;
  Eigen::VectorXd mal_anchor = x0;
  int mal_elapsed = 0;
  bool nominal_alive = true;
  bool mal_alive = true;
  const PlanOptions plan_options{options.strict_eventually, options.plan_cap};

  auto terminal = [&](const EnergyResult& r, const Eigen::VectorXd& start) {
    const int t = r.plan.horizon();
    if (t == 0) return start;
    const Eigen::MatrixXd traj = PredictTrajectory(sys, start, r.inputs);
    return Eigen::VectorXd(traj.col(t));
  };

  for (const SpecPtr& spec : components) {
    const int horizon = std::max(1, RequiredHorizon(*spec));
    const auto plans = EnumeratePlans(*spec, horizon, plan_options);
    EnergyReport report;
    report.x0 = nominal_anchor;
    report.wbar = sys.wbar();
    report.horizon = horizon;
    report.tightening = options.tightening;
    out.specs.push_back(spec);
    out.nominal_anchors.push_back(nominal_anchor);
    out.mal_anchors.push_back(mal_anchor);
    out.mal_offsets.push_back(mal_elapsed);

    if (nominal_alive) {
      report.nominal = MinimumEnergy(sys, sets, nominal_anchor, plans, horizon,
                                     false, options);
    }
    if (mal_alive) {
      report.malfunctioning =
          MinimumEnergy(sys, sets, mal_anchor, plans, horizon, true, options,
                        mal_elapsed);
    }
    nominal_alive = nominal_alive && report.nominal.feasible();
    mal_alive = mal_alive && report.malfunctioning.feasible();

    if (report.nominal.status == EnergyStatus::kSolverLimit ||
        report.malfunctioning.status == EnergyStatus::kSolverLimit) {
      report.status = ResilienceStatus::kSolverLimit;
      report.reason = "iteration limit";
    } else if (!report.nominal.feasible()) {
      report.status = ResilienceStatus::kNominalInfeasible;
      report.reason = "component unsatisfiable from the nominal chain";
    } else if (!report.malfunctioning.feasible()) {
      report.status = ResilienceStatus::kMalInfeasible;
      report.reason = "component not resiliently satisfiable from the "
                      "worst-case chain";
    } else {
      report.status = ResilienceStatus::kOk;
      report.resilience = report.e_mal() - report.e_nom();
    }
    if (nominal_alive) nominal_anchor = terminal(report.nominal, nominal_anchor);
    if (mal_alive) {
      mal_anchor = terminal(report.malfunctioning, mal_anchor);
      mal_elapsed += report.malfunctioning.plan.horizon();
    }
    out.components.push_back(std::move(report));
  }
  out.bound = ComposeBounds(out.components, CompositionMode::kConjunction,
                            /*horizons_disjoint=*/true);
  return out;
}

}  // namespace resilience
