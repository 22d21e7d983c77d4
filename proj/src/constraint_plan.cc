#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "resilience/spec_lang.h"

namespace resilience {

int ConstraintPlan::horizon() const {
  int h = 0;
  for (const auto& r : reach_rows) h = std::max(h, r.time);
  for (const auto& s : safety_rows) h = std::max(h, s.last);
  return h;
}

std::vector<ReachRow> ConstraintPlan::Requirements() const {
  std::set<ReachRow> req(reach_rows.begin(), reach_rows.end());
  for (const auto& s : safety_rows) {
    for (int t = s.first; t <= s.last; ++t) req.insert({t, s.set});
  }
  return {req.begin(), req.end()};
}

std::vector<int> ConstraintPlan::ReachTimes() const {
  std::vector<int> times;
  times.reserve(reach_rows.size());
  for (const auto& r : reach_rows) times.push_back(r.time);
  return times;
}

std::string ConstraintPlan::Describe() const {
  std::string out;
  for (const auto& r : reach_rows) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}@{}", r.set, r.time);
  }
  for (const auto& s : safety_rows) {
    if (!out.empty()) out += ' ';
    out += fmt::format("{}@[{},{}]", s.set, s.first, s.last);
  }
  return out.empty() ? "true" : out;
}

bool ConstraintPlan::SatisfiedBy(const Eigen::MatrixXd& trajectory,
                                 const SetTable& bindings) const {
  for (const auto& r : Requirements()) {
    if (r.time >= trajectory.cols()) {
      throw std::out_of_range("trajectory shorter than plan horizon");
    }
    if (!bindings.at(r.set).Contains(trajectory.col(r.time))) return false;
  }
  return true;
}

namespace {

using PlanList = std::vector<ConstraintPlan>;

class Expander {
 public:
  explicit Expander(const PlanOptions& options) : options_(options) {}

  PlanList Expand(const SpecNode& node, int i) const {
    switch (node.kind) {
      case SpecKind::kTrue:
        return {ConstraintPlan{}};
      case SpecKind::kFalse:
        return {};
      case SpecKind::kAtom: {
        ConstraintPlan plan;
        plan.reach_rows.push_back({i, node.atom});
        return {plan};
      }
      case SpecKind::kNot:
        throw UnsupportedSpecError(fmt::format(
            "negation at {}:{} ('{}') has a non-convex feasible set and "
            "cannot be synthesized",
            node.pos.line, node.pos.column, PrintSpec(node)));
      case SpecKind::kAnd: {
        PlanList acc{ConstraintPlan{}};
        for (const auto& c : node.children) acc = Product(acc, Expand(*c, i));
        return acc;
      }
      case SpecKind::kOr: {
        PlanList acc;
        for (const auto& c : node.children) Append(acc, Expand(*c, i));
        return acc;
      }
      case SpecKind::kNext:
        return Expand(*node.children[0], i + node.horizon);
      case SpecKind::kEventually: {
        PlanList acc;
        for (int t = First(i); t <= i + node.horizon; ++t) {
          Append(acc, Expand(*node.children[0], t));
        }
        return acc;
      }
      case SpecKind::kAlways:
        return Hold(*node.children[0], i, i + node.horizon);
      case SpecKind::kUntil: {
        PlanList acc;
        const SpecNode& left = *node.children[0];
        const SpecNode& right = *node.children[1];
        for (int t = First(i); t <= i + node.horizon; ++t) {
          Append(acc, Product(Hold(left, i, t - 1), Expand(right, t)));
        }
        return acc;
      }
    }
    return {};
  }

 private:
  int First(int i) const { return options_.strict_eventually ? i + 1 : i; }

  // `child` at every step of [first, last]; an empty window is `true`.
  PlanList Hold(const SpecNode& child, int first, int last) const {
    if (last < first) return {ConstraintPlan{}};
    if (child.kind == SpecKind::kAtom) {
      ConstraintPlan plan;
      plan.safety_rows.push_back({first, last, child.atom});
      return {plan};
    }
    PlanList acc{ConstraintPlan{}};
    for (int t = first; t <= last; ++t) acc = Product(acc, Expand(child, t));
    return acc;
  }

  void Check(std::size_t count) const {
    if (count > options_.plan_cap) {
      throw PlanCapExceeded(fmt::format(
          "plan enumeration exceeds the cap of {} plans", options_.plan_cap));
    }
  }

  void Append(PlanList& acc, PlanList more) const {
    Check(acc.size() + more.size());
    for (auto& p : more) acc.push_back(std::move(p));
  }

  PlanList Product(const PlanList& a, const PlanList& b) const {
    Check(a.size() * b.size());
    PlanList out;
    out.reserve(a.size() * b.size());
    for (const auto& pa : a) {
      for (const auto& pb : b) {
        ConstraintPlan merged = pa;
        merged.reach_rows.insert(merged.reach_rows.end(), pb.reach_rows.begin(),
                                 pb.reach_rows.end());
        merged.safety_rows.insert(merged.safety_rows.end(),
                                  pb.safety_rows.begin(), pb.safety_rows.end());
        out.push_back(std::move(merged));
      }
    }
    return out;
  }

  PlanOptions options_;
};

}  // namespace

std::vector<ConstraintPlan> EnumeratePlans(const SpecNode& spec, int horizon,
                                           const PlanOptions& options) {
  const int needed = RequiredHorizon(spec);
  if (needed > horizon) {
    throw std::invalid_argument(fmt::format(
        "spec '{}' references step {} beyond horizon {}", PrintSpec(spec),
        needed, horizon));
  }
  PlanList raw = Expander(options).Expand(spec, 0);
  PlanList unique;
  std::set<std::vector<ReachRow>> seen;
  for (auto& plan : raw) {
    if (seen.insert(plan.Requirements()).second) {
      unique.push_back(std::move(plan));
    }
  }
  return unique;
}

}  // namespace resilience
