#include <fmt/format.h>

#include "resilience/spec_lang.h"

namespace resilience {

namespace {

class Evaluator {
 public:
  Evaluator(const Eigen::MatrixXd& trajectory, const SetTable& bindings,
            const SemanticsOptions& options)
      : traj_(trajectory), bindings_(bindings), options_(options) {}

  bool Sat(const SpecNode& node, int i) const {
    switch (node.kind) {
      case SpecKind::kTrue:
        return true;
      case SpecKind::kFalse:
        return false;
      case SpecKind::kAtom:
        return Set(node.atom).Contains(State(i));
      case SpecKind::kNot:
        return !Sat(*node.children[0], i);
      case SpecKind::kAnd:
        for (const auto& c : node.children) {
          if (!Sat(*c, i)) return false;
        }
        return true;
      case SpecKind::kOr:
        for (const auto& c : node.children) {
          if (Sat(*c, i)) return true;
        }
        return false;
      case SpecKind::kNext:
        return Sat(*node.children[0], i + node.horizon);
      case SpecKind::kEventually:
        for (int m = First(i); m <= i + node.horizon; ++m) {
          if (Sat(*node.children[0], m)) return true;
        }
        return false;
      case SpecKind::kAlways:
        for (int m = i; m <= i + node.horizon; ++m) {
          if (!Sat(*node.children[0], m)) return false;
        }
        return true;
      case SpecKind::kUntil:
        for (int m = i; m < First(i); ++m) {
          if (!Sat(*node.children[0], m)) return false;
        }
        for (int m = First(i); m <= i + node.horizon; ++m) {
          if (Sat(*node.children[1], m)) return true;
          if (m == i + node.horizon || !Sat(*node.children[0], m)) return false;
        }
        return false;
    }
    return false;
  }

 private:
  int First(int i) const { return options_.strict_eventually ? i + 1 : i; }

  Eigen::VectorXd State(int i) const {
    if (i < 0 || i >= traj_.cols()) {
      throw std::out_of_range(fmt::format(
          "trajectory has {} states, step {} requested", traj_.cols(), i));
    }
    return traj_.col(i);
  }

  const Polytope& Set(const std::string& name) const {
    auto it = bindings_.find(name);
    if (it == bindings_.end()) {
      throw std::invalid_argument(fmt::format("unbound atom '{}'", name));
    }
    return it->second;
  }

  const Eigen::MatrixXd& traj_;
  const SetTable& bindings_;
  SemanticsOptions options_;
};

}  // namespace

bool Evaluate(const SpecNode& spec, const Eigen::MatrixXd& trajectory,
              const SetTable& bindings, const SemanticsOptions& options) {
  const int needed = RequiredHorizon(spec);
  if (trajectory.cols() <= needed) {
    throw std::out_of_range(
        fmt::format("spec references step {} but trajectory has {} states",
                    needed, trajectory.cols()));
  }
  return Evaluator(trajectory, bindings, options).Sat(spec, 0);
}

}  // namespace resilience
