#pragma once

#include <limits>
#include <optional>
#include <string>

namespace resilience::testing {

/// Scalar integrator x_{t+1} = x_t + u_t + w_t with |u_t| <= umax and
/// |w_t| <= wbar, and one temporal operator over an interval [lo, hi].
struct ScalarInstance {
  enum class Op { kNext, kEventually, kAlways };
  Op op = Op::kNext;
  int k = 1;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double x0 = 0.0;
  double wbar = 0.0;
  double umax = 10.0;
  int horizon = 1;

  /// Spec text in the library grammar with the interval bound as "G".
  std::string SpecText() const;
};

/// Minimum input energy found by exhaustive grid search over input
/// sequences with successive local refinement. Robust satisfaction is checked
/// by simulating every vertex disturbance sequence: X and G must hold for all
/// of them; F needs one reach time that works for all of them.
/// std::nullopt when no grid point is feasible.
std::optional<double> GridSearchEnergy(const ScalarInstance& inst,
                                       bool worst_case);

}  // namespace resilience::testing
