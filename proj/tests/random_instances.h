#pragma once

// Randomized analysis instances and a Monte-Carlo robustness judge shared by
// the unit and acceptance tests.

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "resilience/lti_model.h"
#include "resilience/polytope.h"
#include "resilience/spec_lang.h"

namespace resilience::testing {

struct RandomInstance {
  LtiSystem sys;
  SetTable sets;
  Eigen::VectorXd x0;
  SpecPtr spec;
  int horizon = 0;
};

inline double Uniform(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

inline Polytope CenteredBox(const char* name, const Eigen::VectorXd& center,
                            double half_width) {
  const Eigen::VectorXd r = Eigen::VectorXd::Constant(center.size(), half_width);
  return Polytope::Box(name, center - r, center + r);
}

/// A one- or two-dimensional system with a reach, safety, reach-avoid or
/// until task of horizon at most four. Not necessarily feasible.
inline RandomInstance MakeRandomInstance(std::mt19937_64& rng) {
  const int n = 1 + static_cast<int>(rng() % 2);
  const int m = 1 + static_cast<int>(rng() % 2);
  Eigen::MatrixXd A(n, n), Bu(n, m), Bw(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = i == j ? Uniform(rng, 0.7, 1.1) : Uniform(rng, -0.3, 0.3);
      Bw(i, j) = i == j ? Uniform(rng, 0.5, 1.5) : Uniform(rng, -0.3, 0.3);
    }
    for (int j = 0; j < m; ++j) Bu(i, j) = Uniform(rng, -1.5, 1.5);
  }
  if (m >= n) Bu.leftCols(n).diagonal().array() += 1.0;
  const double umax = Uniform(rng, 2.0, 6.0);
  LtiSystem sys(A, Bu, Bw,
                Polytope::Box("U", Eigen::VectorXd::Constant(m, -umax),
                              Eigen::VectorXd::Constant(m, umax)),
                0.0);

  Eigen::VectorXd center(n), x0(n);
  for (int i = 0; i < n; ++i) {
    center(i) = Uniform(rng, -3.0, 3.0);
    x0(i) = Uniform(rng, -1.0, 1.0);
  }
  SetTable sets;
  sets.emplace("T", CenteredBox("T", center, Uniform(rng, 0.6, 1.5)));
  sets.emplace("S", CenteredBox("S", Eigen::VectorXd::Zero(n), Uniform(rng, 4.5, 7.0)));

  const int k = 1 + static_cast<int>(rng() % 4);
  const std::string K = std::to_string(k);
  const std::string texts[] = {"X[" + K + "] T", "F[" + K + "] T", "G[" + K + "] S",
                               "F[" + K + "] T && G[" + K + "] S",
                               "U[" + K + "](S, T)"};
  SpecPtr spec = ParseSpec(texts[rng() % 5], sets);
  return {std::move(sys), std::move(sets), std::move(x0), std::move(spec), k};
}

/// Number of rollouts under stacked `inputs` with i.i.d. uniform disturbances
/// in [-wbar, wbar]^p that violate `spec`.
inline int RobustViolations(const LtiSystem& sys, const SetTable& sets,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& inputs,
                            const SpecNode& spec, int horizon, int samples,
                            std::uint64_t seed, const SemanticsOptions& semantics = {}) {
  std::mt19937_64 rng(seed);
  const int m = static_cast<int>(sys.Bu().cols());
  const int p = static_cast<int>(sys.Bw().cols());
  const Eigen::MatrixXd u = Eigen::Map<const Eigen::MatrixXd>(inputs.data(), m, horizon);
  Eigen::MatrixXd w(p, horizon);
  int violations = 0;
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < w.size(); ++i) w.data()[i] = Uniform(rng, -sys.wbar(), sys.wbar());
    if (!Evaluate(spec, Simulate(sys, x0, u, w), sets, semantics)) ++violations;
  }
  return violations;
}

}  // namespace resilience::testing
