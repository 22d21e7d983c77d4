#pragma once

#include <optional>

#include <Eigen/Dense>

namespace resilience::testing {

/// Minimum of ||u||^2 subject to A u <= b by enumerating every subset of at
/// most dim linearly independent rows, projecting the origin onto the
/// subset's affine hull and keeping the best feasible projection.
/// std::nullopt when no candidate is feasible (the polyhedron is empty).
std::optional<Eigen::VectorXd> BruteForceMinNorm(const Eigen::MatrixXd& A,
                                                 const Eigen::VectorXd& b,
                                                 double tol = 1e-9);

}  // namespace resilience::testing
