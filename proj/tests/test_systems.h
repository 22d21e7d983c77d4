#pragma once

// Systems shared by the unit and acceptance tests.

#include <Eigen/Dense>

#include "resilience/lti_model.h"
#include "resilience/polytope.h"

namespace resilience::testing {

inline Polytope ScalarInterval(const char* name, double lo, double hi) {
  return Polytope::Box(name, Eigen::VectorXd::Constant(1, lo),
                       Eigen::VectorXd::Constant(1, hi));
}

/// x_{t+1} = x_t + u_t + w_t on the real line with |u| <= umax.
inline LtiSystem ScalarIntegrator(double wbar, double umax = 10.0) {
  return LtiSystem(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
                   Eigen::MatrixXd::Ones(1, 1), ScalarInterval("U", -umax, umax),
                   wbar);
}

inline Eigen::Matrix3d AdmireA() {
  Eigen::Matrix3d A;
  A << 0.355, 0, 0.3428, 0, 0.6031, 0, -0.0521, 0, 0.7901;
  return A;
}

inline Eigen::Matrix3d AdmireBu() {
  Eigen::Matrix3d B;
  B << 0, -2.72, 2.72, 1.298, -0.9996, -0.9996, 0, -0.1153, 0.1153;
  return B;
}

inline Eigen::Vector3d AdmireBw() { return {0.7376, 0.0019, -0.8362}; }

inline LtiSystem Admire(double wbar, double umax = 10.0) {
  return LtiSystem(AdmireA(), AdmireBu(), AdmireBw(),
                   Polytope::Box("U", Eigen::Vector3d::Constant(-umax),
                                 Eigen::Vector3d::Constant(umax)),
                   wbar);
}

/// x_{k+1} = x_k + u_k + w_k in the plane.
inline LtiSystem MobileRobot(double wbar, double umax = 10.0) {
  return LtiSystem(Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity(),
                   Eigen::Matrix2d::Identity(),
                   Polytope::Box("U", Eigen::Vector2d::Constant(-umax),
                                 Eigen::Vector2d::Constant(umax)),
                   wbar);
}

}  // namespace resilience::testing
