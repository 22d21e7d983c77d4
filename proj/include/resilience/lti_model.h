#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "resilience/polytope.h"

namespace resilience {

/// Stacked prediction over a horizon N for x_{t+1} = A x_t + Bu u_t + Bw w_t:
///   [x_1; ...; x_N] = free_response * x_0 + Gu * [u_0; ...] + Gw * [w_0; ...].
struct HorizonLift {
  int horizon = 0;
  Eigen::MatrixXd free_response;  // (N n) x n, block k is A^{k+1}
  Eigen::MatrixXd Gu;             // (N n) x (N m), block (k, j) = A^{k-j} Bu
  Eigen::MatrixXd Gw;             // (N n) x (N p)

  int state_dim() const { return static_cast<int>(free_response.cols()); }

  /// Rows of Gu that predict x_t, t in [1, N].
  auto InputRows(int t) const {
    return Gu.middleRows((t - 1) * state_dim(), state_dim());
  }
  auto DisturbanceRows(int t) const {
    return Gw.middleRows((t - 1) * state_dim(), state_dim());
  }
  auto FreeRows(int t) const {
    return free_response.middleRows((t - 1) * state_dim(), state_dim());
  }
};

/// Thread-safe cache of lifts keyed by horizon.
class LiftCache {
 public:
  std::shared_ptr<const HorizonLift> Get(int horizon) const;
  void Put(std::shared_ptr<const HorizonLift> lift);

 private:
  mutable std::mutex mutex_;
  std::map<int, std::shared_ptr<const HorizonLift>> lifts_;
};

/// Discrete-time LTI system with polytopic input set and infinity-norm
/// disturbance bound. Immutable; copies share the lift cache.
class LtiSystem {
 public:
  LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd Bu, Eigen::MatrixXd Bw,
            Polytope input_set, double wbar);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& Bu() const { return Bu_; }
  const Eigen::MatrixXd& Bw() const { return Bw_; }
  const Polytope& input_set() const { return input_set_; }
  double wbar() const { return wbar_; }

  int state_dim() const { return static_cast<int>(A_.rows()); }
  int input_dim() const { return static_cast<int>(Bu_.cols()); }
  int disturbance_dim() const { return static_cast<int>(Bw_.cols()); }

  /// Same dynamics with a different disturbance bound (shares the cache).
  LtiSystem WithWbar(double wbar) const;

  /// Cached lift for horizon N >= 1.
  std::shared_ptr<const HorizonLift> Lift(int horizon) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::MatrixXd Bu_;
  Eigen::MatrixXd Bw_;
  Polytope input_set_;
  double wbar_;
  std::shared_ptr<LiftCache> cache_;
};

/// Builds the lift by iterated multiplication (no caching).
HorizonLift BuildLift(const LtiSystem& sys, int horizon);

/// Rolls the dynamics forward. `inputs` and `disturbances` hold one column per
/// step; the result holds x_0..x_T as columns.
Eigen::MatrixXd Simulate(const LtiSystem& sys, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& disturbances);

/// Rank test on [Bu, A Bu, ..., A^{n-1} Bu] with singular value threshold
/// sigma > 1e-10 * sigma_max.
bool CheckControllable(const LtiSystem& sys);

/// Reshapes a stacked vector [v_0; ...; v_{T-1}] into a dim x T matrix.
Eigen::MatrixXd Unstack(const Eigen::VectorXd& stacked, int dim);

}  // namespace resilience
