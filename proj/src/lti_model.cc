#include "resilience/lti_model.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

std::shared_ptr<const HorizonLift> LiftCache::Get(int horizon) const {
  std::lock_guard lock(mutex_);
  auto it = lifts_.find(horizon);
  return it == lifts_.end() ? nullptr : it->second;
}

void LiftCache::Put(std::shared_ptr<const HorizonLift> lift) {
  std::lock_guard lock(mutex_);
  lifts_.try_emplace(lift->horizon, std::move(lift));
}

LtiSystem::LtiSystem(Eigen::MatrixXd A, Eigen::MatrixXd Bu, Eigen::MatrixXd Bw,
                     Polytope input_set, double wbar)
    : A_(std::move(A)),
      Bu_(std::move(Bu)),
      Bw_(std::move(Bw)),
      input_set_(std::move(input_set)),
      wbar_(wbar),
      cache_(std::make_shared<LiftCache>()) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw std::invalid_argument(
        fmt::format("A must be square and non-empty, got {}x{}", A_.rows(),
                    A_.cols()));
  }
  if (Bu_.rows() != A_.rows() || Bu_.cols() == 0) {
    throw std::invalid_argument(fmt::format(
        "Bu must have {} rows and at least one column, got {}x{}", A_.rows(),
        Bu_.rows(), Bu_.cols()));
  }
  if (Bw_.rows() != A_.rows() || Bw_.cols() == 0) {
    throw std::invalid_argument(fmt::format(
        "Bw must have {} rows and at least one column, got {}x{}", A_.rows(),
        Bw_.rows(), Bw_.cols()));
  }
  if (input_set_.dim() != Bu_.cols()) {
    throw std::invalid_argument(
        fmt::format("input set has dimension {}, expected {}",
                    input_set_.dim(), Bu_.cols()));
  }
  if (!(wbar_ >= 0.0) || !std::isfinite(wbar_)) {
    throw std::invalid_argument("wbar must be finite and nonnegative");
  }
  if (!A_.allFinite() || !Bu_.allFinite() || !Bw_.allFinite()) {
    throw std::invalid_argument("system matrices contain non-finite entries");
  }
}

LtiSystem LtiSystem::WithWbar(double wbar) const {
  LtiSystem copy = *this;
  if (!(wbar >= 0.0) || !std::isfinite(wbar)) {
    throw std::invalid_argument("wbar must be finite and nonnegative");
  }
  copy.wbar_ = wbar;
  return copy;
}

std::shared_ptr<const HorizonLift> LtiSystem::Lift(int horizon) const {
  if (auto hit = cache_->Get(horizon)) return hit;
  auto lift = std::make_shared<const HorizonLift>(BuildLift(*this, horizon));
  cache_->Put(lift);
  return cache_->Get(horizon);
}

HorizonLift BuildLift(const LtiSystem& sys, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int p = sys.disturbance_dim();
  HorizonLift lift;
  lift.horizon = horizon;
  lift.free_response.resize(horizon * n, n);
  lift.Gu = Eigen::MatrixXd::Zero(horizon * n, horizon * m);
  lift.Gw = Eigen::MatrixXd::Zero(horizon * n, horizon * p);

  // powers[k] = A^k
  std::vector<Eigen::MatrixXd> powers;
  powers.reserve(horizon + 1);
  powers.push_back(Eigen::MatrixXd::Identity(n, n));
  for (int k = 1; k <= horizon; ++k) powers.push_back(sys.A() * powers.back());

  for (int k = 0; k < horizon; ++k) {
    lift.free_response.block(k * n, 0, n, n) = powers[k + 1];
    for (int j = 0; j <= k; ++j) {
      lift.Gu.block(k * n, j * m, n, m) = powers[k - j] * sys.Bu();
      lift.Gw.block(k * n, j * p, n, p) = powers[k - j] * sys.Bw();
    }
  }
  return lift;
}

Eigen::MatrixXd Simulate(const LtiSystem& sys, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& disturbances) {
  if (x0.size() != sys.state_dim()) {
    throw std::invalid_argument(fmt::format(
        "x0 has dimension {}, expected {}", x0.size(), sys.state_dim()));
  }
  if (inputs.cols() != disturbances.cols()) {
    throw std::invalid_argument(
        fmt::format("input sequence has {} steps but disturbance sequence {}",
                    inputs.cols(), disturbances.cols()));
  }
  if (inputs.cols() > 0 && (inputs.rows() != sys.input_dim() ||
                            disturbances.rows() != sys.disturbance_dim())) {
    throw std::invalid_argument("input or disturbance dimension mismatch");
  }
  const Eigen::Index steps = inputs.cols();
  Eigen::MatrixXd traj(sys.state_dim(), steps + 1);
  traj.col(0) = x0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    traj.col(t + 1) = sys.A() * traj.col(t) + sys.Bu() * inputs.col(t) +
                      sys.Bw() * disturbances.col(t);
  }
  return traj;
}

bool CheckControllable(const LtiSystem& sys) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  Eigen::MatrixXd ctrb(n, n * m);
  Eigen::MatrixXd block = sys.Bu();
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = sys.A() * block;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
  const auto& sigma = svd.singularValues();
  if (sigma.size() < n || sigma(0) == 0.0) return false;
  return sigma(n - 1) > 1e-10 * sigma(0);
}

Eigen::MatrixXd Unstack(const Eigen::VectorXd& stacked, int dim) {
  if (dim <= 0 || stacked.size() % dim != 0) {
    throw std::invalid_argument("Unstack: length not a multiple of dim");
  }
  return Eigen::Map<const Eigen::MatrixXd>(stacked.data(), dim,
                                           stacked.size() / dim);
}

}  // namespace resilience
