#include "resilience/polytope.h"

#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

Polytope::Polytope(std::string name, Eigen::MatrixXd H, Eigen::VectorXd h)
    : name_(std::move(name)), H_(std::move(H)), h_(std::move(h)) {
  if (H_.rows() != h_.size()) {
    throw std::invalid_argument(
        fmt::format("polytope '{}': H has {} rows but h has {} entries", name_,
                    H_.rows(), h_.size()));
  }
  if (H_.rows() == 0 || H_.cols() == 0) {
    throw std::invalid_argument(
        fmt::format("polytope '{}': H must be non-empty", name_));
  }
  if (!H_.allFinite() || !h_.allFinite()) {
    throw std::invalid_argument(
        fmt::format("polytope '{}': non-finite entry", name_));
  }
  for (Eigen::Index i = 0; i < H_.rows(); ++i) {
    if (H_.row(i).cwiseAbs().maxCoeff() == 0.0) {
      throw std::invalid_argument(
          fmt::format("polytope '{}': row {} of H is zero", name_, i));
    }
  }
}

Polytope Polytope::Box(std::string name, const Eigen::VectorXd& lower,
                       const Eigen::VectorXd& upper) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("Box: bound dimensions differ");
  }
  const Eigen::Index n = lower.size();
  Eigen::MatrixXd H(2 * n, n);
  H << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd h(2 * n);
  h << upper, -lower;
  return Polytope(std::move(name), std::move(H), std::move(h));
}

double Polytope::MaxViolation(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != H_.cols()) {
    throw std::invalid_argument(
        fmt::format("polytope '{}': point has dimension {}, expected {}",
                    name_, x.size(), H_.cols()));
  }
  return (H_ * x - h_).maxCoeff();
}

bool Polytope::Contains(const Eigen::Ref<const Eigen::VectorXd>& x,
                        double tol) const {
  return MaxViolation(x) <= tol;
}

Polytope LiftPolytope(const Polytope& set, int horizon) {
  if (horizon < 1) {
    throw std::invalid_argument("LiftPolytope: horizon must be >= 1");
  }
  const int q = set.num_rows();
  const int n = set.dim();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q * horizon, n * horizon);
  Eigen::VectorXd h(q * horizon);
  for (int k = 0; k < horizon; ++k) {
    H.block(k * q, k * n, q, n) = set.H();
    h.segment(k * q, q) = set.h();
  }
  return Polytope(set.name() + "^" + std::to_string(horizon), std::move(H),
                  std::move(h));
}

Eigen::VectorXd RowSupport(const Eigen::Ref<const Eigen::MatrixXd>& M,
                           double wbar) {
  if (wbar < 0.0) throw std::invalid_argument("RowSupport: wbar < 0");
  return wbar * M.cwiseAbs().rowwise().sum();
}

Eigen::VectorXd MatrixNormSupport(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                  double wbar) {
  if (wbar < 0.0) throw std::invalid_argument("MatrixNormSupport: wbar < 0");
  if (M.size() == 0) return Eigen::VectorXd::Zero(M.rows());
  const double norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  return Eigen::VectorXd::Constant(M.rows(), wbar * norm1);
}

}  // namespace resilience
