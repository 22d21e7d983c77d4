#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>

namespace resilience {

/// Absolute tolerance applied to each row residual in membership tests.
inline constexpr double kMembershipTolerance = 1e-9;

/// Halfspace representation {y : H y <= h}. Unbounded sets are allowed.
class Polytope {
 public:
  /// Throws std::invalid_argument when H and h disagree in row count, when
  /// there are no rows, or when a row of H is identically zero.
  Polytope(std::string name, Eigen::MatrixXd H, Eigen::VectorXd h);

  /// Axis-aligned box lower <= y <= upper, rows ordered (upper..., -lower...).
  static Polytope Box(std::string name, const Eigen::VectorXd& lower,
                      const Eigen::VectorXd& upper);

  const std::string& name() const { return name_; }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::VectorXd& h() const { return h_; }
  int num_rows() const { return static_cast<int>(H_.rows()); }
  int dim() const { return static_cast<int>(H_.cols()); }

  /// True iff every row satisfies H_i x - h_i <= tol.
  bool Contains(const Eigen::Ref<const Eigen::VectorXd>& x,
                double tol = kMembershipTolerance) const;

  /// Largest row residual max_i (H_i x - h_i); nonpositive for members.
  double MaxViolation(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  std::string name_;
  Eigen::MatrixXd H_;
  Eigen::VectorXd h_;
};

/// Named polytopes referenced by specification atoms.
using SetTable = std::map<std::string, Polytope, std::less<>>;

/// Membership of a stacked vector [x_1; ...; x_N] means every block lies in
/// `set`. Rows are grouped by time step: rows [k*q, (k+1)*q) constrain x_{k+1}.
Polytope LiftPolytope(const Polytope& set, int horizon);

/// Exact supremum of (M w)_i over stacked w whose blocks are bounded by wbar
/// in the infinity norm: wbar * sum_j |M_ij|.
Eigen::VectorXd RowSupport(const Eigen::Ref<const Eigen::MatrixXd>& M,
                           double wbar);

/// Uniform tightening wbar * ||M||_1 (induced 1-norm, max column sum) applied
/// to every row. Matches the matrix-norm reading of the tightening term; it is
/// not guaranteed to dominate RowSupport.
Eigen::VectorXd MatrixNormSupport(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                  double wbar);

}  // namespace resilience
