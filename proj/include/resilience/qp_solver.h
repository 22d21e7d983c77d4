#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace resilience {

/// minimize ||u||_2^2  subject to  rows * u <= rhs.
struct Qp {
  int dim = 0;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  /// Empty, or one provenance label per row.
  std::vector<std::string> labels;

  explicit Qp(int dim = 0);

  int num_rows() const { return static_cast<int>(rows.rows()); }

  void AddRow(const Eigen::Ref<const Eigen::RowVectorXd>& coeffs, double bound,
              std::string label = {});
  /// Appends M u <= b; labels become "<prefix>[i]".
  void AddRows(const Eigen::Ref<const Eigen::MatrixXd>& M,
               const Eigen::Ref<const Eigen::VectorXd>& b,
               const std::string& label_prefix = {});
};

enum class QpStatus { kOptimal, kInfeasible, kMaxIters };

std::string ToString(QpStatus status);

struct QpSolution {
  QpStatus status = QpStatus::kMaxIters;
  Eigen::VectorXd primal;
  /// Nonnegative multipliers at Optimal; a normalized Farkas certificate
  /// (dual >= 0, rows^T dual ~ 0, rhs^T dual < 0) at Infeasible.
  Eigen::VectorXd dual;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  bool polished = false;
};

struct QpSettings {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  int max_iters = 200000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int scaling_iters = 10;
  bool adaptive_rho = true;
  int check_interval = 25;
  bool polish = true;
  /// Residual bound a polished point must meet to be accepted.
  double polish_tol = 1e-9;
  /// Bound on the certificate residual ||rows^T y||_inf for ||y||_inf = 1.
  double infeasibility_tol = 1e-10;
  /// Rows with all-zero coefficients are checked directly against this.
  double zero_row_tol = 1e-9;
};

/// ADMM on the (decision, slack) splitting with over-relaxation, Ruiz
/// equilibration and an active-set polish. Deterministic for fixed inputs.
/// Throws std::invalid_argument on malformed or non-finite data.
QpSolution SolveQp(const Qp& qp, const QpSettings& settings = {});

struct KktResiduals {
  double stationarity = 0.0;    // ||2 u + rows^T y||_inf
  double feasibility = 0.0;     // max(0, max_i (rows u - rhs)_i)
  double complementarity = 0.0; // max_i |y_i (rhs - rows u)_i|
  double max() const;
};

KktResiduals ComputeKktResiduals(const Qp& qp, const Eigen::VectorXd& primal,
                                 const Eigen::VectorXd& dual);

/// -||rows^T y||^2 / 4 - rhs^T y, the Lagrange dual function.
double DualObjective(const Qp& qp, const Eigen::VectorXd& dual);

/// One constraint per line: coefficients followed by the rhs.
void WriteQpText(std::ostream& out, const Qp& qp);

}  // namespace resilience
