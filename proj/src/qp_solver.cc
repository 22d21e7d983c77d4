#include "resilience/qp_solver.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace resilience {

Qp::Qp(int dim) : dim(dim), rows(0, dim), rhs(0) {
  if (dim < 0) throw std::invalid_argument("Qp: negative dimension");
}

void Qp::AddRow(const Eigen::Ref<const Eigen::RowVectorXd>& coeffs,
                double bound, std::string label) {
  if (coeffs.size() != dim) {
    throw std::invalid_argument(fmt::format(
        "Qp::AddRow: row has {} entries, expected {}", coeffs.size(), dim));
  }
  const Eigen::Index r = rows.rows();
  rows.conservativeResize(r + 1, dim);
  rows.row(r) = coeffs;
  rhs.conservativeResize(r + 1);
  rhs(r) = bound;
  if (!label.empty() || !labels.empty()) {
    labels.resize(r);
    labels.push_back(std::move(label));
  }
}

void Qp::AddRows(const Eigen::Ref<const Eigen::MatrixXd>& M,
                 const Eigen::Ref<const Eigen::VectorXd>& b,
                 const std::string& label_prefix) {
  if (M.rows() != b.size() || M.cols() != dim) {
    throw std::invalid_argument("Qp::AddRows: dimension mismatch");
  }
  const Eigen::Index r = rows.rows();
  rows.conservativeResize(r + M.rows(), dim);
  rows.bottomRows(M.rows()) = M;
  rhs.conservativeResize(r + b.size());
  rhs.tail(b.size()) = b;
  if (!label_prefix.empty() || !labels.empty()) {
    labels.resize(r);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      labels.push_back(label_prefix.empty()
                           ? std::string{}
                           : fmt::format("{}[{}]", label_prefix, i));
    }
  }
}

std::string ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kMaxIters: return "max-iters";
  }
  return "?";
}

double KktResiduals::max() const {
  return std::max({stationarity, feasibility, complementarity});
}

KktResiduals ComputeKktResiduals(const Qp& qp, const Eigen::VectorXd& primal,
                                 const Eigen::VectorXd& dual) {
  KktResiduals res;
  Eigen::VectorXd grad = 2.0 * primal;
  if (qp.num_rows() > 0) {
    grad += qp.rows.transpose() * dual;
    const Eigen::VectorXd slack = qp.rhs - qp.rows * primal;
    res.feasibility = std::max(0.0, -slack.minCoeff());
    res.complementarity = dual.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  res.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

double DualObjective(const Qp& qp, const Eigen::VectorXd& dual) {
  if (qp.num_rows() == 0) return 0.0;
  const Eigen::VectorXd at_y = qp.rows.transpose() * dual;
  return -0.25 * at_y.squaredNorm() - qp.rhs.dot(dual);
}

void WriteQpText(std::ostream& out, const Qp& qp) {
  for (int i = 0; i < qp.num_rows(); ++i) {
    for (int j = 0; j < qp.dim; ++j) out << fmt::format("{:.17g} ", qp.rows(i, j));
    out << fmt::format("{:.17g}\n", qp.rhs(i));
  }
}

namespace {

double InfNorm(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double ClampNorm(double v) {
  if (v < 1e-4) return 1.0;
  return std::min(v, 1e4);
}

// Ruiz equilibration of the KKT matrix [P A^T; A 0] with P = 2I, followed by
// cost scaling: P~ = c D P D, A~ = E A D, b~ = E b.
struct Equilibration {
  Eigen::VectorXd D;
  Eigen::VectorXd E;
  double c = 1.0;
  Eigen::VectorXd P;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

Equilibration Equilibrate(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          int iters) {
  const Eigen::Index n = A.cols();
  const Eigen::Index r = A.rows();
  Equilibration eq;
  eq.D = Eigen::VectorXd::Ones(n);
  eq.E = Eigen::VectorXd::Ones(r);
  eq.P = Eigen::VectorXd::Constant(n, 2.0);
  eq.A = A;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd dt(n), et(r);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = std::abs(eq.P(j));
      if (r > 0) norm = std::max(norm, eq.A.col(j).cwiseAbs().maxCoeff());
      dt(j) = 1.0 / std::sqrt(ClampNorm(norm));
    }
    for (Eigen::Index i = 0; i < r; ++i) {
      et(i) = 1.0 / std::sqrt(ClampNorm(eq.A.row(i).cwiseAbs().maxCoeff()));
    }
    eq.P = eq.P.cwiseProduct(dt).cwiseProduct(dt);
    eq.A = et.asDiagonal() * eq.A * dt.asDiagonal();
    eq.D = eq.D.cwiseProduct(dt);
    eq.E = eq.E.cwiseProduct(et);
    const double ct = 1.0 / ClampNorm(eq.P.mean());
    eq.P *= ct;
    eq.c *= ct;
  }
  eq.b = eq.E.cwiseProduct(b);
  return eq;
}

// Equality-constrained KKT solves on a guessed active set, repaired by
// dropping rows with negative multipliers and adding violated rows.
bool Polish(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
            std::vector<char> active, double tol, Eigen::VectorXd& u_out,
            Eigen::VectorXd& y_out) {
  const Eigen::Index r = A.rows();
  const Eigen::Index n = A.cols();
  const int max_repairs = static_cast<int>(4 * r + 10);
  for (int repair = 0; repair <= max_repairs; ++repair) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (active[i]) idx.push_back(i);
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(r);
    if (!idx.empty()) {
      Eigen::MatrixXd Aa(idx.size(), n);
      Eigen::VectorXd ba(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        Aa.row(k) = A.row(idx[k]);
        ba(k) = b(idx[k]);
      }
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Aa);
      u = cod.solve(ba);
      if (InfNorm(Aa * u - ba) > tol) return false;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codt(
          Aa.transpose());
      const Eigen::VectorXd ya = codt.solve(-2.0 * u);
      Eigen::Index worst = 0;
      if (ya.minCoeff(&worst) < -tol) {
        active[idx[worst]] = 0;
        continue;
      }
      for (std::size_t k = 0; k < idx.size(); ++k) y(idx[k]) = ya(k);
    }
    Eigen::Index worst_row = -1;
    double worst_violation = tol;
    const Eigen::VectorXd violation = A * u - b;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!active[i] && violation(i) > worst_violation) {
        worst_violation = violation(i);
        worst_row = i;
      }
    }
    if (worst_row >= 0) {
      active[worst_row] = 1;
      continue;
    }
    u_out = u;
    y_out = y;
    return true;
  }
  return false;
}

// Projects a candidate Farkas direction onto {y : A_S^T y = 0} over its
// support S and accepts it if it stays nonnegative with rhs^T y < 0.
bool RefineCertificate(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& candidate, double tol,
                       Eigen::VectorXd& cert) {
  const double peak = InfNorm(candidate);
  if (!(peak > 0.0)) return false;
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < candidate.size(); ++i) {
    if (candidate(i) > 1e-8 * peak) support.push_back(i);
  }
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd As(s, A.cols());
  Eigen::VectorXd ys(s);
  for (Eigen::Index k = 0; k < s; ++k) {
    As.row(k) = A.row(support[k]);
    ys(k) = candidate(support[k]);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(As);
  const Eigen::VectorXd coeffs = cod.solve(ys);  // least squares As c ~ ys
  Eigen::VectorXd projected = ys - As * coeffs;
  const double scale = InfNorm(projected);
  if (!(scale > 1e-8 * InfNorm(ys))) return false;
  projected /= scale;
  if (projected.minCoeff() < -1e-9) return false;
  projected = projected.cwiseMax(0.0);
  cert = Eigen::VectorXd::Zero(A.rows());
  for (Eigen::Index k = 0; k < s; ++k) cert(support[k]) = projected(k);
  const double a_scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double b_scale = std::max(1.0, InfNorm(b));
  return InfNorm(A.transpose() * cert) <= tol * a_scale &&
         b.dot(cert) < -tol * b_scale;
}

void FillResiduals(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                   QpSolution& sol) {
  Qp tmp(static_cast<int>(A.cols()));
  tmp.rows = A;
  tmp.rhs = b;
  const KktResiduals kkt = ComputeKktResiduals(tmp, sol.primal, sol.dual);
  sol.primal_residual = kkt.feasibility;
  sol.dual_residual = kkt.stationarity;
  sol.complementarity = kkt.complementarity;
  sol.objective = sol.primal.squaredNorm();
}

}  // namespace

QpSolution SolveQp(const Qp& qp, const QpSettings& settings) {
  const int n = qp.dim;
  if (qp.rows.cols() != n || qp.rows.rows() != qp.rhs.size()) {
    throw std::invalid_argument("SolveQp: malformed problem dimensions");
  }
  if (!qp.rows.allFinite() || !qp.rhs.allFinite()) {
    throw std::invalid_argument("SolveQp: non-finite problem data");
  }
  const Eigen::Index total_rows = qp.rows.rows();

  QpSolution sol;
  sol.primal = Eigen::VectorXd::Zero(n);
  sol.dual = Eigen::VectorXd::Zero(total_rows);

  // Rows without coefficients are decided by their right-hand side alone.
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < total_rows; ++i) {
    if (n == 0 || qp.rows.row(i).cwiseAbs().maxCoeff() == 0.0) {
      if (qp.rhs(i) < -settings.zero_row_tol) {
        sol.status = QpStatus::kInfeasible;
        sol.dual(i) = 1.0;
        return sol;
      }
    } else {
      kept.push_back(i);
    }
  }
  const Eigen::Index r = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd A(r, n);
  Eigen::VectorXd b(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    A.row(k) = qp.rows.row(kept[k]);
    b(k) = qp.rhs(kept[k]);
  }
  auto scatter = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(total_rows);
    for (Eigen::Index k = 0; k < r; ++k) full(kept[k]) = y(k);
    return full;
  };
  auto finish = [&](QpStatus status, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& y, int iterations, bool polished) {
    sol.status = status;
    sol.primal = u;
    sol.dual = scatter(y);
    sol.iterations = iterations;
    sol.polished = polished;
    FillResiduals(qp.rows, qp.rhs, sol);
    return sol;
  };

  if (r == 0 || b.minCoeff() >= 0.0) {
    // u = 0 is feasible and is the unconstrained minimizer.
    return finish(QpStatus::kOptimal, Eigen::VectorXd::Zero(n),
                  Eigen::VectorXd::Zero(r), 0, false);
  }

  const Equilibration eq = Equilibrate(A, b, settings.scaling_iters);
  const double sigma = settings.sigma;
  const double alpha = settings.alpha;
  double rho = settings.rho;

  const Eigen::MatrixXd AtA = eq.A.transpose() * eq.A;
  auto factor = [&](double rho_value) {
    Eigen::MatrixXd K = rho_value * AtA;
    K.diagonal() += eq.P + Eigen::VectorXd::Constant(n, sigma);
    return Eigen::LLT<Eigen::MatrixXd>(K);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd delta_y = Eigen::VectorXd::Zero(r);
  std::vector<char> last_polish_set;

  const double a_max = A.cwiseAbs().maxCoeff();

  for (int k = 1; k <= settings.max_iters; ++k) {
    const Eigen::VectorXd rhs = sigma * x + eq.A.transpose() * (rho * z - y);
    const Eigen::VectorXd xt = llt.solve(rhs);
    const Eigen::VectorXd zt = eq.A * xt;
    const Eigen::VectorXd x_next = alpha * xt + (1.0 - alpha) * x;
    const Eigen::VectorXd z_relaxed = alpha * zt + (1.0 - alpha) * z;
    const Eigen::VectorXd z_next = (z_relaxed + y / rho).cwiseMin(eq.b);
    const Eigen::VectorXd y_next = y + rho * (z_relaxed - z_next);
    delta_y = y_next - y;
    x = x_next;
    z = z_next;
    y = y_next;

    if (k % settings.check_interval != 0 && k != settings.max_iters) continue;

    // Residuals on the original data.
    const Eigen::VectorXd u = eq.D.cwiseProduct(x);
    const Eigen::VectorXd z_orig = z.cwiseQuotient(eq.E);
    const Eigen::VectorXd y_orig = eq.E.cwiseProduct(y) / eq.c;
    const Eigen::VectorXd Au = A * u;
    const Eigen::VectorXd Aty = A.transpose() * y_orig;
    const double r_prim = InfNorm(Au - z_orig);
    const double r_dual = InfNorm(2.0 * u + Aty);
    const double prim_scale = std::max(InfNorm(Au), InfNorm(z_orig));
    const double dual_scale = std::max(2.0 * InfNorm(u), InfNorm(Aty));
    const bool converged =
        r_prim <= settings.eps_abs + settings.eps_rel * prim_scale &&
        r_dual <= settings.eps_abs + settings.eps_rel * dual_scale;
    const bool near = r_prim <= 1e-3 * (1.0 + prim_scale) &&
                      r_dual <= 1e-3 * (1.0 + dual_scale);

    if (settings.polish && (converged || near)) {
      std::vector<char> active(r);
      for (Eigen::Index i = 0; i < r; ++i) {
        active[i] = (b(i) - z_orig(i)) < y_orig(i) ? 1 : 0;
      }
      if (converged || active != last_polish_set) {
        last_polish_set = active;
        Eigen::VectorXd u_pol, y_pol;
        if (Polish(A, b, active, 0.1 * settings.polish_tol, u_pol, y_pol)) {
          Qp reduced(n);
          reduced.rows = A;
          reduced.rhs = b;
          if (ComputeKktResiduals(reduced, u_pol, y_pol).max() <=
              settings.polish_tol) {
            return finish(QpStatus::kOptimal, u_pol, y_pol, k, true);
          }
        }
      }
    }
    if (converged) {
      return finish(QpStatus::kOptimal, u, y_orig.cwiseMax(0.0), k, false);
    }

    // Primal infeasibility: delta_y tends to a Farkas direction.
    const Eigen::VectorXd dy = eq.E.cwiseProduct(delta_y).cwiseMax(0.0);
    const double dy_norm = InfNorm(dy);
    if (dy_norm > 1e-14) {
      const double loose = 1e-4;
      if (InfNorm(A.transpose() * dy) <= loose * std::max(1.0, a_max) * dy_norm &&
          b.dot(dy) < -loose * dy_norm) {
        Eigen::VectorXd cert;
        if (RefineCertificate(A, b, dy, settings.infeasibility_tol, cert)) {
          sol.status = QpStatus::kInfeasible;
          sol.primal = u;
          sol.dual = scatter(cert);
          sol.iterations = k;
          sol.objective = u.squaredNorm();
          return sol;
        }
      }
    }

    if (settings.adaptive_rho) {
      const double prim_rel = r_prim / std::max(prim_scale, 1e-30);
      const double dual_rel = r_dual / std::max(dual_scale, 1e-30);
      const double ratio = std::sqrt(prim_rel / std::max(dual_rel, 1e-30));
      if (std::isfinite(ratio) && (ratio > 5.0 || ratio < 0.2)) {
        rho = std::clamp(rho * ratio, 1e-6, 1e6);
        llt = factor(rho);
      }
    }
  }

  const Eigen::VectorXd u = eq.D.cwiseProduct(x);
  const Eigen::VectorXd y_orig = (eq.E.cwiseProduct(y) / eq.c).cwiseMax(0.0);
  return finish(QpStatus::kMaxIters, u, y_orig, settings.max_iters, false);
}

}  // namespace resilience
