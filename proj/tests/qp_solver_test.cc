#include "resilience/qp_solver.h"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qp_oracle.h"

namespace resilience {
namespace {

Qp OneDim() {
  Qp qp(1);
  qp.AddRow(Eigen::RowVectorXd::Constant(1, -1.0), -1.0, "u>=1");
  return qp;
}

Qp SumAtLeastTwo() {
  Qp qp(2);
  qp.AddRow(Eigen::RowVector2d(-1, -1), -2.0);
  return qp;
}

// Random feasible instance: rows drawn around a known interior point.
Qp RandomQp(std::mt19937_64& rng, int dim, int rows) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  Eigen::VectorXd center(dim);
  for (auto& v : center) v = 2.0 * gauss(rng);
  Qp qp(dim);
  for (int i = 0; i < rows; ++i) {
    Eigen::RowVectorXd a(dim);
    for (auto& v : a) v = gauss(rng);
    qp.AddRow(a, a.dot(center) + slack(rng));
  }
  return qp;
}

TEST(QpTest, LabelsStayAligned) {
  Qp qp(2);
  qp.AddRow(Eigen::RowVector2d(1, 0), 1.0);
  EXPECT_TRUE(qp.labels.empty());
  qp.AddRow(Eigen::RowVector2d(0, 1), 1.0, "second");
  ASSERT_EQ(qp.labels.size(), 2u);
  EXPECT_EQ(qp.labels[1], "second");
  qp.AddRows(Eigen::Matrix2d::Identity(), Eigen::Vector2d(3, 4), "box");
  ASSERT_EQ(qp.labels.size(), 4u);
  EXPECT_EQ(qp.labels[3], "box[1]");
  EXPECT_THROW(qp.AddRow(Eigen::RowVector3d(1, 2, 3), 0.0), std::invalid_argument);
}

TEST(SolveQpTest, Examples) {
  const QpSolution one = SolveQp(OneDim());
  ASSERT_EQ(one.status, QpStatus::kOptimal);
  EXPECT_NEAR(one.primal(0), 1.0, 1e-9);
  EXPECT_NEAR(one.objective, 1.0, 1e-9);

  const QpSolution empty = SolveQp(Qp(3));
  ASSERT_EQ(empty.status, QpStatus::kOptimal);
  EXPECT_TRUE(empty.primal.isZero());
  EXPECT_EQ(empty.objective, 0.0);

  const QpSolution two = SolveQp(SumAtLeastTwo());
  ASSERT_EQ(two.status, QpStatus::kOptimal);
  EXPECT_NEAR(two.primal(0), 1.0, 1e-9);
  EXPECT_NEAR(two.primal(1), 1.0, 1e-9);
  EXPECT_NEAR(two.objective, 2.0, 1e-9);
  EXPECT_NEAR(two.dual(0), 2.0, 1e-8);
}

TEST(SolveQpTest, ObjectiveIsSquaredNormOfPrimal) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const QpSolution sol = SolveQp(RandomQp(rng, 3, 6));
    ASSERT_EQ(sol.status, QpStatus::kOptimal);
    EXPECT_NEAR(sol.objective, sol.primal.squaredNorm(),
                1e-12 * std::max(1.0, sol.objective));
  }
}

TEST(KktResidualsTest, Examples) {
  const Qp qp = SumAtLeastTwo();
  const KktResiduals exact =
      ComputeKktResiduals(qp, Eigen::Vector2d(1, 1), Eigen::VectorXd::Constant(1, 2));
  EXPECT_LE(exact.max(), 1e-9);

  const KktResiduals perturbed = ComputeKktResiduals(
      qp, Eigen::Vector2d(1 + 1e-3, 1), Eigen::VectorXd::Constant(1, 2));
  EXPECT_GE(perturbed.stationarity, 1e-3);

  const KktResiduals none =
      ComputeKktResiduals(Qp(2), Eigen::Vector2d::Zero(), Eigen::VectorXd());
  EXPECT_EQ(none.stationarity, 0.0);
  EXPECT_EQ(none.feasibility, 0.0);
  EXPECT_EQ(none.complementarity, 0.0);
}

TEST(SolveQpTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dims(1, 4), rows(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const Qp qp = RandomQp(rng, dims(rng), rows(rng));
    const auto oracle = testing::BruteForceMinNorm(qp.rows, qp.rhs);
    ASSERT_TRUE(oracle.has_value());
    const QpSolution sol = SolveQp(qp);
    ASSERT_EQ(sol.status, QpStatus::kOptimal) << "trial " << trial;
    const double expected = oracle->squaredNorm();
    EXPECT_NEAR(sol.objective, expected, 1e-5 * std::max(1.0, expected));
    EXPECT_LE(ComputeKktResiduals(qp, sol.primal, sol.dual).max(), 1e-7);
  }
}

TEST(SolveQpTest, AppendingRowNeverLowersObjective) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  int compared = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 4);
    Qp qp = RandomQp(rng, dim, 1 + static_cast<int>(rng() % 6));
    const QpSolution base = SolveQp(qp);
    ASSERT_EQ(base.status, QpStatus::kOptimal);
    Eigen::RowVectorXd a(dim);
    for (auto& v : a) v = gauss(rng);
    qp.AddRow(a, gauss(rng));
    const QpSolution more = SolveQp(qp);
    if (more.status == QpStatus::kInfeasible) continue;
    ASSERT_EQ(more.status, QpStatus::kOptimal);
    EXPECT_GE(more.objective, base.objective - 1e-9 * std::max(1.0, base.objective));
    ++compared;
  }
  EXPECT_GT(compared, 25);
}

TEST(SolveQpTest, StrongDuality) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Qp qp = RandomQp(rng, 1 + trial % 4, 1 + trial % 8);
    const QpSolution sol = SolveQp(qp);
    ASSERT_EQ(sol.status, QpStatus::kOptimal);
    EXPECT_TRUE((sol.dual.array() >= 0.0).all());
    EXPECT_NEAR(DualObjective(qp, sol.dual), sol.objective,
                1e-7 * std::max(1.0, sol.objective));
  }
}

TEST(SolveQpTest, Deterministic) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Qp qp = RandomQp(rng, 4, 8);
    const QpSolution a = SolveQp(qp), b = SolveQp(qp);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.primal, b.primal);
    EXPECT_EQ(a.dual, b.dual);
    EXPECT_EQ(a.objective, b.objective);
  }
}

TEST(SolveQpTest, RejectsNonFiniteData) {
  Qp qp = OneDim();
  qp.rhs(0) = std::nan("");
  EXPECT_THROW(SolveQp(qp), std::invalid_argument);
  qp = OneDim();
  qp.rows(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(SolveQp(qp), std::invalid_argument);
}

TEST(SolveQpTest, DetectsInfeasibility) {
  Qp qp(1);
  qp.AddRow(Eigen::RowVectorXd::Constant(1, 1.0), 1.0);
  qp.AddRow(Eigen::RowVectorXd::Constant(1, -1.0), -2.0);
  const QpSolution sol = SolveQp(qp);
  ASSERT_EQ(sol.status, QpStatus::kInfeasible);
  EXPECT_TRUE((sol.dual.array() >= 0.0).all());
  EXPECT_LE((qp.rows.transpose() * sol.dual).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(qp.rhs.dot(sol.dual), 0.0);

  Qp zero(2);
  zero.AddRow(Eigen::RowVector2d::Zero(), -0.5);
  EXPECT_EQ(SolveQp(zero).status, QpStatus::kInfeasible);
  Qp harmless(2);
  harmless.AddRow(Eigen::RowVector2d::Zero(), 0.5);
  EXPECT_EQ(SolveQp(harmless).status, QpStatus::kOptimal);

  // Infeasible box in three dimensions.
  Qp box(3);
  box.AddRows(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 1, 1));
  box.AddRow(Eigen::RowVector3d(-1, -1, -1), -3.5);
  EXPECT_EQ(SolveQp(box).status, QpStatus::kInfeasible);
}

TEST(SolveQpTest, MaxItersIsAStatus) {
  std::mt19937_64 rng(4);
  QpSettings settings;
  settings.max_iters = 1;
  settings.check_interval = 1;
  settings.polish = false;
  const QpSolution sol = SolveQp(RandomQp(rng, 4, 8), settings);
  EXPECT_NE(sol.status, QpStatus::kInfeasible);
}

TEST(WriteQpTextTest, OneLinePerRow) {
  std::ostringstream out;
  WriteQpText(out, SumAtLeastTwo());
  EXPECT_EQ(out.str(), "-1 -1 -2\n");
}

}  // namespace
}  // namespace resilience
