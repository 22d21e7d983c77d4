#include "resilience/lti_model.h"

#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "test_systems.h"

namespace resilience {
namespace {

using testing::Admire;
using testing::MobileRobot;
using testing::ScalarIntegrator;

Eigen::MatrixXd RandomMatrix(std::mt19937_64& rng, int rows, int cols,
                             double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < M.size(); ++i) M.data()[i] = gauss(rng);
  return M;
}

TEST(BuildLiftTest, ScalarTwoSteps) {
  const HorizonLift lift = BuildLift(ScalarIntegrator(0.0), 2);
  EXPECT_TRUE(lift.free_response.isApprox(Eigen::Vector2d(1, 1)));
  Eigen::Matrix2d expected;
  expected << 1, 0, 1, 1;
  EXPECT_TRUE(lift.Gu.isApprox(expected));
  EXPECT_TRUE(lift.Gw.isApprox(expected));
}

TEST(BuildLiftTest, SingleStep) {
  const LtiSystem sys = Admire(0.1);
  const HorizonLift lift = BuildLift(sys, 1);
  EXPECT_TRUE(lift.Gu.isApprox(sys.Bu()));
  EXPECT_TRUE(lift.Gw.isApprox(sys.Bw()));
  EXPECT_TRUE(lift.free_response.isApprox(sys.A()));
  EXPECT_THROW(BuildLift(sys, 0), std::invalid_argument);
}

TEST(BuildLiftTest, AdmireBottomLeftBlockMatchesSimulation) {
  const LtiSystem sys = Admire(0.1);
  const HorizonLift lift = BuildLift(sys, 5);
  // Column j of A^4 Bu is x_5 after an impulse on input j at t = 0.
  Eigen::Matrix3d simulated;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(3, 5);
    u(j, 0) = 1.0;
    const Eigen::MatrixXd traj = Simulate(sys, Eigen::Vector3d::Zero(), u,
                                          Eigen::MatrixXd::Zero(1, 5));
    simulated.col(j) = traj.col(5);
  }
  EXPECT_TRUE(lift.Gu.block(12, 0, 3, 3).isApprox(simulated, 1e-12));
  const Eigen::Matrix3d A4 = sys.A() * sys.A() * sys.A() * sys.A();
  EXPECT_TRUE(lift.Gu.block(12, 0, 3, 3).isApprox(A4 * sys.Bu(), 1e-12));
}

TEST(BuildLiftTest, ToeplitzStructure) {
  const LtiSystem sys = Admire(0.1);
  const HorizonLift lift = BuildLift(sys, 4);
  for (int k = 0; k < 4; ++k) {
    for (int j = 0; j < 4; ++j) {
      const Eigen::MatrixXd block = lift.Gu.block(3 * k, 3 * j, 3, 3);
      if (j > k) {
        EXPECT_TRUE(block.isZero());
      } else {
        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(3, 3);
        for (int i = 0; i < k - j; ++i) power = sys.A() * power;
        EXPECT_TRUE(block.isApprox(power * sys.Bu(), 1e-12));
      }
    }
  }
}

TEST(BuildLiftTest, PrefixProperty) {
  const LtiSystem sys = Admire(0.1);
  for (int N = 2; N <= 7; ++N) {
    const HorizonLift big = BuildLift(sys, N);
    const HorizonLift small = BuildLift(sys, N - 1);
    const int rows = 3 * (N - 1);
    EXPECT_TRUE(big.Gu.topLeftCorner(rows, 3 * (N - 1)).isApprox(small.Gu));
    EXPECT_TRUE(big.Gw.topLeftCorner(rows, N - 1).isApprox(small.Gw));
    EXPECT_TRUE(big.free_response.topRows(rows).isApprox(small.free_response));
    EXPECT_TRUE(big.Gu.topRightCorner(rows, 3).isZero());
  }
}

TEST(LiftCacheTest, ReturnsSharedInstanceAcrossCopies) {
  const LtiSystem sys = Admire(0.1);
  const auto a = sys.Lift(6);
  const auto b = sys.WithWbar(0.3).Lift(6);
  EXPECT_EQ(a.get(), b.get());
}

TEST(LiftCacheTest, ConcurrentAccess) {
  const LtiSystem sys = Admire(0.1);
  std::vector<std::jthread> threads;
  std::vector<const HorizonLift*> seen(8);
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] { seen[i] = sys.Lift(5).get(); });
  }
  threads.clear();
  for (auto* p : seen) EXPECT_EQ(p, seen[0]);
}

TEST(SimulateTest, Examples) {
  const LtiSystem identity(Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity(),
                           Eigen::Matrix2d::Identity(),
                           Polytope::Box("U", Eigen::Vector2d::Constant(-1),
                                         Eigen::Vector2d::Constant(1)),
                           0.0);
  const Eigen::MatrixXd still = Simulate(identity, Eigen::Vector2d(3, -4),
                                         Eigen::MatrixXd::Zero(2, 4),
                                         Eigen::MatrixXd::Zero(2, 4));
  for (int t = 0; t <= 4; ++t) EXPECT_TRUE(still.col(t).isApprox(Eigen::Vector2d(3, -4)));

  const Eigen::MatrixXd scalar =
      Simulate(ScalarIntegrator(0.0), Eigen::VectorXd::Zero(1),
               Eigen::MatrixXd::Ones(1, 2), Eigen::MatrixXd::Zero(1, 2));
  EXPECT_TRUE(scalar.isApprox(Eigen::RowVector3d(0, 1, 2)));

  const Eigen::MatrixXd robot =
      Simulate(MobileRobot(0.01), Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 0),
               Eigen::Vector2d(0.01, -0.01));
  EXPECT_NEAR(robot(0, 1), 1.01, 1e-15);
  EXPECT_NEAR(robot(1, 1), -0.01, 1e-15);
}

TEST(SimulateTest, DimensionMismatch) {
  const LtiSystem sys = MobileRobot(0.01);
  EXPECT_THROW(Simulate(sys, Eigen::Vector3d::Zero(), Eigen::MatrixXd::Zero(2, 1),
                        Eigen::MatrixXd::Zero(2, 1)),
               std::invalid_argument);
  EXPECT_THROW(Simulate(sys, Eigen::Vector2d::Zero(), Eigen::MatrixXd::Zero(2, 2),
                        Eigen::MatrixXd::Zero(2, 1)),
               std::invalid_argument);
}

TEST(SimulateTest, MatchesStackedPrediction) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dim(rng), m = dim(rng), p = dim(rng), N = dim(rng) + 2;
    const LtiSystem sys(RandomMatrix(rng, n, n, 0.5), RandomMatrix(rng, n, m),
                        RandomMatrix(rng, n, p),
                        Polytope::Box("U", Eigen::VectorXd::Constant(m, -1),
                                      Eigen::VectorXd::Constant(m, 1)),
                        0.1);
    const Eigen::VectorXd x0 = RandomMatrix(rng, n, 1);
    const Eigen::MatrixXd u = RandomMatrix(rng, m, N);
    const Eigen::MatrixXd w = RandomMatrix(rng, p, N);
    const Eigen::MatrixXd traj = Simulate(sys, x0, u, w);
    const HorizonLift lift = BuildLift(sys, N);
    const Eigen::VectorXd stacked =
        lift.free_response * x0 +
        lift.Gu * Eigen::Map<const Eigen::VectorXd>(u.data(), u.size()) +
        lift.Gw * Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    const Eigen::MatrixXd tail = traj.rightCols(N);
    const Eigen::VectorXd simulated =
        Eigen::Map<const Eigen::VectorXd>(tail.data(), tail.size());
    EXPECT_LE((stacked - simulated).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ControllabilityTest, Examples) {
  const auto box = Polytope::Box("U", Eigen::VectorXd::Constant(1, -1),
                                 Eigen::VectorXd::Constant(1, 1));
  EXPECT_TRUE(CheckControllable(MobileRobot(0.0)));

  Eigen::Matrix2d A;
  A << 1, 1, 0, 1;
  EXPECT_TRUE(CheckControllable(
      LtiSystem(A, Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 0), box, 0.0)));

  const Eigen::Matrix2d D = Eigen::Vector2d(1, 2).asDiagonal();
  EXPECT_FALSE(CheckControllable(
      LtiSystem(D, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0), box, 0.0)));
  EXPECT_TRUE(CheckControllable(Admire(0.1)));
}

TEST(LtiSystemTest, RejectsInconsistentData) {
  const auto box = Polytope::Box("U", Eigen::VectorXd::Constant(1, -1),
                                 Eigen::VectorXd::Constant(1, 1));
  EXPECT_THROW(LtiSystem(Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Ones(2, 1),
                         Eigen::MatrixXd::Ones(2, 1), box, 0.0),
               std::invalid_argument);
  EXPECT_THROW(LtiSystem(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(3, 1),
                         Eigen::MatrixXd::Ones(2, 1), box, 0.0),
               std::invalid_argument);
  EXPECT_THROW(LtiSystem(Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
                         Eigen::MatrixXd::Ones(1, 1), box, -0.1),
               std::invalid_argument);
}

}  // namespace
}  // namespace resilience
