#include "resilience/polytope.h"

#include <random>

#include <gtest/gtest.h>

namespace resilience {
namespace {

Polytope UnitBox(int n) {
  return Polytope::Box("box", Eigen::VectorXd::Constant(n, -1.0),
                       Eigen::VectorXd::Constant(n, 1.0));
}

// S = [4,6] x [-2,0] x [2,4] written as G x <= H with G = [I; -I].
Polytope AdmireSet() {
  Eigen::MatrixXd G(6, 3);
  G << 1, 0, 0, 0, 1, 0, 0, 0, 1, -1, 0, 0, 0, -1, 0, 0, 0, -1;
  Eigen::VectorXd H(6);
  H << 6, 0, 4, -4, 2, -2;
  return Polytope("S", G, H);
}

TEST(PolytopeTest, Contains) {
  EXPECT_TRUE(UnitBox(2).Contains(Eigen::Vector2d(0, 0)));
  EXPECT_TRUE(AdmireSet().Contains(Eigen::Vector3d(5, -1, 3)));
  EXPECT_FALSE(AdmireSet().Contains(Eigen::Vector3d(0, 0, 0)));
  // Boundary within tolerance.
  EXPECT_TRUE(UnitBox(1).Contains(Eigen::VectorXd::Constant(1, 1.0 + 5e-10)));
  EXPECT_FALSE(UnitBox(1).Contains(Eigen::VectorXd::Constant(1, 1.0 + 1e-8)));
}

TEST(PolytopeTest, RejectsMalformed) {
  EXPECT_THROW(Polytope("p", Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(3)),
               std::invalid_argument);
  Eigen::MatrixXd H(2, 2);
  H << 1, 0, 0, 0;
  EXPECT_THROW(Polytope("p", H, Eigen::VectorXd::Ones(2)), std::invalid_argument);
  EXPECT_THROW(UnitBox(2).Contains(Eigen::Vector3d(0, 0, 0)),
               std::invalid_argument);
}

TEST(PolytopeTest, UnboundedHalfspaceAllowed) {
  Polytope half("half", -Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Constant(1, -2));
  EXPECT_TRUE(half.Contains(Eigen::VectorXd::Constant(1, 1e9)));
  EXPECT_FALSE(half.Contains(Eigen::VectorXd::Constant(1, 1.5)));
}

TEST(PolytopeTest, ContainsInvariantUnderPositiveRowScaling) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  const Polytope p = AdmireSet();
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd s(p.num_rows());
    for (auto& v : s) v = scale(rng);
    Polytope scaled("scaled", s.asDiagonal() * p.H(), s.cwiseProduct(p.h()));
    Eigen::Vector3d x(5 + unif(rng), -1 + unif(rng), 3 + unif(rng));
    // Stay away from the boundary where the absolute tolerance differs.
    if (std::abs(p.MaxViolation(x)) < 1e-6) continue;
    EXPECT_EQ(p.Contains(x), scaled.Contains(x));
  }
}

TEST(LiftPolytopeTest, Examples) {
  Polytope p("p", Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1));
  const Polytope one = LiftPolytope(p, 1);
  EXPECT_EQ(one.H(), p.H());
  EXPECT_EQ(one.h(), p.h());

  const Polytope three = LiftPolytope(p, 3);
  EXPECT_EQ(three.num_rows(), 3);
  EXPECT_TRUE(three.H().isApprox(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(three.h().isApprox(Eigen::VectorXd::Ones(3)));

  const Polytope box2 = LiftPolytope(UnitBox(2), 2);
  EXPECT_EQ(box2.num_rows(), 8);
  const Eigen::Vector4d x(0.5, 0.5, 2, 0);
  const Eigen::VectorXd residual = box2.H() * x - box2.h();
  EXPECT_EQ((residual.array() > kMembershipTolerance).count(), 1);
  EXPECT_THROW(LiftPolytope(p, 0), std::invalid_argument);
}

TEST(LiftPolytopeTest, MembershipMatchesBlockwise) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  const Polytope p = UnitBox(2);
  for (int horizon = 1; horizon <= 4; ++horizon) {
    const Polytope lifted = LiftPolytope(p, horizon);
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::VectorXd x(2 * horizon);
      for (auto& v : x) v = unif(rng);
      bool all = true;
      for (int k = 0; k < horizon; ++k) all = all && p.Contains(x.segment(2 * k, 2));
      EXPECT_EQ(lifted.Contains(x), all);
    }
  }
}

TEST(RowSupportTest, Examples) {
  Eigen::MatrixXd M1(1, 2);
  M1 << 1, 1;
  EXPECT_DOUBLE_EQ(RowSupport(M1, 0.5)(0), 1.0);

  Eigen::MatrixXd M2(2, 2);
  M2 << 1, -2, 0, 3;
  EXPECT_TRUE(RowSupport(M2, 1.0).isApprox(Eigen::Vector2d(3, 3)));
  EXPECT_TRUE(RowSupport(M2, 0.0).isZero());
  EXPECT_THROW(RowSupport(M2, -1.0), std::invalid_argument);
}

TEST(RowSupportTest, DominatesRandomDisturbancesAndIsAttained) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd M(4, 6);
  for (int i = 0; i < M.size(); ++i) M.data()[i] = gauss(rng);
  const double wbar = 0.3;
  const Eigen::VectorXd support = RowSupport(M, wbar);
  std::uniform_real_distribution<double> unif(-wbar, wbar);
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::VectorXd w(6);
    for (auto& v : w) v = unif(rng);
    EXPECT_TRUE(((M * w).array() <= support.array() + 1e-15).all());
  }
  for (int i = 0; i < M.rows(); ++i) {
    const Eigen::VectorXd w = wbar * M.row(i).transpose().cwiseSign();
    EXPECT_NEAR((M.row(i) * w)(0), support(i), 1e-14);
  }
}

TEST(MatrixNormSupportTest, UniformColumnSumBound) {
  Eigen::MatrixXd M(2, 2);
  M << 1, -2, 0, 3;
  // Column sums 1 and 5.
  EXPECT_TRUE(MatrixNormSupport(M, 0.5).isApprox(Eigen::Vector2d(2.5, 2.5)));
}

}  // namespace
}  // namespace resilience
