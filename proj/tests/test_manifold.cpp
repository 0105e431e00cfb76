#include <gtest/gtest.h>

#include <numbers>

#include "aims/manifold.hpp"
#include "test_support.hpp"

namespace aims {
namespace {

using testing::Gen;

TEST(ExpSo3, ZeroIsIdentity) {
  EXPECT_EQ(exp_so3(Vec3::Zero()).matrix(), Mat3::Identity());
}

TEST(ExpSo3, HalfTurnAboutX) {
  const Rotation r = exp_so3(Vec3(std::numbers::pi, 0.0, 0.0));
  const Vec3 y = r * Vec3::UnitY();
  EXPECT_NEAR(y.x(), 0.0, 1e-15);
  EXPECT_NEAR(y.y(), -1.0, 1e-15);
  EXPECT_NEAR(y.z(), 0.0, 1e-15);
}

TEST(ExpSo3, SmallAngleSeriesMatchesClosedForm) {
  const Vec3 w(3e-9, -2e-9, 1e-9);
  const Eigen::Quaterniond q(Eigen::AngleAxisd(w.norm(), w.normalized()));
  EXPECT_LT((exp_so3(w).quaternion().coeffs() - q.coeffs()).norm(), 1e-16);
}

TEST(ExpSo3, OutputIsUnitQuaternion) {
  Gen g(11);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = exp_so3(g.vec(3.0));
    EXPECT_NEAR(r.quaternion().norm(), 1.0, 1e-12);
    EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
    EXPECT_LT((r.matrix() * r.matrix().transpose() - Mat3::Identity()).norm(), 1e-12);
  }
}

TEST(LogSo3, IdentityIsZero) { EXPECT_EQ(log_so3(Rotation::identity()), Vec3::Zero()); }

TEST(LogSo3, QuarterTurnAboutZ) {
  const Rotation r(Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitZ())));
  const Vec3 w = log_so3(r);
  EXPECT_NEAR(w.x(), 0.0, 1e-15);
  EXPECT_NEAR(w.y(), 0.0, 1e-15);
  EXPECT_NEAR(w.z(), std::numbers::pi / 2.0, 1e-15);
}

TEST(LogSo3, RoundTripNearPi) {
  Gen g(12);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = exp_so3(g.unit() * 0.999 * std::numbers::pi);
    EXPECT_LT((exp_so3(log_so3(r)).matrix() - r.matrix()).norm(), 1e-7);
  }
}

TEST(ExpLogProperty, RoundTripOnOpenBall) {
  Gen g(13);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 w = g.rotation_vector();
    worst = std::max(worst, (log_so3(exp_so3(w)) - w).norm());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(RightJacobian, MatchesFiniteDifference) {
  Gen g(14);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = g.rotation_vector(2.5);
    const Mat3 J = right_jacobian(phi);
    const double eps = 1e-6;
    for (int k = 0; k < 3; ++k) {
      const Vec3 d = Vec3::Unit(k) * eps;
      const Vec3 col = (log_so3(exp_so3(phi).inverse() * exp_so3(phi + d)) -
                        log_so3(exp_so3(phi).inverse() * exp_so3(phi - d))) /
                       (2.0 * eps);
      EXPECT_LT((col - J.col(k)).norm(), 1e-6);
    }
    EXPECT_LT((J * right_jacobian_inv(phi) - Mat3::Identity()).norm(), 1e-9);
  }
}

TEST(Hat, VeeInverse) {
  const Vec3 w(1.0, -2.0, 3.0);
  EXPECT_EQ(vee(hat(w)), w);
  EXPECT_EQ(hat(w) * Vec3(4.0, 5.0, 6.0), w.cross(Vec3(4.0, 5.0, 6.0)));
}

TEST(Boxplus, ZeroIsIdentity) {
  Gen g(15);
  const NominalState x = g.state();
  const NominalState y = boxplus(x, StateTangent::Zero());
  EXPECT_EQ(y.R.quaternion().coeffs(), x.R.quaternion().coeffs());
  EXPECT_EQ(y.p, x.p);
  EXPECT_EQ(y.v, x.v);
  EXPECT_EQ(y.bg, x.bg);
  EXPECT_EQ(y.ba, x.ba);
}

TEST(Boxplus, YawQuarterTurnFromIdentity) {
  StateTangent d = StateTangent::Zero();
  d.segment<3>(kTheta) = Vec3(0.0, 0.0, std::numbers::pi / 2.0);
  const NominalState y = boxplus(NominalState{}, d);
  EXPECT_NEAR(y.R.yaw(), std::numbers::pi / 2.0, 1e-15);
  EXPECT_EQ(y.p, Vec3::Zero());
}

TEST(Boxminus, SelfIsZero) {
  Gen g(16);
  const NominalState x = g.state();
  EXPECT_EQ(boxminus(x, x), StateTangent::Zero());
}

TEST(Boxminus, PositionOffsetOnly) {
  NominalState a;
  NominalState b;
  a.p = Vec3(1.0, 2.0, 3.0);
  StateTangent expected = StateTangent::Zero();
  expected.segment<3>(kPos) = Vec3(1.0, 2.0, 3.0);
  EXPECT_EQ(boxminus(a, b), expected);
}

TEST(RetractionProperty, BoxminusUndoesBoxplus) {
  Gen g(17);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const NominalState x = g.state();
    StateTangent d = g.tangent(1.0);
    d.segment<3>(kTheta) = g.rotation_vector();
    worst = std::max(worst, (boxminus(boxplus(x, d), x) - d).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(RetractionProperty, BoxplusUndoesBoxminus) {
  Gen g(18);
  for (int i = 0; i < 2000; ++i) {
    const NominalState x1 = g.state();
    const NominalState x2 = g.state();
    const NominalState y = boxplus(x2, boxminus(x1, x2));
    const double qd = std::min((y.R.quaternion().coeffs() - x1.R.quaternion().coeffs()).norm(),
                               (y.R.quaternion().coeffs() + x1.R.quaternion().coeffs()).norm());
    EXPECT_LT(qd, 1e-9);
    EXPECT_LT((y.p - x1.p).norm(), 1e-9);
    EXPECT_LT((y.v - x1.v).norm(), 1e-9);
    EXPECT_LT((y.bg - x1.bg).norm(), 1e-9);
    EXPECT_LT((y.ba - x1.ba).norm(), 1e-9);
  }
}

TEST(StateLayout, CanonicalBlockOrdering) {
  EXPECT_EQ(kStateDim, 15);
  StateTangent d;
  for (int i = 0; i < kStateDim; ++i) d(i) = i + 1;
  d.segment<3>(kTheta) *= 0.1;
  const NominalState y = boxplus(NominalState{}, d);
  EXPECT_EQ(y.p, Vec3(4, 5, 6));
  EXPECT_EQ(y.v, Vec3(7, 8, 9));
  EXPECT_EQ(y.bg, Vec3(10, 11, 12));
  EXPECT_EQ(y.ba, Vec3(13, 14, 15));
  EXPECT_LT((log_so3(y.R) - Vec3(0.1, 0.2, 0.3)).norm(), 1e-12);
  EXPECT_EQ(boxminus(y, NominalState{}).tail<12>(), d.tail<12>());
}

}  // namespace
}  // namespace aims
