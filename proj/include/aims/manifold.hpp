#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>

namespace aims {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Error-state dimension and block offsets. Every 15-vector and 15x15 matrix
/// in the library uses this ordering: [dtheta, dp, dv, dbg, dba].
inline constexpr int kStateDim = 15;
inline constexpr int kTheta = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kBg = 9;
inline constexpr int kBa = 12;

using StateTangent = Eigen::Matrix<double, kStateDim, 1>;
using ErrorCovariance = Eigen::Matrix<double, kStateDim, kStateDim>;

inline constexpr double kSmallAngle = 1e-8;

inline Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

inline Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

/// Element of SO(3), stored as a unit quaternion (renormalized on every
/// composition). Matrix and quaternion views are both available.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  explicit Rotation(const Mat3& m) : q_(Eigen::Quaterniond(m).normalized()) {}

  static Rotation identity() { return {}; }
  /// From serialized (qw, qx, qy, qz).
  static Rotation from_wxyz(double w, double x, double y, double z) {
    return Rotation(Eigen::Quaterniond(w, x, y, z));
  }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  /// Yaw of the body x axis in the world xy plane.
  double yaw() const {
    const Vec3 x = q_ * Vec3::UnitX();
    return std::atan2(x.y(), x.x());
  }

 private:
  Eigen::Quaterniond q_;
};

inline Rotation exp_so3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  if (theta < kSmallAngle) {
    // second-order series of cos(theta/2), sin(theta/2)/theta
    const double w = 1.0 - theta2 / 8.0;
    const double s = 0.5 - theta2 / 48.0;
    return Rotation(Eigen::Quaterniond(w, s * omega.x(), s * omega.y(), s * omega.z()));
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / theta;
  return Rotation(Eigen::Quaterniond(std::cos(half), s * omega.x(), s * omega.y(), s * omega.z()));
}

/// Minimal-angle logarithm, |result| <= pi. Works on the quaternion with
/// atan2, which stays well conditioned at angles close to pi where the
/// matrix trace formula loses the axis.
inline Vec3 log_so3(const Rotation& r) {
  Eigen::Quaterniond q = r.quaternion();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 xyz = q.vec();
  const double n = xyz.norm();
  if (n < kSmallAngle) {
    // theta ~ 2n, theta/n ~ 2/w (1 + n^2/(3 w^2))
    const double w = q.w();
    return xyz * (2.0 / w) * (1.0 - n * n / (3.0 * w * w));
  }
  const double theta = 2.0 * std::atan2(n, q.w());
  return xyz * (theta / n);
}

/// Right Jacobian of SO(3): Exp(phi + d) ~ Exp(phi) Exp(Jr(phi) d).
inline Mat3 right_jacobian(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 w = hat(phi);
  if (theta2 < 1e-10) return Mat3::Identity() - 0.5 * w + w * w / 6.0;
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - (1.0 - std::cos(theta)) / theta2 * w +
         (theta - std::sin(theta)) / (theta2 * theta) * w * w;
}

inline Mat3 right_jacobian_inv(const Vec3& phi) {
  const double theta2 = phi.squaredNorm();
  const Mat3 w = hat(phi);
  if (theta2 < 1e-10) return Mat3::Identity() + 0.5 * w + w * w / 12.0;
  const double theta = std::sqrt(theta2);
  const double c = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * w + c * w * w;
}

/// Robot state: body-to-world orientation, world position and velocity,
/// gyroscope and accelerometer biases, timestamp.
struct NominalState {
  Rotation R;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  double t = 0.0;
};

/// Right-perturbation retraction.
inline NominalState boxplus(const NominalState& x, const StateTangent& dx) {
  NominalState out = x;
  if (!dx.segment<3>(kTheta).isZero(0.0)) out.R = x.R * exp_so3(dx.segment<3>(kTheta));
  out.p += dx.segment<3>(kPos);
  out.v += dx.segment<3>(kVel);
  out.bg += dx.segment<3>(kBg);
  out.ba += dx.segment<3>(kBa);
  return out;
}

/// x1 (-) x2, the inverse of boxplus: boxplus(x2, boxminus(x1, x2)) == x1.
inline StateTangent boxminus(const NominalState& x1, const NominalState& x2) {
  StateTangent d;
  d.segment<3>(kTheta) = log_so3(x2.R.inverse() * x1.R);
  d.segment<3>(kPos) = x1.p - x2.p;
  d.segment<3>(kVel) = x1.v - x2.v;
  d.segment<3>(kBg) = x1.bg - x2.bg;
  d.segment<3>(kBa) = x1.ba - x2.ba;
  return d;
}

}  // namespace aims
