#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>
#include <cmath>
#include <string>
#include <utility>

#include "aims/errors.hpp"
#include "aims/manifold.hpp"

namespace aims {

struct ImuSample {
  double t = 0.0;
  Vec3 omega_m = Vec3::Zero();  // rad/s, body
  Vec3 a_m = Vec3::Zero();      // specific force, m/s^2, body
};

/// Continuous-time noise densities of the inertial model.
struct ImuNoiseParams {
  double sigma_g = 2.0e-3;   // rad/s/sqrt(Hz)
  double sigma_a = 2.0e-2;   // m/s^2/sqrt(Hz)
  double sigma_bg = 2.0e-5;  // rad/s^2/sqrt(Hz)
  double sigma_ba = 2.0e-4;  // m/s^3/sqrt(Hz)
  Vec3 gravity{0.0, 0.0, -9.81};

  bool operator==(const ImuNoiseParams&) const = default;
};

/// Linearized measurement: residual r = z - h(x), Jacobian taken with respect
/// to the StateTangent ordering, noise covariance Rn.
///
/// Tall bundles (one row per LiDAR correspondence) carry uncorrelated noise as
/// a diagonal vector instead of a dense m x m matrix; exactly one of `Rn` and
/// `Rn_diag` is populated.
struct MeasurementBundle {
  Eigen::MatrixXd H;
  Eigen::VectorXd r;
  Eigen::MatrixXd Rn;
  Eigen::VectorXd Rn_diag;

  Eigen::Index rows() const { return r.size(); }
  bool diagonal_noise() const { return Rn.size() == 0; }
  Eigen::MatrixXd noise() const {
    if (diagonal_noise()) return Rn_diag.asDiagonal();
    return Rn;
  }
  void scale_noise(double s) {
    if (diagonal_noise()) {
      Rn_diag *= s;
    } else {
      Rn *= s;
    }
  }
};

inline constexpr double kMaxImuGap = 0.1;

inline void symmetrize(ErrorCovariance& P) { P = 0.5 * (P + P.transpose()).eval(); }

namespace detail {

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

inline void check_finite(const NominalState& x, const ImuSample& imu, double dt) {
  if (!std::isfinite(dt) || !all_finite(imu.omega_m) || !all_finite(imu.a_m) || !all_finite(x.p) ||
      !all_finite(x.v) || !all_finite(x.bg) || !all_finite(x.ba) ||
      !x.R.quaternion().coeffs().allFinite()) {
    throw NonFinite("propagation input at t=" + std::to_string(x.t));
  }
}

}  // namespace detail

/// Nominal-state Euler step. Biases are constant over the step.
inline NominalState propagate_nominal(const NominalState& x, const ImuSample& imu, double dt,
                                      const Vec3& gravity) {
  NominalState out = x;
  const Vec3 w = imu.omega_m - x.bg;
  const Vec3 acc = x.R * (imu.a_m - x.ba) + gravity;
  out.R = x.R * exp_so3(w * dt);
  out.p = x.p + x.v * dt + 0.5 * acc * dt * dt;
  out.v = x.v + acc * dt;
  out.t = x.t + dt;
  return out;
}

/// Discrete error-state transition of propagate_nominal (right perturbation).
inline ErrorCovariance assemble_transition(const NominalState& x, const ImuSample& imu, double dt) {
  const Vec3 w = imu.omega_m - x.bg;
  const Vec3 a = imu.a_m - x.ba;
  const Mat3 R = x.R.matrix();
  const Vec3 phi = w * dt;
  const Mat3 Ra_hat = R * hat(a);

  ErrorCovariance F = ErrorCovariance::Identity();
  F.block<3, 3>(kTheta, kTheta) = exp_so3(phi).matrix().transpose();
  F.block<3, 3>(kTheta, kBg) = -right_jacobian(phi) * dt;

  F.block<3, 3>(kPos, kTheta) = -0.5 * Ra_hat * dt * dt;
  F.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
  F.block<3, 3>(kPos, kBa) = -0.5 * R * dt * dt;

  F.block<3, 3>(kVel, kTheta) = -Ra_hat * dt;
  F.block<3, 3>(kVel, kBa) = -R * dt;
  return F;
}

/// Discretized process noise. Position is driven only through velocity.
inline ErrorCovariance process_noise(const NominalState& x, double dt, const ImuNoiseParams& noise) {
  ErrorCovariance Q = ErrorCovariance::Zero();
  const Mat3 R = x.R.matrix();
  Q.block<3, 3>(kTheta, kTheta) = Mat3::Identity() * noise.sigma_g * noise.sigma_g * dt;
  Q.block<3, 3>(kVel, kVel) = R * (Mat3::Identity() * noise.sigma_a * noise.sigma_a * dt) * R.transpose();
  Q.block<3, 3>(kBg, kBg) = Mat3::Identity() * noise.sigma_bg * noise.sigma_bg * dt;
  Q.block<3, 3>(kBa, kBa) = Mat3::Identity() * noise.sigma_ba * noise.sigma_ba * dt;
  return Q;
}

struct Belief {
  NominalState x;
  ErrorCovariance P = ErrorCovariance::Identity();
};

inline Belief propagate(const NominalState& x, const ErrorCovariance& P, const ImuSample& imu, double dt,
                        const ImuNoiseParams& noise) {
  detail::check_finite(x, imu, dt);
  if (!(dt > 0.0)) throw GapTooLarge("non-positive dt " + std::to_string(dt) + " at t=" + std::to_string(x.t));
  if (dt > kMaxImuGap) throw GapTooLarge("dt " + std::to_string(dt) + " s at t=" + std::to_string(x.t));

  const ErrorCovariance F = assemble_transition(x, imu, dt);
  Belief out{propagate_nominal(x, imu, dt, noise.gravity), F * P * F.transpose() + process_noise(x, dt, noise)};
  symmetrize(out.P);
  return out;
}

namespace detail {

inline void check_bundle(const MeasurementBundle& m) {
  const auto rows = m.r.size();
  const bool noise_ok = m.diagonal_noise() ? m.Rn_diag.size() == rows
                                           : (m.Rn.rows() == rows && m.Rn.cols() == rows);
  if (rows == 0 || m.H.rows() != rows || m.H.cols() != kStateDim || !noise_ok) {
    throw SingularInnovation("inconsistent bundle dimensions");
  }
}

}  // namespace detail

/// Tall bundles with positive diagonal noise are solved in information form.
inline bool prefers_information_form(const MeasurementBundle& m) {
  return m.diagonal_noise() && m.rows() > kStateDim && (m.Rn_diag.array() > 0.0).all();
}

using KalmanGain = Eigen::Matrix<double, kStateDim, Eigen::Dynamic>;

/// Kalman gain K = P H^T S^-1, S = H P H^T + Rn.
///
/// Tall bundles with positive diagonal noise (LiDAR: thousands of rows) use the
/// algebraically identical 15x15 form K = (I + P H^T W H)^-1 P H^T W with
/// W = Rn^-1, which avoids factoring an m x m innovation matrix.
inline KalmanGain kalman_gain(const ErrorCovariance& P, const MeasurementBundle& m) {
  detail::check_bundle(m);
  if (prefers_information_form(m)) {
    const Eigen::VectorXd w = m.Rn_diag.cwiseInverse();
    const KalmanGain PHtW = P * (m.H.transpose() * w.asDiagonal());
    const ErrorCovariance A = ErrorCovariance::Identity() + PHtW * m.H;
    Eigen::PartialPivLU<ErrorCovariance> lu(A);
    // eigenvalues of A are >= 1 for PSD P, so anything else is a numerical fault
    if (!std::isfinite(lu.determinant()) || std::abs(lu.determinant()) < 1e-12) {
      throw SingularInnovation("information system is singular");
    }
    return lu.solve(PHtW);
  }
  Eigen::MatrixXd S = m.H * P * m.H.transpose() + m.noise();
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw SingularInnovation("Cholesky of innovation covariance failed");
  // K^T = S^-1 H P
  return llt.solve(m.H * P).transpose();
}

/// Joseph-form posterior covariance for a given gain.
inline ErrorCovariance joseph_update(const ErrorCovariance& P, const MeasurementBundle& m, const KalmanGain& K) {
  const ErrorCovariance IKH = ErrorCovariance::Identity() - K * m.H;
  const ErrorCovariance KRK = m.diagonal_noise() ? ErrorCovariance(K * m.Rn_diag.asDiagonal() * K.transpose())
                                                 : ErrorCovariance(K * m.Rn * K.transpose());
  ErrorCovariance out = IKH * P * IKH.transpose() + KRK;
  symmetrize(out);
  return out;
}

/// H^T W H and H^T W r for a diagonal-noise bundle, W = Rn^-1.
struct InformationTerms {
  ErrorCovariance G = ErrorCovariance::Zero();
  StateTangent g = StateTangent::Zero();
};

inline InformationTerms information_terms(const MeasurementBundle& m) {
  detail::check_bundle(m);
  const Eigen::MatrixXd HtW = m.H.transpose() * m.Rn_diag.cwiseInverse().asDiagonal();
  return {HtW * m.H, HtW * m.r};
}

/// Correction K (g + G delta) and the Joseph-form covariance, both evaluated
/// through 15x15 products only. `delta` is the linearization offset of an
/// iterated update (zero for a single step).
inline std::pair<StateTangent, ErrorCovariance> information_update(const ErrorCovariance& P,
                                                                   const InformationTerms& info,
                                                                   const StateTangent& delta = StateTangent::Zero()) {
  const ErrorCovariance A = ErrorCovariance::Identity() + P * info.G;
  Eigen::PartialPivLU<ErrorCovariance> lu(A);
  if (!std::isfinite(lu.determinant()) || std::abs(lu.determinant()) < 1e-12) {
    throw SingularInnovation("information system is singular");
  }
  const StateTangent dx = lu.solve(P * (info.g + info.G * delta));
  const ErrorCovariance KH = lu.solve(P * info.G);
  const ErrorCovariance IKH = ErrorCovariance::Identity() - KH;
  // K Rn K^T = A^-1 P G P A^-T when Rn = W^-1
  const ErrorCovariance KRK = KH * P * lu.solve(ErrorCovariance::Identity()).transpose();
  ErrorCovariance out = IKH * P * IKH.transpose() + KRK;
  symmetrize(out);
  return {dx, out};
}

inline Belief eskf_update(const NominalState& x, const ErrorCovariance& P, const MeasurementBundle& m) {
  if (prefers_information_form(m)) {
    const auto [dx, Pp] = information_update(P, information_terms(m));
    if (!dx.allFinite()) throw NonFinite("update correction at t=" + std::to_string(x.t));
    return {boxplus(x, dx), Pp};
  }
  const auto K = kalman_gain(P, m);
  const StateTangent dx = K * m.r;
  if (!dx.allFinite()) throw NonFinite("update correction at t=" + std::to_string(x.t));
  return {boxplus(x, dx), joseph_update(P, m, K)};
}

}  // namespace aims
