#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "aims/filter_core.hpp"
#include "aims/manifold.hpp"

namespace aims {

struct LegOdomSample {
  double t = 0.0;
  Vec3 v_body = Vec3::Zero();     // m/s
  std::optional<double> omega_z;  // rad/s, optional channel
};

struct LegIncrement {
  double dt_total = 0.0;
  Vec3 dp_body = Vec3::Zero();
  double valid_fraction = 0.0;
  std::optional<double> dyaw;  // integrated yaw rate, when the channel exists
};

struct LegParams {
  double sigma_leg = 0.05;  // m/sqrt(s)
  double min_valid_fraction = 0.5;
  double nominal_rate_hz = 200.0;
  bool use_yaw_rate = false;
  double sigma_leg_yaw = 0.02;  // rad/sqrt(s)

  bool operator==(const LegParams&) const = default;
};

/// Integrates body velocity over (t0, t1].
///
/// Velocity is the piecewise-linear interpolant of the samples; the window
/// edges borrow the neighbouring sample outside the window when it lies within
/// five nominal periods, otherwise the nearest value inside is held.
/// valid_fraction counts samples in (t0, t1] at one nominal period each.
inline LegIncrement integrate_leg(std::span<const LegOdomSample> samples, double t0, double t1,
                                  double nominal_period) {
  if (!(t1 > t0)) throw NoSamples("empty leg window");
  // first sample with t > t0, first sample with t > t1
  auto first = std::upper_bound(samples.begin(), samples.end(), t0,
                                [](double t, const LegOdomSample& s) { return t < s.t; });
  auto last = std::upper_bound(samples.begin(), samples.end(), t1,
                               [](double t, const LegOdomSample& s) { return t < s.t; });
  const auto n_in = std::distance(first, last);
  if (n_in <= 0) {
    throw NoSamples("no leg samples in (" + std::to_string(t0) + ", " + std::to_string(t1) + "]");
  }
  const double max_gap = 5.0 * nominal_period;

  std::vector<const LegOdomSample*> knots;
  knots.reserve(static_cast<std::size_t>(n_in) + 2);
  if (first != samples.begin() && t0 - std::prev(first)->t <= max_gap) knots.push_back(&*std::prev(first));
  for (auto it = first; it != last; ++it) knots.push_back(&*it);
  if (last != samples.end() && last->t - t1 <= max_gap) knots.push_back(&*last);

  auto value_at = [&](std::size_t i, double t) -> std::pair<Vec3, double> {
    // linear between knots i and i+1
    const auto& a = *knots[i];
    const auto& b = *knots[i + 1];
    const double s = (t - a.t) / (b.t - a.t);
    const double wa = a.omega_z.value_or(0.0);
    const double wb = b.omega_z.value_or(0.0);
    return {a.v_body + s * (b.v_body - a.v_body), wa + s * (wb - wa)};
  };

  LegIncrement inc;
  inc.dt_total = t1 - t0;
  double yaw = 0.0;
  bool has_yaw = true;
  for (const auto* k : knots) has_yaw = has_yaw && k->omega_z.has_value();

  // held values before the first and after the last knot
  const auto& k0 = *knots.front();
  const auto& kn = *knots.back();
  if (k0.t > t0) {
    const double h = std::min(k0.t, t1) - t0;
    inc.dp_body += k0.v_body * h;
    yaw += k0.omega_z.value_or(0.0) * h;
  }
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = std::max(knots[i]->t, t0);
    const double b = std::min(knots[i + 1]->t, t1);
    if (!(b > a)) continue;
    const auto [va, wa] = value_at(i, a);
    const auto [vb, wb] = value_at(i, b);
    inc.dp_body += 0.5 * (va + vb) * (b - a);
    yaw += 0.5 * (wa + wb) * (b - a);
  }
  if (kn.t < t1) {
    const double h = t1 - std::max(kn.t, t0);
    inc.dp_body += kn.v_body * h;
    yaw += kn.omega_z.value_or(0.0) * h;
  }
  if (has_yaw) inc.dyaw = yaw;
  inc.valid_fraction = std::clamp(static_cast<double>(n_in) * nominal_period / inc.dt_total, 0.0, 1.0);
  return inc;
}

/// Relative-translation constraint between the previous posterior (a fixed
/// anchor) and the current state, expressed in the previous body frame.
inline MeasurementBundle assemble_leg_bundle(const LegIncrement& inc, const NominalState& prev,
                                             const NominalState& x, const LegParams& params) {
  if (inc.valid_fraction < params.min_valid_fraction) {
    throw InsufficientCoverage("leg window coverage " + std::to_string(inc.valid_fraction) + " at t=" +
                               std::to_string(x.t));
  }
  if (!(prev.t < x.t)) throw DataError("leg anchor is not older than the current state");
  const bool yaw_row = params.use_yaw_rate && inc.dyaw.has_value();
  const Eigen::Index m = yaw_row ? 4 : 3;
  const Mat3 Rprev_t = prev.R.matrix().transpose();
  const double coverage = std::max(inc.valid_fraction, 1e-9);

  MeasurementBundle b;
  b.H = Eigen::MatrixXd::Zero(m, kStateDim);
  b.r.resize(m);
  b.Rn = Eigen::MatrixXd::Zero(m, m);
  b.r.head<3>() = inc.dp_body - Rprev_t * (x.p - prev.p);
  // H is the measurement Jacobian d h / d dx; the residual moves as -H dx.
  b.H.block<3, 3>(0, kPos) = Rprev_t;
  b.Rn.topLeftCorner<3, 3>() =
      Mat3::Identity() * params.sigma_leg * params.sigma_leg * inc.dt_total / coverage;
  if (yaw_row) {
    // Log(Rprev^T R Exp(d)) ~ Log(dR) + Jr^-1(Log(dR)) d
    const Vec3 dphi = log_so3(prev.R.inverse() * x.R);
    b.r(3) = *inc.dyaw - dphi.z();
    b.H.block<1, 3>(3, kTheta) = right_jacobian_inv(dphi).row(2);
    b.Rn(3, 3) = params.sigma_leg_yaw * params.sigma_leg_yaw * inc.dt_total / coverage;
  }
  return b;
}

}  // namespace aims
