#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "aims/degeneracy.hpp"
#include "aims/errors.hpp"
#include "aims/filter_core.hpp"
#include "aims/leg_pipeline.hpp"
#include "aims/lidar_pipeline.hpp"
#include "aims/local_map.hpp"

namespace aims {

struct AdaptiveParams {
  double eta = 2.0;        // sensitivity of the LiDAR reliability to degeneracy
  double gamma_min = 0.2;  // floor of the leg reliability
  double alpha = 0.8;      // smoothing of the degeneracy index, [0, 1)
  bool enabled = true;     // false reproduces the fixed-weight ablation

  bool operator==(const AdaptiveParams&) const = default;
};

struct ReliabilityFactors {
  double gamma_lidar = 1.0;
  double gamma_leg = 1.0;
};

inline double lidar_reliability(double d_smooth, const AdaptiveParams& params) {
  return std::exp(-params.eta * d_smooth);
}

inline double leg_reliability(double d_smooth, const AdaptiveParams& params) {
  return params.gamma_min + (1.0 - params.gamma_min) * (1.0 - d_smooth);
}

/// Rn / gamma.
inline Eigen::MatrixXd scale_covariance(const Eigen::MatrixXd& Rn, double gamma) { return Rn / gamma; }

inline double smooth_index(double d_prev_smooth, double d_k, const AdaptiveParams& params) {
  return params.alpha * d_prev_smooth + (1.0 - params.alpha) * d_k;
}

inline void validate(const AdaptiveParams& p) {
  if (!(p.eta > 0.0)) throw ValidationError("adaptive.eta must be > 0");
  if (!(p.gamma_min > 0.0 && p.gamma_min <= 1.0)) throw ValidationError("adaptive.gamma_min must be in (0, 1]");
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) throw ValidationError("adaptive.alpha must be in [0, 1)");
}

struct InitialUncertainty {
  double sigma_theta = 1e-3;  // rad
  double sigma_p = 1e-3;      // m
  double sigma_v = 1e-2;      // m/s
  double sigma_bg = 1e-3;     // rad/s
  double sigma_ba = 1e-2;     // m/s^2

  bool operator==(const InitialUncertainty&) const = default;

  ErrorCovariance covariance() const {
    StateTangent d;
    d << Vec3::Constant(sigma_theta * sigma_theta), Vec3::Constant(sigma_p * sigma_p),
        Vec3::Constant(sigma_v * sigma_v), Vec3::Constant(sigma_bg * sigma_bg), Vec3::Constant(sigma_ba * sigma_ba);
    return d.asDiagonal();
  }
};

struct FusionConfig {
  ImuNoiseParams imu;
  LidarParams lidar;
  LidarExtrinsics extrinsics;
  LegParams leg;
  DegeneracyParams degeneracy;
  AdaptiveParams adaptive;
  InitialUncertainty initial;
  bool use_lidar = true;
  bool use_leg = true;
};

/// Everything recorded for one LiDAR epoch.
struct EpochRecord {
  double t = 0.0;
  NominalState x;
  ErrorCovariance P;
  std::size_t n_corr = 0;
  ResidualStats stats;
  DegeneracyIndices indices;
  ReliabilityFactors gammas;
  bool lidar_skipped = true;
  bool leg_skipped = true;
};

/// Sequential LiDAR-IMU-leg estimator. One `step` per LiDAR scan.
class FusionEngine {
 public:
  FusionEngine(FusionConfig cfg, const NominalState& x0)
      : cfg_(std::move(cfg)), map_(make_local_map(cfg_.lidar)) {
    validate(cfg_.degeneracy);
    validate(cfg_.adaptive);
    belief_.x = x0;
    belief_.P = cfg_.initial.covariance();
  }

  const Belief& belief() const { return belief_; }
  const LocalMap& map() const { return map_; }
  const FusionConfig& config() const { return cfg_; }

  /// First epoch: no propagation, the scan seeds the map.
  EpochRecord bootstrap(const LidarScan& scan, std::span<const ImuSample> imu) {
    for (const auto& s : imu) {
      if (s.t <= belief_.x.t) held_imu_ = s;
    }
    belief_.x.t = scan.t;
    EpochRecord rec;
    rec.t = scan.t;
    if (cfg_.use_lidar) integrate_scan(map_, scan, belief_.x, cfg_.extrinsics, cfg_.lidar);
    finish(rec);
    started_ = true;
    return rec;
  }

  /// One fusion cycle at the scan time. `imu` holds the samples in
  /// (t_prev, t_scan]; `leg` may be the whole leg stream.
  EpochRecord step(const LidarScan& scan, std::span<const ImuSample> imu, std::span<const LegOdomSample> leg) {
    if (!started_) return bootstrap(scan, imu);
    if (!(scan.t > prev_.t)) throw DataError("scan timestamps must increase (t=" + std::to_string(scan.t) + ")");

    predict_to(scan.t, imu);
    const Belief prior = belief_;

    EpochRecord rec;
    rec.t = scan.t;
    std::optional<std::vector<PlaneCorrespondence>> corrs;
    std::optional<MeasurementBundle> lidar_bundle;

    // degeneracy assessment against the predicted prior
    bool evaluated = false;
    double o = 0.0;
    double c = c_prev_;
    if (cfg_.use_lidar && !map_.empty()) {
      corrs = find_correspondences(scan, map_, prior.x, cfg_.extrinsics, cfg_.lidar);
      rec.n_corr = corrs->size();
      std::vector<double> r;
      r.reserve(corrs->size());
      for (const auto& cr : *corrs) r.push_back(cr.r_i);
      rec.stats = residual_stats(r);
      if (corrs->size() >= cfg_.degeneracy.min_correspondences) {
        lidar_bundle = assemble_lidar_bundle(*corrs, prior.x, cfg_.extrinsics, cfg_.lidar.sigma_lidar);
        o = observability_metric(rec.stats, cfg_.degeneracy);
        try {
          const NominalState provisional = provisional_lidar_update(prior.x, prior.P, *lidar_bundle);
          c = std::min(consistency_metric(boxminus(provisional, prior.x), prior.P), cfg_.degeneracy.c_il_cap);
        } catch (const SingularInnovation&) {
          lidar_bundle.reset();
        } catch (const IllConditioned&) {
          // keep the previous consistency value
        }
      }
      evaluated = true;
    } else if (!cfg_.use_lidar) {
      evaluated = true;
    }

    if (evaluated) {
      const double d = degeneracy_index(o, c, cfg_.degeneracy);
      d_smooth_ = d_smooth_ ? smooth_index(*d_smooth_, d, cfg_.adaptive) : d;
      c_prev_ = c;
      rec.indices = {o, c, d, *d_smooth_};
    }
    if (cfg_.adaptive.enabled && d_smooth_) {
      rec.gammas = {lidar_reliability(*d_smooth_, cfg_.adaptive), leg_reliability(*d_smooth_, cfg_.adaptive)};
    }

    // committed LiDAR update, restarted from the predicted prior
    if (lidar_bundle) {
      try {
        belief_ = lidar_update(prior, *corrs, rec.gammas.gamma_lidar);
        rec.lidar_skipped = false;
      } catch (const SingularInnovation&) {
        belief_ = prior;
      }
    }

    if (cfg_.use_leg) rec.leg_skipped = !leg_update(leg, rec.gammas.gamma_leg);

    if (cfg_.use_lidar) integrate_scan(map_, scan, belief_.x, cfg_.extrinsics, cfg_.lidar);
    finish(rec);
    return rec;
  }

 private:
  void predict_to(double t, std::span<const ImuSample> imu) {
    for (const auto& s : imu) {
      if (s.t > t) break;
      if (s.t > belief_.x.t) {
        // midpoint of the interval's end samples
        ImuSample u = s;
        if (held_imu_) {
          u.omega_m = 0.5 * (held_imu_->omega_m + s.omega_m);
          u.a_m = 0.5 * (held_imu_->a_m + s.a_m);
        }
        belief_ = propagate(belief_.x, belief_.P, u, s.t - belief_.x.t, cfg_.imu);
        belief_.x.t = s.t;
      }
      held_imu_ = s;
    }
    if (t > belief_.x.t) {
      if (!held_imu_) throw DataError("no IMU data before t=" + std::to_string(t));
      belief_ = propagate(belief_.x, belief_.P, *held_imu_, t - belief_.x.t, cfg_.imu);
    }
    belief_.x.t = t;
  }

  /// Iterated update (iterations = 1 is the plain ESKF update).
  Belief lidar_update(const Belief& prior, const std::vector<PlaneCorrespondence>& corrs, double gamma) const {
    NominalState xi = prior.x;
    ErrorCovariance P = prior.P;
    const int iters = std::max(1, cfg_.lidar.iterations);
    for (int it = 0; it < iters; ++it) {
      MeasurementBundle b = assemble_lidar_bundle(corrs, xi, cfg_.extrinsics, cfg_.lidar.sigma_lidar);
      b.scale_noise(1.0 / gamma);
      StateTangent dx;
      if (prefers_information_form(b)) {
        std::tie(dx, P) = information_update(prior.P, information_terms(b), boxminus(xi, prior.x));
      } else {
        const KalmanGain K = kalman_gain(prior.P, b);
        dx = K * (b.r + b.H * boxminus(xi, prior.x));
        P = joseph_update(prior.P, b, K);
      }
      if (!dx.allFinite()) throw NonFinite("LiDAR correction at t=" + std::to_string(prior.x.t));
      xi = boxplus(prior.x, dx);
    }
    return {xi, P};
  }

  bool leg_update(std::span<const LegOdomSample> leg, double gamma) {
    const double t0 = prev_.t;
    const double t1 = belief_.x.t;
    const double period = 1.0 / cfg_.leg.nominal_rate_hz;
    std::optional<LegIncrement> inc;
    try {
      inc = integrate_leg(leg, t0, t1, period);
      if (!cfg_.adaptive.enabled) inc->valid_fraction = 1.0;
    } catch (const NoSamples&) {
      if (cfg_.adaptive.enabled || !last_leg_velocity_) return false;
      // fixed-weight mode has no packet-loss handling: extrapolate
      inc = LegIncrement{t1 - t0, *last_leg_velocity_ * (t1 - t0), 1.0, std::nullopt};
    }
    remember_leg_velocity(leg, t1);
    try {
      MeasurementBundle b = assemble_leg_bundle(*inc, prev_, belief_.x, cfg_.leg);
      b.scale_noise(1.0 / gamma);
      belief_ = eskf_update(belief_.x, belief_.P, b);
    } catch (const InsufficientCoverage&) {
      return false;
    } catch (const SingularInnovation&) {
      return false;
    }
    return true;
  }

  void remember_leg_velocity(std::span<const LegOdomSample> leg, double t) {
    auto it = std::upper_bound(leg.begin(), leg.end(), t, [](double v, const LegOdomSample& s) { return v < s.t; });
    if (it != leg.begin()) last_leg_velocity_ = std::prev(it)->v_body;
  }

  void finish(EpochRecord& rec) {
    rec.x = belief_.x;
    rec.P = belief_.P;
    prev_ = belief_.x;
  }

  FusionConfig cfg_;
  LocalMap map_;
  Belief belief_;
  NominalState prev_;
  std::optional<ImuSample> held_imu_;
  std::optional<double> d_smooth_;
  std::optional<Vec3> last_leg_velocity_;
  double c_prev_ = 0.0;
  bool started_ = false;
};

}  // namespace aims
