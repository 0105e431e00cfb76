#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <span>

#include "aims/errors.hpp"
#include "aims/manifold.hpp"

namespace aims {

struct ResidualStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance (divide by N)
  std::size_t count = 0;
};

struct DegeneracyParams {
  double sigma0_sq = 2.5e-3;  // m^2, nominal residual dispersion
  double w1 = 0.6;            // observability weight
  double w2 = 0.4;            // consistency weight
  double kappa = 15.0;        // consistency saturation
  std::size_t min_correspondences = 10;
  double c_il_cap = 1e3;

  bool operator==(const DegeneracyParams&) const = default;
};

/// Per-epoch degeneracy diagnostics.
struct DegeneracyIndices {
  double o_lidar = 0.0;
  double c_il = 0.0;
  double d_k = 0.0;
  double d_smooth = 0.0;
};

inline ResidualStats residual_stats(std::span<const double> residuals) {
  ResidualStats s;
  s.count = residuals.size();
  if (s.count == 0) return s;
  const double n = static_cast<double>(s.count);
  double sum = 0.0;
  for (double r : residuals) sum += r;
  s.mean = sum / n;
  double ss = 0.0;
  for (double r : residuals) ss += (r - s.mean) * (r - s.mean);
  s.variance = ss / n;
  return s;
}

/// sigma_r^2 / (sigma_r^2 + sigma_0^2); an empty scan reads as zero observability.
inline double observability_metric(const ResidualStats& stats, const DegeneracyParams& params) {
  if (stats.count == 0) return 0.0;
  return stats.variance / (stats.variance + params.sigma0_sq);
}

/// y^T P^-1 y through a Cholesky solve. One retry with jitter
/// 1e-12 * trace/15 on the diagonal before giving up.
inline double consistency_metric(const StateTangent& y, const ErrorCovariance& cov) {
  ErrorCovariance P = 0.5 * (cov + cov.transpose());
  Eigen::LLT<ErrorCovariance> llt(P);
  if (llt.info() != Eigen::Success) {
    const double jitter = 1e-12 * P.trace() / kStateDim;
    P.diagonal().array() += jitter;
    llt.compute(P);
    if (llt.info() != Eigen::Success) throw IllConditioned("predicted covariance is not positive definite");
  }
  const StateTangent z = llt.matrixL().solve(y);
  return z.squaredNorm();
}

/// w1 (1 - O) + w2 C / (C + kappa), in [0, 1] for O in [0, 1], C >= 0.
inline double degeneracy_index(double o_lidar, double c_il, const DegeneracyParams& params) {
  if (std::isinf(c_il)) return params.w1 * (1.0 - o_lidar) + params.w2;
  return params.w1 * (1.0 - o_lidar) + params.w2 * c_il / (c_il + params.kappa);
}

inline void validate(const DegeneracyParams& p) {
  if (!(p.sigma0_sq > 0.0)) throw ValidationError("degeneracy.sigma0_sq must be > 0");
  if (!(p.w1 >= 0.0) || !(p.w2 >= 0.0)) throw ValidationError("degeneracy.w1 and degeneracy.w2 must be >= 0");
  if (std::abs(p.w1 + p.w2 - 1.0) > 1e-9) throw ValidationError("degeneracy.w1 + degeneracy.w2 must equal 1");
  if (!(p.kappa > 0.0)) throw ValidationError("degeneracy.kappa must be > 0");
  if (!(p.c_il_cap > 0.0)) throw ValidationError("degeneracy.c_il_cap must be > 0");
}

}  // namespace aims
