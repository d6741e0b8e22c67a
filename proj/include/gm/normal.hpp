#pragma once

namespace gm {

// Standard normal CDF Φ(z), via erfc for full right-tail accuracy.
double normal_cdf(double z);

// Survival function 1 − Φ(z).
double normal_sf(double z);

// log(1 − Φ(z)), finite for z far beyond where normal_sf underflows.
double log_normal_sf(double z);

// Inverse CDF Φ⁻¹(u) for u in (0, 1); relative error ~1e-15 (rational
// approximation refined by one Halley step). u outside (0,1) saturates to ∓∞.
double normal_quantile(double u);

// CDF at x of a Normal(mu, sigma²) truncated to [lo, hi]:
//   (Φ((x−μ)/σ) − Φ((lo−μ)/σ)) / (Φ((hi−μ)/σ) − Φ((lo−μ)/σ)).
// Infinite endpoints are allowed; x is clamped into [lo, hi] first. Far-tail
// intervals are evaluated through survival-function logs so the ratio stays
// accurate where both Φ differences underflow. Throws InvalidArgumentError when
// lo ≥ hi or sigma ≤ 0.
double truncated_normal_cdf(double x, double mu, double sigma, double lo, double hi);

}  // namespace gm
