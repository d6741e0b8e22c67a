#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gm/linalg.hpp"
#include "gm/rng.hpp"

namespace gm {

// Everything recorded about one feature's mirror pair: the Gaussian
// perturbation z, its scale c, the two mirrored coefficients and the statistic
// M = |β⁺+β⁻| − |β⁺−β⁻|.
struct MirrorProfile {
    int feature_index = -1;
    Vector z;
    double c = 0.0;
    double beta_plus = 0.0;
    double beta_minus = 0.0;
    double statistic = 0.0;
};

// Outcome of a selection procedure over p features. `statistics[j]` is empty
// for features the procedure never scored (lasso path: features outside the
// active set); such features are never selected. `threshold` is +inf when no
// candidate threshold meets the FDP bound (empty selection).
struct SelectionReport {
    std::vector<std::optional<double>> statistics;
    double threshold = 0.0;
    std::vector<int> selected;
    double fdp_estimate = 0.0;
    double target_fdr = 0.0;
    std::uint64_t seed = 0;
    std::string method;
    std::optional<double> lambda;    // lasso penalty actually used
    std::optional<double> sigma;     // noise scale used (supplied or estimated)
    std::string diagnostic;          // non-fatal notes (e.g. empty active set)
};

// M = |β⁺+β⁻| − |β⁺−β⁻| (equivalently 2·min(|β⁺|,|β⁻|)·sign(β⁺β⁻)).
double mirror_statistic(double beta_plus, double beta_minus);

// Scale making the mirrored coefficient pair uncorrelated:
//   c = √( x_jᵀ(I−P)x_j / z_jᵀ(I−P)z_j ),  P = projection onto span(X_minus_j).
// Computed with two project_out calls. A denominator below 1e-12 raises
// DegeneratePerturbationError (caller redraws z_j).
double compute_cj_ols(const Vector& x_j, const Vector& z_j, const Matrix& X_minus_j);

// Smallest threshold t > 0 (scanned over the distinct |m| values, each also
// probed at m − 1e-12) with  #{m_i ≤ −t} / max(#{m_i ≥ t}, 1) ≤ q, plus the
// estimated FDP there. No candidate ⇒ threshold = +inf, fdp = 0.
struct ThresholdScan {
    double threshold;
    double fdp;
};
ThresholdScan select_threshold(const std::vector<double>& statistics, double q);

// One feature of the low-dimensional (p < n) mirror procedure: draws z_j from
// the stream (rng_seed, j), computes c_j, fits OLS on the n×(p+1) design
// (x_j + c z_j, x_j − c z_j, X_{−j}) and records the statistic. Degenerate z_j
// are redrawn up to 8 times. Requires a standardized problem with p < n.
MirrorProfile mirror_one_feature(const RegressionProblem& problem, int j,
                                 std::uint64_t rng_seed);

// Full low-dimensional mirror selection at FDR target q: all p mirror profiles
// (parallel map over features), then the threshold scan. Deterministic in
// (problem, q, rng_seed); `threads` = 0 uses the default worker count.
SelectionReport run_gm_ols(const RegressionProblem& problem, double q,
                           std::uint64_t rng_seed, int threads = 0);

// As run_gm_ols but also exposes the per-feature profiles.
SelectionReport run_gm_ols(const RegressionProblem& problem, double q,
                           std::uint64_t rng_seed, int threads,
                           std::vector<MirrorProfile>* profiles);

}  // namespace gm
