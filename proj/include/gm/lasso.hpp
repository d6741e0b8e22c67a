#pragma once

#include <cstdint>
#include <vector>

#include "gm/linalg.hpp"

namespace gm {

// Solution of min_β ‖y − Xβ‖² + λ‖β‖₁ (note: no 1/2 and no 1/n on the quadratic
// term; every λ in this library is expressed in this convention).
struct LassoFit {
    Vector coefficients;
    double penalty = 0.0;
    std::vector<int> active_set;  // sorted indices with nonzero coefficient
    std::vector<int> signs;       // ±1 per active_set entry
    double objective = 0.0;
};

// Smallest penalty at which the all-zero solution is optimal: 2·max_j |x_jᵀy|.
double lambda_max(const RegressionProblem& problem);

// Cyclic coordinate descent with soft-threshold updates. Converged when the
// objective decrease over a full sweep drops below 1e-10; raises
// ConvergenceError (carrying the final gap) after 1e5 sweeps. Coefficients with
// |β_j| < 1e-12 are clamped to exact zero so the active set and signs are
// well-defined. `warm_start` (if non-null, length p) seeds the iterate.
LassoFit lasso_fit(const RegressionProblem& problem, double penalty,
                   const Vector* warm_start = nullptr);

// Penalty minimizing mean held-out squared error over a 50-point logarithmic
// grid [λ_max·1e-4, λ_max]. Folds are a seeded shuffle + round-robin; fits
// along the grid reuse warm starts. Deterministic in (problem, folds, seed).
double cross_validate_lambda(const RegressionProblem& problem, int folds,
                             std::uint64_t rng_seed, int threads = 0);

// Rate-based penalty 4σ√(log p / n), rescaled by n to this library's
// ‖y − Xβ‖² + λ‖β‖₁ convention (the rate is stated for the sample-averaged
// quadratic loss; multiplying the objective by n multiplies λ by n).
double theoretical_lambda(const RegressionProblem& problem, double sigma);

// Largest magnitude of the stationarity residual: max_j |x_jᵀ(y−Xβ̃)| − λ/2
// violations over inactive j and |x_jᵀ(y−Xβ̃) − (λ/2)·sign(β̃_j)| over active j.
// Exposed for tests and diagnostics.
double kkt_residual(const RegressionProblem& problem, const LassoFit& fit);

}  // namespace gm
