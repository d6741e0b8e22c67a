#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gm/lasso.hpp"
#include "gm/linalg.hpp"
#include "gm/mirror.hpp"

namespace gm {

// Polyhedral description {y' : A0·y' ≤ b0, A1·y' ≤ b1} of the set of responses
// for which the lasso (at the same penalty) reproduces a given active set and
// sign vector. A0/b0 encode exclusion of the p−|S| inactive features (two rows
// each), A1/b1 the signs of the |S| active coefficients.
struct SelectionEvent {
    std::vector<int> active_set;
    std::vector<int> signs;
    Matrix A0;
    Vector b0;
    Matrix A1;
    Vector b1;
    double penalty = 0.0;
};

// Mirror-pair geometry for one active feature: the coefficient functionals
// ψ1, ψ2 (β̂± = ψᵢᵀy), their common squared norm α, the constraint loadings
// a0 = A0(ψ1−ψ2)/2 and a1 = A1(ψ1+ψ2)/2, and the residual r = (I−P_ψ)y.
struct MirrorGeometry {
    Vector psi1;
    Vector psi2;
    double alpha = 0.0;
    Vector a0;
    Vector a1;
    Vector residual;
    double beta_plus = 0.0;
    double beta_minus = 0.0;
};

// Interval constraints induced on the mirrored coefficient pair by the
// selection event: β̂⁺+β̂⁻ confined to [sum_lo, sum_hi], β̂⁺−β̂⁻ to
// [diff_lo, diff_hi], plus the y-only slack conditions that must stay positive.
struct TruncationBox {
    double sum_lo, sum_hi;    // from the sign constraints (A1, b1)
    double diff_lo, diff_hi;  // from the exclusion constraints (A0, b0)
    double slack0, slack1;    // min residual slack of the a≈0 rows of each block
};

// Constraint matrices from a lasso fit; verifies A0·y ≤ b0 + 1e-6 and
// A1·y ≤ b1 + 1e-6 on the fitting data (raising InconsistentEventError
// otherwise — the classic symptom of a penalty-convention mismatch).
SelectionEvent build_selection_event(const RegressionProblem& problem,
                                     const LassoFit& fit);

// Perturbation scale for active-set position j: z̃ = (I−P_S)z and
// c = √( x_jᵀ(I−P_{−j})x_j / z̃ᵀ(I−P_{−j})z̃ ) with P_{−j} the projection onto
// the active submatrix minus its j-th column. Near-zero denominator raises
// DegeneratePerturbationError (caller redraws z).
struct PostScale {
    double c;
    Vector z_tilde;
};
PostScale compute_cj_post(const RegressionProblem& problem, const SelectionEvent& event,
                          int j, const Vector& z_j);

// Geometry of the mirrored active design (x_j+cz̃, x_j−cz̃, X_{−j}); β̂± are
// its first two OLS coefficients.
MirrorGeometry mirror_geometry(const RegressionProblem& problem,
                               const SelectionEvent& event, int j, double c,
                               const Vector& z_tilde);

// Interval endpoints from the constraint loadings: rows with a_k < 0 bound the
// coordinate from below, a_k > 0 from above, |a_k| ≤ 1e-10·max|a| contribute
// slack-only conditions. Raises InconsistentEventError if an observed
// coordinate escapes its own interval by more than 1e-6.
TruncationBox truncation_box(const MirrorGeometry& geometry, const SelectionEvent& event);

// Post-selection mirror statistic
//   M = |s·Φ⁻¹(F_sum(β̂⁺+β̂⁻))| − |s·Φ⁻¹(F_diff(β̂⁺−β̂⁻))|,  s = σ√(2α),
// where F_sum / F_diff are Normal(mean, s²) CDFs truncated to the box's sum /
// diff interval. Means are 0, or (sum, diff) of ψᵢᵀμ̂ when `recenter` is
// supplied. Φ⁻¹ outputs are clamped to ±8.29. With untruncated intervals and
// zero means this reduces exactly to |β̂⁺+β̂⁻| − |β̂⁺−β̂⁻|.
double mirror_statistic_post(const MirrorGeometry& geometry, const TruncationBox& box,
                             double sigma,
                             const std::optional<std::pair<double, double>>& recenter =
                                 std::nullopt);

struct GmLassoOptions {
    std::optional<double> fixed_lambda;  // skip cross-validation when set
    std::optional<double> sigma;         // noise scale; estimated by OLS refit when unset
    bool recenter = false;               // center truncated CDFs at the refit mean
    int cv_folds = 5;
    int threads = 0;                     // 0 = default worker count
};

// High-dimensional mirror selection: lasso at the cross-validated (or fixed)
// penalty, then one truncated mirror statistic per active feature (parallel
// map; per-feature streams derived from rng_seed and the original column
// index). Inactive features get no statistic and are never selected. An empty
// active set yields an empty report with a diagnostic instead of an error.
SelectionReport run_gm_lasso(const RegressionProblem& problem, double q,
                             std::uint64_t rng_seed, const GmLassoOptions& options = {});

}  // namespace gm
