#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gm/linalg.hpp"
#include "gm/mirror.hpp"

namespace gm {

enum class DesignKind { kAr1, kConstantCorr, kConstantPartial, kStudentT, kBimodal, kCsv };

// Random design description. `param` is the correlation knob: κ for ar1
// (entries κ^|i−j|), ρ for constant correlation, τ for constant partial
// correlation (the precision matrix has unit diagonal and constant
// off-diagonal τ); student_t and bimodal reuse the ar1 covariance with
// `param` as κ. Heavy tails are fixed at 3 degrees of freedom and the bimodal
// component centers at ±0.5.
struct DesignSpec {
    DesignKind kind = DesignKind::kAr1;
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    double param = 0.0;   // must lie in [0, 0.95]
    std::uint64_t seed = 0;
    std::string csv_path;  // data source for kCsv; other kinds ignore it
};

struct TruthSpec {
    int p1 = 0;                 // nonzero coefficient count
    double amplitude_sd = 1.0;  // nonzero entries drawn N(0, amplitude_sd²)
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
};

struct SimTruth {
    Vector beta;
    std::vector<int> support;  // sorted indices of nonzero coefficients
};

// Covariance matrix targeted by the row sampler (identity scale, before
// column standardization). Defined for every kind except kCsv.
Matrix design_covariance(const DesignSpec& spec);

// Raw i.i.d. rows: Gaussian kinds via a Cholesky factor, student_t scaled so
// the row covariance (not the scatter matrix) equals design_covariance,
// bimodal as an equal mixture of N(±0.5·1, Σ). Not column-standardized.
Matrix sample_design_rows(const DesignSpec& spec);

// Standardized design: sampled rows (or the CSV contents for kCsv) with
// columns centered and scaled to squared norm n.
Matrix generate_design(const DesignSpec& spec);

// Uniformly random support of size p1 with N(0, amplitude_sd²) coefficients.
SimTruth generate_truth(const TruthSpec& spec, Eigen::Index p);

// y = X·beta + ε with ε ~ N(0, noise_sd²·I); the noise stream is derived
// from spec.seed, so a fixed TruthSpec reproduces (support, beta, ε) exactly.
Vector build_response(const Matrix& design, const SimTruth& truth,
                      const TruthSpec& spec);

// Benjamini–Hochberg step-up on OLS z-statistics z_j = β̂_j/(σ√((XᵀX)⁻¹)_jj).
// Requires p < n and full rank. The report stores the signed z values, the
// |z| threshold, and the plug-in false-discovery bound p·P(|N|≥τ)/#selected.
SelectionReport bh_zstat(const RegressionProblem& problem, double sigma, double q);
// Same with σ̂² = RSS/(n−p) estimated from the full OLS fit.
SelectionReport bh_zstat(const RegressionProblem& problem, double q);

// Benjamini–Hochberg on two-sided normal p-values from the p univariate
// regressions of y on each column separately.
SelectionReport bh_marginal(const RegressionProblem& problem, double q);

// Splits rows in half at random, runs cross-validated lasso on the first
// half, then applies Benjamini–Hochberg to the OLS z-statistics of the
// selected columns refit on the second half. Requires n ≥ 4.
SelectionReport bh_datasplit(const RegressionProblem& problem, double q,
                             std::uint64_t rng_seed, int cv_folds = 5,
                             int threads = 0);

struct EvalResult {
    double fdp = 0.0;
    double true_positive_proportion = 0.0;
    int selected_count = 0;
    std::uint64_t replicate_seed = 0;
};

// fdp = |selected ∩ nulls| / max(|selected|, 1); power = |selected ∩ signals|
// / max(|signals|, 1). `signal_support` must be sorted.
EvalResult evaluate(const SelectionReport& report,
                    const std::vector<int>& signal_support);

struct ExperimentRow {
    int replicate = 0;
    std::string method;
    double fdp = 0.0;
    double power = 0.0;
    int selected_count = 0;
    std::uint64_t seed = 0;
};

struct MethodSummary {
    std::string method;
    double fdr = 0.0;         // mean fdp over successful replicates
    double mean_power = 0.0;
    int replicates = 0;       // successful replicate count
    int failures = 0;
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;  // replicate-major, then method order
    std::vector<MethodSummary> summary;
    double q = 0.0;
    std::uint64_t master_seed = 0;
};

// Repeated draws of (design, truth, response) evaluated under each method.
// Methods: gm-ols, gm-lasso, bh-zstat, bh-ma (alias bh-marginal), bh-ds
// (alias bh-datasplit). Replicates run as a parallel map over seeds derived
// from master_seed; the seed fields inside `design`/`truth` are ignored.
// A replicate/method failure is skipped and counted; more than 10% failures
// for any method is an error. bh-zstat uses truth.noise_sd when positive,
// otherwise the plug-in estimate.
ExperimentTable run_experiment(const DesignSpec& design, const TruthSpec& truth,
                               const std::vector<std::string>& methods,
                               int replicates, double q, std::uint64_t master_seed,
                               int threads = 0);

}  // namespace gm
