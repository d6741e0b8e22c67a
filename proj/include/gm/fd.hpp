#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gm/linalg.hpp"
#include "gm/mirror.hpp"
#include "gm/post_selection.hpp"

namespace gm {

enum class GmMethod { kOls, kLasso };

// Count of statistics strictly below −M_(k), where M_(k) is the k-th largest
// statistic; an estimate of the expected number of false discoveries in the
// top-k list, relying on the sign symmetry of null statistics. Requires
// 1 ≤ k ≤ #{m > 0} (a top-k list never reaches into the negative statistics).
int fd_hat(const std::vector<double>& statistics, int k);

struct FdOptions {
    int bootstrap_samples = 200;  // B; at least 50
    double alpha = 0.05;
    bool recenter = false;  // shift the bootstrap counts to have mean fd_hat
    int threads = 0;
    std::optional<double> fixed_lambda;  // lasso penalty; cross-validated once when unset
    std::optional<double> sigma;         // lasso noise scale; refit estimate when unset
    int cv_folds = 5;
};

// Point estimate and bootstrap confidence interval for the expected number of
// false discoveries among the top k statistics.
struct FdInterval {
    int k = 0;
    int point_estimate = 0;           // fd_hat on the original data
    int ci_low = 0, ci_high = 0;      // empirical α/2 and 1−α/2 quantiles
    int upper_bound = 0;              // empirical 1−α quantile
    double alpha = 0.0;
    int bootstrap_samples = 0;        // replicates requested (B)
    std::uint64_t seed = 0;
    std::vector<int> samples;         // successful replicate counts, in index order
    std::string diagnostic;           // e.g. skipped-replicate warning
};

// Residual bootstrap around the base fit (OLS for p < n, lasso otherwise):
// each replicate resamples residuals with replacement onto the fitted values,
// reruns the full mirror pipeline with its own derived seed (fresh
// perturbations), and records fd_hat(k). Replicates that fail (non-convergent
// refit, fewer than k positive statistics, ...) are skipped with a warning;
// more than 10% failures is an error. The lasso penalty is chosen once on the
// original data and shared by every replicate.
FdInterval bootstrap_fd(const RegressionProblem& problem, GmMethod method, int k,
                        std::uint64_t rng_seed, const FdOptions& options = {});

}  // namespace gm
