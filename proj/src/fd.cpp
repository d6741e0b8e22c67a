#include "gm/fd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "gm/errors.hpp"
#include "gm/parallel.hpp"
#include "gm/rng.hpp"

namespace gm {

namespace {

constexpr int kMinBootstrap = 50;

std::vector<double> present_statistics(const SelectionReport& report) {
    std::vector<double> out;
    out.reserve(report.statistics.size());
    for (const auto& st : report.statistics)
        if (st.has_value()) out.push_back(*st);
    return out;
}

// nearest-rank empirical quantile of a sorted sample
template <typename T>
T sorted_quantile(const std::vector<T>& sorted, double q) {
    const auto m = static_cast<std::ptrdiff_t>(sorted.size());
    std::ptrdiff_t rank =
        static_cast<std::ptrdiff_t>(std::ceil(q * static_cast<double>(m)));
    rank = std::clamp<std::ptrdiff_t>(rank, 1, m);
    return sorted[static_cast<std::size_t>(rank - 1)];
}

}  // namespace

int fd_hat(const std::vector<double>& statistics, int k) {
    if (statistics.empty())
        throw InvalidArgumentError("statistics must be nonempty");
    if (k < 1) throw InvalidArgumentError("k must be at least 1");
    const auto positives = std::count_if(statistics.begin(), statistics.end(),
                                         [](double m) { return m > 0.0; });
    if (k > positives)
        throw InvalidArgumentError(
            "k exceeds the number of positive statistics (" +
            std::to_string(positives) + ")");
    std::vector<double> ordered(statistics);
    std::nth_element(ordered.begin(), ordered.begin() + (k - 1), ordered.end(),
                     std::greater<double>());
    const double mk = ordered[static_cast<std::size_t>(k - 1)];
    return static_cast<int>(std::count_if(statistics.begin(), statistics.end(),
                                          [&](double m) { return m < -mk; }));
}

FdInterval bootstrap_fd(const RegressionProblem& problem, GmMethod method, int k,
                        std::uint64_t rng_seed, const FdOptions& options) {
    if (!problem.standardized)
        throw InvalidArgumentError("problem must be standardized");
    if (options.bootstrap_samples < kMinBootstrap)
        throw InvalidArgumentError("need at least 50 bootstrap samples");
    if (!(options.alpha > 0.0 && options.alpha < 1.0))
        throw InvalidArgumentError("alpha must lie in (0, 1)");

    const Eigen::Index n = problem.n();
    const int B = options.bootstrap_samples;

    // base fit: fitted values + residuals to resample, penalty shared by all
    // replicates, and the point estimate from the original data
    Vector fitted;
    GmLassoOptions lasso_options;
    if (method == GmMethod::kOls) {
        if (problem.p() >= n)
            throw InvalidArgumentError("OLS-based estimation requires p < n");
        fitted = problem.design * least_squares(problem.design, problem.response);
    } else {
        const double lam =
            options.fixed_lambda
                ? *options.fixed_lambda
                : cross_validate_lambda(problem, options.cv_folds, rng_seed,
                                        options.threads);
        fitted = problem.design * lasso_fit(problem, lam).coefficients;
        lasso_options.fixed_lambda = lam;
        lasso_options.sigma = options.sigma;
        lasso_options.threads = 1;
    }
    const Vector residuals = problem.response - fitted;

    const auto run_statistics = [&](const RegressionProblem& data,
                                    std::uint64_t seed) {
        // q only steers the threshold scan, which is irrelevant here
        return present_statistics(method == GmMethod::kOls
                                      ? run_gm_ols(data, 0.5, seed, 1)
                                      : run_gm_lasso(data, 0.5, seed, lasso_options));
    };

    // same seed as a direct selection run, so the point estimate matches the
    // statistics the caller would see from run_gm_ols / run_gm_lasso
    const int point = fd_hat(run_statistics(problem, rng_seed), k);

    std::vector<std::optional<int>> replicate(static_cast<std::size_t>(B));
    parallel_for(
        0, B,
        [&](int b) {
            RngStream draw(rng_seed,
                           derive_key(stream::kBootstrap, static_cast<std::uint64_t>(b)));
            RegressionProblem boot = problem;
            for (Eigen::Index i = 0; i < n; ++i)
                boot.response[i] =
                    fitted[i] + residuals[static_cast<Eigen::Index>(
                                    draw.integer(static_cast<std::uint64_t>(n)))];
            const std::uint64_t seed_b =
                derive_key(derive_key(rng_seed, stream::kBootstrap),
                           static_cast<std::uint64_t>(b) + 1);
            try {
                replicate[static_cast<std::size_t>(b)] =
                    fd_hat(run_statistics(boot, seed_b), k);
            } catch (const Error&) {
                // failed replicate (non-convergent refit, too few positives, ...)
            }
        },
        options.threads);

    std::vector<int> samples;
    samples.reserve(static_cast<std::size_t>(B));
    for (const auto& r : replicate)
        if (r.has_value()) samples.push_back(*r);
    const int failed = B - static_cast<int>(samples.size());
    if (10 * failed > B)
        throw ConvergenceError("more than 10% of bootstrap replicates failed",
                               static_cast<double>(failed) / B);

    FdInterval out;
    out.k = k;
    out.point_estimate = point;
    out.alpha = options.alpha;
    out.bootstrap_samples = B;
    out.seed = rng_seed;
    out.samples = samples;
    if (failed > 0)
        out.diagnostic = std::to_string(failed) + " of " + std::to_string(B) +
                         " bootstrap replicates failed and were skipped";

    if (options.recenter) {
        // shift the counts so their mean sits at the point estimate, then read
        // off the same empirical quantiles
        const double mean =
            std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
        std::vector<double> shifted(samples.begin(), samples.end());
        for (double& v : shifted) v += point - mean;
        std::sort(shifted.begin(), shifted.end());
        const auto as_count = [](double v) {
            return static_cast<int>(std::max<long>(0, std::lround(v)));
        };
        out.ci_low = as_count(sorted_quantile(shifted, options.alpha / 2.0));
        out.ci_high = as_count(sorted_quantile(shifted, 1.0 - options.alpha / 2.0));
        out.upper_bound = as_count(sorted_quantile(shifted, 1.0 - options.alpha));
    } else {
        std::vector<int> sorted(samples);
        std::sort(sorted.begin(), sorted.end());
        out.ci_low = sorted_quantile(sorted, options.alpha / 2.0);
        out.ci_high = sorted_quantile(sorted, 1.0 - options.alpha / 2.0);
        out.upper_bound = sorted_quantile(sorted, 1.0 - options.alpha);
    }
    return out;
}

}  // namespace gm
