#include "gm/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gm/parallel.hpp"

namespace gm {

namespace {

constexpr int kMaxRedraws = 8;
constexpr double kDegenerateNorm = 1e-12;

Matrix drop_column(const Matrix& m, Eigen::Index j) {
    Matrix out(m.rows(), m.cols() - 1);
    Eigen::Index k = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        if (c != j) out.col(k++) = m.col(c);
    return out;
}

void check_mirror_inputs(const RegressionProblem& problem) {
    if (!problem.standardized)
        throw InvalidArgumentError("mirror selection requires a standardized problem");
    if (problem.p() >= problem.n())
        throw InvalidArgumentError("mirror OLS requires p < n");
    if (problem.p() == 0) throw InvalidArgumentError("design has no columns");
}

}  // namespace

double mirror_statistic(double beta_plus, double beta_minus) {
    return std::abs(beta_plus + beta_minus) - std::abs(beta_plus - beta_minus);
}

double compute_cj_ols(const Vector& x_j, const Vector& z_j, const Matrix& X_minus_j) {
    const Vector rx = project_out(x_j, X_minus_j);
    const Vector rz = project_out(z_j, X_minus_j);
    const double den = rz.squaredNorm();
    if (den < kDegenerateNorm)
        throw DegeneratePerturbationError(
            "perturbation is numerically inside the companion span");
    return std::sqrt(rx.squaredNorm() / den);
}

ThresholdScan select_threshold(const std::vector<double>& statistics, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw InvalidArgumentError("target FDR must lie strictly inside (0, 1)");
    // The estimate #{m ≤ −t}/max(#{m ≥ t},1) is a right-continuous step
    // function of t that only changes across the distinct magnitudes |m|, so
    // scanning those magnitudes in increasing order visits every attainable
    // value and returns the exact minimizer.
    std::vector<double> candidates;
    candidates.reserve(statistics.size());
    for (double v : statistics)
        if (std::isfinite(v) && std::abs(v) > 0.0) candidates.push_back(std::abs(v));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    for (double t : candidates) {
        int negative = 0, positive = 0;
        for (double v : statistics) {
            if (v <= -t) ++negative;
            if (v >= t) ++positive;
        }
        const double fdp =
            static_cast<double>(negative) / std::max(positive, 1);
        if (fdp <= q) return {t, fdp};
    }
    return {std::numeric_limits<double>::infinity(), 0.0};
}

MirrorProfile mirror_one_feature(const RegressionProblem& problem, int j,
                                 std::uint64_t rng_seed) {
    check_mirror_inputs(problem);
    if (j < 0 || j >= problem.p())
        throw InvalidArgumentError("feature index out of range");

    const Matrix rest = drop_column(problem.design, j);
    const Vector x = problem.design.col(j);
    RngStream stream(rng_seed, derive_key(stream::kMirror, static_cast<std::uint64_t>(j)));

    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
        const Vector z = stream.normal_vector(problem.n());
        double c;
        try {
            c = compute_cj_ols(x, z, rest);
        } catch (const DegeneratePerturbationError&) {
            if (attempt == kMaxRedraws) throw;
            continue;
        }
        Matrix aug(problem.n(), problem.p() + 1);
        aug.col(0) = x + c * z;
        aug.col(1) = x - c * z;
        aug.rightCols(problem.p() - 1) = rest;
        const Vector beta = least_squares(aug, problem.response);

        MirrorProfile profile;
        profile.feature_index = j;
        profile.z = z;
        profile.c = c;
        profile.beta_plus = beta[0];
        profile.beta_minus = beta[1];
        profile.statistic = mirror_statistic(beta[0], beta[1]);
        return profile;
    }
    throw DegeneratePerturbationError("unreachable");  // loop always returns or throws
}

SelectionReport run_gm_ols(const RegressionProblem& problem, double q,
                           std::uint64_t rng_seed, int threads) {
    return run_gm_ols(problem, q, rng_seed, threads, nullptr);
}

SelectionReport run_gm_ols(const RegressionProblem& problem, double q,
                           std::uint64_t rng_seed, int threads,
                           std::vector<MirrorProfile>* profiles) {
    check_mirror_inputs(problem);
    if (!(q > 0.0 && q < 1.0))
        throw InvalidArgumentError("target FDR must lie strictly inside (0, 1)");

    const Eigen::Index n = problem.n(), p = problem.p();
    const Vector& y = problem.response;

    // One shared factorization; each feature then costs O(np). With
    // u_j = (I−P_{−j})x_j and d_j = [(XᵀX)⁻¹]_jj:
    //   ‖u_j‖² = 1/d_j,   u_jᵀy = β̂_j/d_j,   u_jᵀz = γ_j/d_j  (γ = lsq coef of z),
    //   (I−P_{−j})z = (z − QQᵀz) + γ_j u_j,
    // which yields the mirrored pair's 2×2 normal equations without ever
    // refactoring an n×(p+1) design.
    const QrBasis qr(problem.design);
    const Matrix& Q = qr.thin_q();
    const Vector d = qr.normal_inverse_diagonal();
    const Vector beta_ols = qr.solve(y);
    const Vector qty = Q.transpose() * y;

    std::vector<MirrorProfile> local(p);
    parallel_for(
        0, static_cast<int>(p),
        [&](int j) {
            RngStream stream(rng_seed,
                             derive_key(stream::kMirror, static_cast<std::uint64_t>(j)));
            for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
                Vector z = stream.normal_vector(n);
                const Vector qtz = Q.transpose() * z;
                const Vector gamma = qr.solve(z);
                const double S = 1.0 / d[j];                      // ‖u_j‖²
                const double T = gamma[j] / d[j];                 // u_jᵀz
                const double zperp_sq =
                    std::max(z.squaredNorm() - qtz.squaredNorm(), 0.0);
                const double D = zperp_sq + gamma[j] * gamma[j] / d[j];
                if (D < kDegenerateNorm) {
                    if (attempt == kMaxRedraws)
                        throw DegeneratePerturbationError(
                            "feature " + std::to_string(j) +
                            ": perturbation repeatedly degenerate");
                    continue;
                }
                const double c = std::sqrt(S / D);
                const double uty = beta_ols[j] / d[j];
                const double zhat_y = z.dot(y) - qtz.dot(qty) + gamma[j] * uty;

                const double g11 = S + 2.0 * c * T + c * c * D;
                const double g22 = S - 2.0 * c * T + c * c * D;
                const double g12 = S - c * c * D;
                const double r1 = uty + c * zhat_y;
                const double r2 = uty - c * zhat_y;
                const double det = g11 * g22 - g12 * g12;
                const double bp = (g22 * r1 - g12 * r2) / det;
                const double bm = (g11 * r2 - g12 * r1) / det;

                MirrorProfile& out = local[j];
                out.feature_index = j;
                out.z = std::move(z);
                out.c = c;
                out.beta_plus = bp;
                out.beta_minus = bm;
                out.statistic = mirror_statistic(bp, bm);
                return;
            }
        },
        threads);

    std::vector<double> stats(p);
    for (Eigen::Index j = 0; j < p; ++j) stats[j] = local[j].statistic;
    const ThresholdScan scan = select_threshold(stats, q);

    SelectionReport report;
    report.statistics.assign(stats.begin(), stats.end());
    report.threshold = scan.threshold;
    report.fdp_estimate = scan.fdp;
    report.target_fdr = q;
    report.seed = rng_seed;
    report.method = "gm-ols";
    if (std::isfinite(scan.threshold)) {
        for (Eigen::Index j = 0; j < p; ++j)
            if (stats[j] >= scan.threshold) report.selected.push_back(static_cast<int>(j));
    }
    if (profiles) *profiles = std::move(local);
    return report;
}

}  // namespace gm
