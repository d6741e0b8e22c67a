#include "gm/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gm/parallel.hpp"
#include "gm/rng.hpp"

namespace gm {

namespace {

constexpr double kSweepTolerance = 1e-10;
constexpr double kKktTolerance = 1e-6;
constexpr double kZeroClamp = 1e-12;
constexpr int kMaxSweeps = 100000;
constexpr int kMaxStalledRefreshes = 200;
constexpr int kGridSize = 50;
constexpr double kGridSpan = 1e-4;  // grid floor is λ_max times this

double soft_threshold(double a, double k) {
    if (a > k) return a - k;
    if (a < -k) return a + k;
    return 0.0;
}

double max_stationarity_gap(const Matrix& X, const Vector& residual,
                            const Vector& beta, double half_penalty) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double g = X.col(j).dot(residual);
        const double gap = beta[j] != 0.0
                               ? std::abs(g - half_penalty * (beta[j] > 0 ? 1.0 : -1.0))
                               : std::max(0.0, std::abs(g) - half_penalty);
        worst = std::max(worst, gap);
    }
    return worst;
}

}  // namespace

double lambda_max(const RegressionProblem& problem) {
    return 2.0 *
           (problem.design.transpose() * problem.response).cwiseAbs().maxCoeff();
}

LassoFit lasso_fit(const RegressionProblem& problem, double penalty,
                   const Vector* warm_start) {
    if (!problem.standardized)
        throw InvalidArgumentError("lasso requires a standardized problem");
    if (!(penalty > 0.0)) throw InvalidArgumentError("penalty must be positive");
    const Eigen::Index p = problem.p();
    if (warm_start && warm_start->size() != p)
        throw InvalidArgumentError("warm start length does not match p");

    const Matrix& X = problem.design;
    const Vector& y = problem.response;
    const double half = penalty / 2.0;

    Vector col_sq(p);
    for (Eigen::Index j = 0; j < p; ++j) col_sq[j] = X.col(j).squaredNorm();

    Vector beta = warm_start ? *warm_start : Vector::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j)
        if (col_sq[j] < kZeroClamp) beta[j] = 0.0;  // dead column, never updated
    Vector residual = y - X * beta;

    double prev = residual.squaredNorm() + penalty * beta.lpNorm<1>();
    bool converged = false;
    double gap = prev;
    double best_station = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq[j] < kZeroClamp) continue;
            const double old = beta[j];
            const double rho = X.col(j).dot(residual) + col_sq[j] * old;
            double next = soft_threshold(rho, half) / col_sq[j];
            if (std::abs(next) < kZeroClamp) next = 0.0;
            if (next != old) {
                residual += X.col(j) * (old - next);
                beta[j] = next;
            }
        }
        double obj = residual.squaredNorm() + penalty * beta.lpNorm<1>();
        gap = prev - obj;
        if (gap < kSweepTolerance) {
            // refresh the streamed residual, then insist on stationarity too
            residual = y - X * beta;
            const double station = max_stationarity_gap(X, residual, beta, half);
            if (station <= kKktTolerance) {
                converged = true;
                break;
            }
            // a gap that stops shrinking between refreshes (saturated supports
            // near an exact interpolant) will never meet the tolerance; give
            // up early instead of burning the full sweep budget
            if (station > 0.99 * best_station) {
                if (++stalled >= kMaxStalledRefreshes) {
                    gap = station;
                    break;
                }
            } else {
                stalled = 0;
            }
            best_station = std::min(best_station, station);
            obj = residual.squaredNorm() + penalty * beta.lpNorm<1>();
        }
        prev = obj;
    }
    if (!converged)
        throw ConvergenceError("coordinate descent did not converge", gap);

    LassoFit fit;
    fit.coefficients = std::move(beta);
    fit.penalty = penalty;
    fit.objective =
        residual.squaredNorm() + penalty * fit.coefficients.lpNorm<1>();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (fit.coefficients[j] != 0.0) {
            fit.active_set.push_back(static_cast<int>(j));
            fit.signs.push_back(fit.coefficients[j] > 0 ? 1 : -1);
        }
    }
    return fit;
}

double cross_validate_lambda(const RegressionProblem& problem, int folds,
                             std::uint64_t rng_seed, int threads) {
    if (!problem.standardized)
        throw InvalidArgumentError("cross validation requires a standardized problem");
    if (folds < 2) throw InvalidArgumentError("need at least 2 folds");
    const Eigen::Index n = problem.n();
    if (n < 2 * folds)
        throw InvalidArgumentError("need at least 2 rows per fold");

    const double lmax = lambda_max(problem);
    if (!(lmax > 0.0))
        throw InvalidArgumentError("response is orthogonal to every column");
    std::vector<double> grid(kGridSize);  // descending, for warm starts
    for (int i = 0; i < kGridSize; ++i)
        grid[i] = lmax * std::pow(kGridSpan, i / (kGridSize - 1.0));

    // seeded shuffle, then round-robin assignment
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle(rng_seed, stream::kFolds);
    for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(order[i], order[shuffle.integer(static_cast<std::uint64_t>(i) + 1)]);
    std::vector<int> fold_of(n);
    for (Eigen::Index k = 0; k < n; ++k) fold_of[order[k]] = static_cast<int>(k) % folds;

    Matrix held_out_mse(kGridSize, folds);
    parallel_for(
        0, folds,
        [&](int f) {
            std::vector<int> train, val;
            for (Eigen::Index i = 0; i < n; ++i)
                (fold_of[i] == f ? val : train).push_back(static_cast<int>(i));
            RegressionProblem sub;
            sub.standardized = true;  // rows of a standardized problem
            sub.design.resize(train.size(), problem.p());
            sub.response.resize(train.size());
            for (std::size_t r = 0; r < train.size(); ++r) {
                sub.design.row(r) = problem.design.row(train[r]);
                sub.response[r] = problem.response[train[r]];
            }
            Vector warm = Vector::Zero(problem.p());
            for (int i = 0; i < kGridSize; ++i) {
                LassoFit fit;
                try {
                    fit = lasso_fit(sub, grid[i], &warm);
                } catch (const ConvergenceError&) {
                    // degenerate cell (e.g. saturated support on an exactly
                    // interpolable fold); rule this penalty out and move on
                    held_out_mse(i, f) = std::numeric_limits<double>::infinity();
                    continue;
                }
                warm = fit.coefficients;
                double err = 0.0;
                for (int r : val) {
                    const double d =
                        problem.response[r] -
                        problem.design.row(r).dot(fit.coefficients);
                    err += d * d;
                }
                held_out_mse(i, f) = err / static_cast<double>(val.size());
            }
        },
        threads);

    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGridSize; ++i) {
        const double mean_err = held_out_mse.row(i).mean();
        if (mean_err < best_err) {  // strict: ties resolve to the larger penalty
            best_err = mean_err;
            best = i;
        }
    }
    return grid[best];
}

double theoretical_lambda(const RegressionProblem& problem, double sigma) {
    if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be positive");
    const double n = static_cast<double>(problem.n());
    const double p = static_cast<double>(problem.p());
    // 4σ√(log p / n) is stated for the (1/n)-scaled quadratic loss; our
    // objective multiplies that loss by n, so the penalty scales by n too
    return n * 4.0 * sigma * std::sqrt(std::log(p) / n);
}

double kkt_residual(const RegressionProblem& problem, const LassoFit& fit) {
    const Vector residual =
        problem.response - problem.design * fit.coefficients;
    return max_stationarity_gap(problem.design, residual, fit.coefficients,
                                fit.penalty / 2.0);
}

}  // namespace gm
