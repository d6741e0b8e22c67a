#include "gm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#include "gm/csv.hpp"
#include "gm/errors.hpp"
#include "gm/lasso.hpp"
#include "gm/normal.hpp"
#include "gm/parallel.hpp"
#include "gm/post_selection.hpp"
#include "gm/rng.hpp"

namespace gm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_spec(const DesignSpec& spec) {
    if (spec.kind == DesignKind::kCsv) {
        if (spec.csv_path.empty())
            throw InvalidArgumentError("csv design kind requires a file path");
        return;
    }
    if (spec.n < 1 || spec.p < 1)
        throw InvalidArgumentError("design dimensions must be positive");
    if (!(spec.param >= 0.0 && spec.param <= 0.95))
        throw InvalidArgumentError("design parameter must lie in [0, 0.95]");
}

void check_truth(const TruthSpec& spec, Eigen::Index p) {
    if (p < 1) throw InvalidArgumentError("p must be positive");
    if (spec.p1 < 0 || spec.p1 > p)
        throw InvalidArgumentError("signal count must lie in [0, p]");
    if (!(spec.amplitude_sd > 0.0))
        throw InvalidArgumentError("amplitude_sd must be positive");
    if (!(spec.noise_sd >= 0.0))
        throw InvalidArgumentError("noise_sd must be nonnegative");
}

void check_q(double q) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgumentError("q must lie in (0, 1)");
}

// Lower Cholesky factor, doubling as the positive-definiteness check.
Matrix covariance_factor(const Matrix& sigma) {
    const Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw InvalidArgumentError("design covariance is not positive definite");
    return llt.matrixL();
}

// Step-up scan shared by every BH variant: reject the m hypotheses with the
// smallest p-values where m is the largest rank with p_(m) ≤ q·m/total.
struct StepUpResult {
    std::vector<int> selected;  // positions into the input vectors, sorted
    double threshold = kInf;    // |statistic| at the last rejected rank
    double fdp_bound = 0.0;     // total·p_(m)/m, the plug-in bound (≤ q)
};

StepUpResult bh_step_up(const std::vector<double>& abs_statistics,
                        const std::vector<double>& pvalues, double q) {
    const int total = static_cast<int>(pvalues.size());
    std::vector<int> order(pvalues.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return pvalues[a] < pvalues[b]; });
    int cutoff = 0;
    for (int i = 1; i <= total; ++i)
        if (pvalues[order[i - 1]] <= q * i / total) cutoff = i;

    StepUpResult result;
    if (cutoff == 0) return result;
    result.selected.assign(order.begin(), order.begin() + cutoff);
    std::sort(result.selected.begin(), result.selected.end());
    result.threshold = abs_statistics[static_cast<std::size_t>(order[cutoff - 1])];
    result.fdp_bound = std::min(
        1.0, total * pvalues[static_cast<std::size_t>(order[cutoff - 1])] / cutoff);
    return result;
}

SelectionReport blank_report(std::string method, Eigen::Index p, double q,
                             std::uint64_t seed) {
    SelectionReport report;
    report.method = std::move(method);
    report.statistics.assign(static_cast<std::size_t>(p), std::nullopt);
    report.threshold = kInf;
    report.fdp_estimate = 0.0;
    report.target_fdr = q;
    report.seed = seed;
    return report;
}

}  // namespace

Matrix design_covariance(const DesignSpec& spec) {
    check_spec(spec);
    if (spec.kind == DesignKind::kCsv)
        throw InvalidArgumentError("csv designs carry no target covariance");
    const Eigen::Index p = spec.p;
    Matrix sigma(p, p);
    switch (spec.kind) {
        case DesignKind::kAr1:
        case DesignKind::kStudentT:
        case DesignKind::kBimodal:
            for (Eigen::Index i = 0; i < p; ++i)
                for (Eigen::Index j = 0; j < p; ++j)
                    sigma(i, j) = std::pow(spec.param, std::abs(i - j));
            break;
        case DesignKind::kConstantCorr:
            sigma.setConstant(spec.param);
            sigma.diagonal().setOnes();
            break;
        case DesignKind::kConstantPartial: {
            // precision matrix with unit diagonal and constant off-diagonal τ,
            // inverted in closed form via the rank-one update of (1−τ)·I
            const double tau = spec.param;
            const double scale = 1.0 / (1.0 - tau);
            const double shave = tau / (1.0 - tau + static_cast<double>(p) * tau);
            sigma.setConstant(-scale * shave);
            sigma.diagonal().setConstant(scale * (1.0 - shave));
            break;
        }
        case DesignKind::kCsv:
            break;  // unreachable
    }
    return sigma;
}

Matrix sample_design_rows(const DesignSpec& spec) {
    check_spec(spec);
    if (spec.kind == DesignKind::kCsv)
        throw InvalidArgumentError("csv designs are read from disk, not sampled");
    const Matrix factor = covariance_factor(design_covariance(spec));
    RngStream rs(spec.seed, stream::kDesign);
    Matrix rows(spec.n, spec.p);
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        Vector row = factor * rs.normal_vector(spec.p);
        switch (spec.kind) {
            case DesignKind::kStudentT: {
                // scale so the row covariance equals Σ: the df/(df−2) variance
                // inflation of the t mixture cancels against the (df−2)/df
                // shrink applied here
                const double g1 = rs.normal(), g2 = rs.normal(), g3 = rs.normal();
                const double chi_square = g1 * g1 + g2 * g2 + g3 * g3;
                row *= std::sqrt(1.0 / chi_square);  // √((df−2)/χ²) with df = 3
                break;
            }
            case DesignKind::kBimodal:
                row.array() += rs.uniform() < 0.5 ? -0.5 : 0.5;
                break;
            default:
                break;
        }
        rows.row(i) = row.transpose();
    }
    return rows;
}

Matrix generate_design(const DesignSpec& spec) {
    check_spec(spec);
    RegressionProblem problem;
    if (spec.kind == DesignKind::kCsv) {
        problem.design = read_matrix_csv(spec.csv_path);
        if (spec.n > 0 && spec.n != problem.design.rows())
            throw InvalidArgumentError(spec.csv_path + " has " +
                                       std::to_string(problem.design.rows()) +
                                       " rows, spec expects " + std::to_string(spec.n));
        if (spec.p > 0 && spec.p != problem.design.cols())
            throw InvalidArgumentError(spec.csv_path + " has " +
                                       std::to_string(problem.design.cols()) +
                                       " columns, spec expects " + std::to_string(spec.p));
    } else {
        problem.design = sample_design_rows(spec);
    }
    problem.response = Vector::Zero(problem.design.rows());
    return standardize(problem).design;
}

SimTruth generate_truth(const TruthSpec& spec, Eigen::Index p) {
    check_truth(spec, p);
    RngStream ts(spec.seed, stream::kTruth);
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < spec.p1; ++i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(
                      i + static_cast<int>(ts.integer(static_cast<std::uint64_t>(p - i))))]);

    SimTruth truth;
    truth.beta = Vector::Zero(p);
    truth.support.assign(order.begin(), order.begin() + spec.p1);
    for (const int j : truth.support) truth.beta[j] = spec.amplitude_sd * ts.normal();
    std::sort(truth.support.begin(), truth.support.end());
    return truth;
}

Vector build_response(const Matrix& design, const SimTruth& truth,
                      const TruthSpec& spec) {
    if (design.cols() != truth.beta.size())
        throw InvalidArgumentError("design and coefficient dimensions disagree");
    check_truth(spec, design.cols());
    RngStream ns(spec.seed, stream::kNoise);
    Vector noise = ns.normal_vector(design.rows());
    return design * truth.beta + spec.noise_sd * noise;
}

SelectionReport bh_zstat(const RegressionProblem& problem, double sigma, double q) {
    check_q(q);
    if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be positive");
    const Eigen::Index n = problem.design.rows();
    const Eigen::Index p = problem.design.cols();
    if (n <= p)
        throw SingularDesignError("z-statistics need more rows than columns",
                                  static_cast<int>(p - n + 1));
    const Vector beta = least_squares(problem.design, problem.response);

    const Matrix gram = problem.design.transpose() * problem.design;
    const Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularDesignError("Gram matrix is not positive definite", 1);
    const Matrix inverse_gram = llt.solve(Matrix::Identity(p, p));

    std::vector<double> abs_z(static_cast<std::size_t>(p));
    std::vector<double> pvalues(static_cast<std::size_t>(p));
    SelectionReport report = blank_report("bh-zstat", p, q, 0);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double z = beta[j] / (sigma * std::sqrt(inverse_gram(j, j)));
        report.statistics[static_cast<std::size_t>(j)] = z;
        abs_z[static_cast<std::size_t>(j)] = std::abs(z);
        pvalues[static_cast<std::size_t>(j)] = 2.0 * normal_sf(std::abs(z));
    }
    const StepUpResult scan = bh_step_up(abs_z, pvalues, q);
    report.selected = scan.selected;
    report.threshold = scan.threshold;
    report.fdp_estimate = scan.fdp_bound;
    report.sigma = sigma;
    return report;
}

SelectionReport bh_zstat(const RegressionProblem& problem, double q) {
    const Eigen::Index n = problem.design.rows();
    const Eigen::Index p = problem.design.cols();
    if (n <= p)
        throw SingularDesignError("z-statistics need more rows than columns",
                                  static_cast<int>(p - n + 1));
    const Vector beta = least_squares(problem.design, problem.response);
    const double rss = (problem.response - problem.design * beta).squaredNorm();
    const double rms = std::sqrt(problem.response.squaredNorm() /
                                 static_cast<double>(n));
    const double floor = 1e-10 * std::max(rms, 1.0);
    const double sigma_hat =
        std::max(std::sqrt(rss / static_cast<double>(n - p)), floor);
    return bh_zstat(problem, sigma_hat, q);
}

SelectionReport bh_marginal(const RegressionProblem& problem, double q) {
    check_q(q);
    const Eigen::Index n = problem.design.rows();
    const Eigen::Index p = problem.design.cols();
    if (n < 3) throw InvalidArgumentError("marginal regression needs n >= 3");
    if (problem.response.size() != n)
        throw InvalidArgumentError("response length does not match design rows");

    const Vector centered_y =
        problem.response.array() - problem.response.mean();
    const double syy = centered_y.squaredNorm();
    std::vector<double> abs_z(static_cast<std::size_t>(p));
    std::vector<double> pvalues(static_cast<std::size_t>(p));
    SelectionReport report = blank_report("bh-ma", p, q, 0);
    for (Eigen::Index j = 0; j < p; ++j) {
        Vector x = problem.design.col(j);
        x.array() -= x.mean();
        const double sxx = x.squaredNorm();
        if (sxx <= 0.0)
            throw InvalidArgumentError("constant design column " + std::to_string(j));
        const double sxy = x.dot(centered_y);
        const double rss = std::max(0.0, syy - sxy * sxy / sxx);
        const double sigma_hat = std::sqrt(rss / static_cast<double>(n - 2));
        double z = 0.0;
        if (sigma_hat > 0.0)
            z = sxy / (std::sqrt(sxx) * sigma_hat);
        else if (sxy != 0.0)
            z = sxy > 0.0 ? kInf : -kInf;  // exact fit: infinitely significant
        report.statistics[static_cast<std::size_t>(j)] = z;
        abs_z[static_cast<std::size_t>(j)] = std::abs(z);
        pvalues[static_cast<std::size_t>(j)] = 2.0 * normal_sf(std::abs(z));
    }
    const StepUpResult scan = bh_step_up(abs_z, pvalues, q);
    report.selected = scan.selected;
    report.threshold = scan.threshold;
    report.fdp_estimate = scan.fdp_bound;
    return report;
}

SelectionReport bh_datasplit(const RegressionProblem& problem, double q,
                             std::uint64_t rng_seed, int cv_folds, int threads) {
    check_q(q);
    const Eigen::Index n = problem.design.rows();
    const Eigen::Index p = problem.design.cols();
    if (n < 4) throw InvalidArgumentError("data splitting needs n >= 4");
    if (problem.response.size() != n)
        throw InvalidArgumentError("response length does not match design rows");

    RngStream split(rng_seed, stream::kSplit);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    for (Eigen::Index i = 0; i < n - 1; ++i)
        std::swap(rows[static_cast<std::size_t>(i)],
                  rows[static_cast<std::size_t>(
                      i + static_cast<Eigen::Index>(
                              split.integer(static_cast<std::uint64_t>(n - i))))]);
    const Eigen::Index n1 = n / 2;
    const Eigen::Index n2 = n - n1;

    RegressionProblem half1;
    half1.design.resize(n1, p);
    half1.response.resize(n1);
    for (Eigen::Index i = 0; i < n1; ++i) {
        half1.design.row(i) = problem.design.row(rows[static_cast<std::size_t>(i)]);
        half1.response[i] = problem.response[rows[static_cast<std::size_t>(i)]];
    }
    const RegressionProblem screen = standardize(half1);
    SelectionReport report = blank_report("bh-ds", p, q, rng_seed);
    if ((screen.design.transpose() * screen.response).cwiseAbs().maxCoeff() == 0.0) {
        report.diagnostic = "screening response orthogonal to every column";
        return report;  // nothing can enter the lasso path
    }
    const double penalty = cross_validate_lambda(screen, cv_folds, rng_seed, threads);
    const LassoFit fit = lasso_fit(screen, penalty);
    report.lambda = penalty;
    if (fit.active_set.empty()) return report;

    const int active = static_cast<int>(fit.active_set.size());
    // second-half refit with an intercept; the screened columns keep their
    // original scale, which leaves the z-statistics unchanged
    Matrix refit(n2, active + 1);
    Vector y2(n2);
    refit.col(0).setOnes();
    for (Eigen::Index i = 0; i < n2; ++i) {
        const Eigen::Index row = rows[static_cast<std::size_t>(n1 + i)];
        y2[i] = problem.response[row];
        for (int a = 0; a < active; ++a)
            refit(i, a + 1) = problem.design(row, fit.active_set[static_cast<std::size_t>(a)]);
    }
    if (n2 <= active + 1)
        throw SingularDesignError("second half too small for the screened set",
                                  active + 1 - static_cast<int>(n2) + 1);
    const Vector beta = least_squares(refit, y2);
    const double rss = (y2 - refit * beta).squaredNorm();
    const double rms = std::sqrt(y2.squaredNorm() / static_cast<double>(n2));
    const double sigma_hat =
        std::max(std::sqrt(rss / static_cast<double>(n2 - active - 1)),
                 1e-10 * std::max(rms, 1.0));

    const Matrix gram = refit.transpose() * refit;
    const Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularDesignError("refit Gram matrix is not positive definite", 1);
    const Matrix inverse_gram =
        llt.solve(Matrix::Identity(active + 1, active + 1));

    std::vector<double> abs_z(static_cast<std::size_t>(active));
    std::vector<double> pvalues(static_cast<std::size_t>(active));
    for (int a = 0; a < active; ++a) {
        const double z =
            beta[a + 1] / (sigma_hat * std::sqrt(inverse_gram(a + 1, a + 1)));
        report.statistics[static_cast<std::size_t>(
            fit.active_set[static_cast<std::size_t>(a)])] = z;
        abs_z[static_cast<std::size_t>(a)] = std::abs(z);
        pvalues[static_cast<std::size_t>(a)] = 2.0 * normal_sf(std::abs(z));
    }
    const StepUpResult scan = bh_step_up(abs_z, pvalues, q);
    for (const int a : scan.selected)
        report.selected.push_back(fit.active_set[static_cast<std::size_t>(a)]);
    std::sort(report.selected.begin(), report.selected.end());
    report.threshold = scan.threshold;
    report.fdp_estimate = scan.fdp_bound;
    report.sigma = sigma_hat;
    return report;
}

EvalResult evaluate(const SelectionReport& report,
                    const std::vector<int>& signal_support) {
    EvalResult result;
    int true_positives = 0;
    for (const int j : report.selected)
        if (std::binary_search(signal_support.begin(), signal_support.end(), j))
            ++true_positives;
    const int selected = static_cast<int>(report.selected.size());
    result.fdp = static_cast<double>(selected - true_positives) /
                 std::max(selected, 1);
    result.true_positive_proportion =
        static_cast<double>(true_positives) /
        std::max(static_cast<int>(signal_support.size()), 1);
    result.selected_count = selected;
    result.replicate_seed = report.seed;
    return result;
}

namespace {

std::string canonical_method(const std::string& name) {
    if (name == "gm-ols" || name == "gm-lasso" || name == "bh-zstat" ||
        name == "bh-ma" || name == "bh-ds")
        return name;
    if (name == "bh-marginal") return "bh-ma";
    if (name == "bh-datasplit") return "bh-ds";
    throw InvalidArgumentError("unknown method '" + name + "'");
}

SelectionReport run_method(const std::string& method,
                           const RegressionProblem& problem, double q,
                           std::uint64_t seed, double noise_sd) {
    if (method == "gm-ols") return run_gm_ols(problem, q, seed, 1);
    if (method == "gm-lasso") {
        GmLassoOptions options;
        options.threads = 1;
        return run_gm_lasso(problem, q, seed, options);
    }
    if (method == "bh-zstat")
        return noise_sd > 0.0 ? bh_zstat(problem, noise_sd, q)
                              : bh_zstat(problem, q);
    if (method == "bh-ma") return bh_marginal(problem, q);
    return bh_datasplit(problem, q, seed, 5, 1);
}

}  // namespace

ExperimentTable run_experiment(const DesignSpec& design, const TruthSpec& truth,
                               const std::vector<std::string>& methods,
                               int replicates, double q, std::uint64_t master_seed,
                               int threads) {
    check_spec(design);
    check_q(q);
    if (replicates < 1) throw InvalidArgumentError("need at least one replicate");
    if (methods.empty()) throw InvalidArgumentError("need at least one method");
    std::vector<std::string> canon(methods.size());
    std::transform(methods.begin(), methods.end(), canon.begin(), canonical_method);

    const int method_count = static_cast<int>(canon.size());
    std::vector<std::optional<ExperimentRow>> cells(
        static_cast<std::size_t>(replicates * method_count));
    const std::uint64_t replicate_parent = derive_key(master_seed, stream::kReplicate);

    parallel_for(
        0, replicates,
        [&](int r) {
            const std::uint64_t seed =
                derive_key(replicate_parent, static_cast<std::uint64_t>(r));
            DesignSpec design_r = design;
            design_r.seed = seed;
            TruthSpec truth_r = truth;
            truth_r.seed = seed;

            RegressionProblem problem;
            problem.design = generate_design(design_r);
            const SimTruth beta = generate_truth(truth_r, problem.design.cols());
            problem.response = build_response(problem.design, beta, truth_r);
            problem = standardize(problem);

            for (int m = 0; m < method_count; ++m) {
                const std::size_t cell = static_cast<std::size_t>(r * method_count + m);
                try {
                    const SelectionReport report = run_method(
                        canon[static_cast<std::size_t>(m)], problem, q, seed,
                        truth_r.noise_sd);
                    const EvalResult eval = evaluate(report, beta.support);
                    cells[cell] = ExperimentRow{r,
                                                canon[static_cast<std::size_t>(m)],
                                                eval.fdp,
                                                eval.true_positive_proportion,
                                                eval.selected_count,
                                                seed};
                } catch (const Error&) {
                    cells[cell] = std::nullopt;
                }
            }
        },
        threads);

    ExperimentTable table;
    table.q = q;
    table.master_seed = master_seed;
    for (const auto& cell : cells)
        if (cell) table.rows.push_back(*cell);

    for (int m = 0; m < method_count; ++m) {
        MethodSummary summary;
        summary.method = canon[static_cast<std::size_t>(m)];
        double fdp_sum = 0.0, power_sum = 0.0;
        for (int r = 0; r < replicates; ++r) {
            const auto& cell = cells[static_cast<std::size_t>(r * method_count + m)];
            if (!cell) {
                ++summary.failures;
                continue;
            }
            fdp_sum += cell->fdp;
            power_sum += cell->power;
            ++summary.replicates;
        }
        if (10 * summary.failures > replicates)
            throw ConvergenceError("more than 10% of replicates failed for " +
                                       summary.method,
                                   static_cast<double>(summary.failures) / replicates);
        if (summary.replicates > 0) {
            summary.fdr = fdp_sum / summary.replicates;
            summary.mean_power = power_sum / summary.replicates;
        }
        table.summary.push_back(std::move(summary));
    }
    return table;
}

}  // namespace gm
