#include "gm/post_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "gm/errors.hpp"
#include "gm/normal.hpp"
#include "gm/parallel.hpp"

namespace gm {

namespace {

constexpr double kEventTolerance = 1e-6;
constexpr double kZeroLoadingRatio = 1e-10;
constexpr double kDegenerateNorm = 1e-12;
constexpr double kQuantileClamp = 8.29;
constexpr int kMaxRedraws = 8;
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix gather_columns(const Matrix& design, const std::vector<int>& cols) {
    Matrix out(design.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = design.col(cols[k]);
    return out;
}

void check_event_arguments(const RegressionProblem& problem, const SelectionEvent& event,
                           int j) {
    if (!problem.standardized)
        throw InvalidArgumentError("problem must be standardized");
    const int s = static_cast<int>(event.active_set.size());
    if (s == 0) throw InvalidArgumentError("selection event has an empty active set");
    if (j < 0 || j >= s)
        throw InvalidArgumentError("active-set position out of range");
    for (int feature : event.active_set)
        if (feature < 0 || feature >= problem.p())
            throw InvalidArgumentError("active feature index out of range");
}

// One coordinate's interval from its constraint loadings. Writing y along the
// mirrored directions as y = sum·u + diff·cz̃ + r and using A(ψ1−ψ2) = 2a with
// ψ1−ψ2 = 2α·cz̃ (likewise for the sum side), row k of A·y ≤ b becomes
// a_k·coord/α ≤ b_k − (A·r)_k, i.e. an upper bound α·offset/a for a_k > 0, a
// lower bound for a_k < 0, and a coordinate-free slack condition when a_k ≈ 0.
struct CoordinateInterval {
    double lo = -kInf;
    double hi = kInf;
    double slack = kInf;
};

CoordinateInterval interval_from_loadings(const Vector& a, const Vector& offset,
                                          double alpha) {
    CoordinateInterval out;
    if (a.size() == 0) return out;
    const double tiny = kZeroLoadingRatio * a.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a[k] > tiny) {
            out.hi = std::min(out.hi, alpha * offset[k] / a[k]);
        } else if (a[k] < -tiny) {
            out.lo = std::max(out.lo, alpha * offset[k] / a[k]);
        } else {
            out.slack = std::min(out.slack, offset[k]);
        }
    }
    return out;
}

void check_inside(double value, double lo, double hi, double slack, const char* label) {
    const double tol_lo = kEventTolerance * (1.0 + std::abs(lo));
    const double tol_hi = kEventTolerance * (1.0 + std::abs(hi));
    if (value < lo - tol_lo || value > hi + tol_hi)
        throw InconsistentEventError(std::string("observed ") + label +
                                     " coordinate escapes its truncation interval");
    if (slack < -kEventTolerance)
        throw InconsistentEventError(std::string(label) +
                                     "-side slack condition is violated");
}

TruncationBox assemble_box(const Vector& a0, const Vector& q0, const Vector& a1,
                           const Vector& q1, double alpha, double sum, double diff) {
    const CoordinateInterval dbox = interval_from_loadings(a0, q0, alpha);
    const CoordinateInterval sbox = interval_from_loadings(a1, q1, alpha);
    check_inside(diff, dbox.lo, dbox.hi, dbox.slack, "difference");
    check_inside(sum, sbox.lo, sbox.hi, sbox.slack, "sum");
    return {sbox.lo, sbox.hi, dbox.lo, dbox.hi, dbox.slack, sbox.slack};
}

double statistic_from_box(double sum, double diff, double alpha, double sigma,
                          const TruncationBox& box,
                          const std::optional<std::pair<double, double>>& means) {
    if (!(sigma > 0.0)) throw InvalidArgumentError("sigma must be positive");
    if (!(alpha > 0.0)) throw InvalidArgumentError("alpha must be positive");
    const double scale = sigma * std::sqrt(2.0 * alpha);
    const double mu_sum = means ? means->first : 0.0;
    const double mu_diff = means ? means->second : 0.0;
    const double f_sum = truncated_normal_cdf(sum, mu_sum, scale, box.sum_lo, box.sum_hi);
    const double f_diff =
        truncated_normal_cdf(diff, mu_diff, scale, box.diff_lo, box.diff_hi);
    const auto pull_back = [&](double u) {
        return std::clamp(normal_quantile(u), -kQuantileClamp, kQuantileClamp);
    };
    return std::abs(scale * pull_back(f_sum)) - std::abs(scale * pull_back(f_diff));
}

}  // namespace

SelectionEvent build_selection_event(const RegressionProblem& problem,
                                     const LassoFit& fit) {
    if (!problem.standardized)
        throw InvalidArgumentError("problem must be standardized");
    if (fit.active_set.empty())
        throw InvalidArgumentError("selection event requires a nonempty active set");
    if (!(fit.penalty > 0.0)) throw InvalidArgumentError("penalty must be positive");
    if (fit.signs.size() != fit.active_set.size())
        throw InvalidArgumentError("signs and active set must have equal length");
    if (!std::is_sorted(fit.active_set.begin(), fit.active_set.end()))
        throw InvalidArgumentError("active set must be sorted");
    for (int feature : fit.active_set)
        if (feature < 0 || feature >= problem.p())
            throw InvalidArgumentError("active feature index out of range");

    const Eigen::Index n = problem.n();
    const Eigen::Index s = static_cast<Eigen::Index>(fit.active_set.size());
    const Matrix xs = gather_columns(problem.design, fit.active_set);

    Eigen::ColPivHouseholderQR<Matrix> rank_qr(xs);
    rank_qr.setThreshold(kRankTolerance);
    if (rank_qr.rank() < s)
        throw SingularDesignError("active design columns are linearly dependent",
                                  static_cast<int>(s - rank_qr.rank()));

    std::vector<int> inactive;
    inactive.reserve(problem.p() - s);
    for (int feature = 0; feature < problem.p(); ++feature)
        if (!std::binary_search(fit.active_set.begin(), fit.active_set.end(), feature))
            inactive.push_back(feature);
    const Matrix xr = gather_columns(problem.design, inactive);
    const Eigen::Index m = xr.cols();

    Vector sign_vec(s);
    for (Eigen::Index k = 0; k < s; ++k) sign_vec[k] = fit.signs[k];

    // The constraints are stated for the objective ½‖y−Xβ‖² + λ'‖β‖₁, which
    // matches ‖y−Xβ‖² + λ‖β‖₁ at λ' = λ/2.
    const double lam = fit.penalty / 2.0;

    const Matrix gram = xs.transpose() * xs;
    const Eigen::LDLT<Matrix> gram_ldlt(gram);
    const Matrix pinv = gram_ldlt.solve(xs.transpose());  // (X_SᵀX_S)⁻¹X_Sᵀ
    const Vector gram_inv_sign = gram_ldlt.solve(sign_vec);

    SelectionEvent event;
    event.active_set = fit.active_set;
    event.signs = fit.signs;
    event.penalty = fit.penalty;
    event.A1 = -(sign_vec.asDiagonal() * pinv);
    event.b1 = -lam * (sign_vec.asDiagonal() * gram_inv_sign);

    event.A0.resize(2 * m, n);
    event.b0.resize(2 * m);
    if (m > 0) {
        const Matrix cross = xr.transpose() * xs;           // X_{−S}ᵀX_S
        const Matrix excl = (xr.transpose() - cross * pinv) / lam;  // X_{−S}ᵀ(I−P_S)/λ'
        const Vector tilt = cross * gram_inv_sign;
        event.A0.topRows(m) = excl;
        event.A0.bottomRows(m) = -excl;
        event.b0.head(m) = Vector::Ones(m) - tilt;
        event.b0.tail(m) = Vector::Ones(m) + tilt;
    }

    if (m > 0 && (event.A0 * problem.response - event.b0).maxCoeff() > kEventTolerance)
        throw InconsistentEventError(
            "exclusion constraints are violated by the fitting data "
            "(penalty convention mismatch?)");
    if ((event.A1 * problem.response - event.b1).maxCoeff() > kEventTolerance)
        throw InconsistentEventError(
            "sign constraints are violated by the fitting data");
    return event;
}

PostScale compute_cj_post(const RegressionProblem& problem, const SelectionEvent& event,
                          int j, const Vector& z_j) {
    check_event_arguments(problem, event, j);
    if (z_j.size() != problem.n())
        throw InvalidArgumentError("perturbation length must match the sample size");

    const Matrix xs = gather_columns(problem.design, event.active_set);
    const Vector z_tilde = project_out(z_j, xs);

    const Eigen::Index s = xs.cols();
    Matrix rest(problem.n(), s - 1);
    Eigen::Index k = 0;
    for (Eigen::Index c = 0; c < s; ++c)
        if (c != j) rest.col(k++) = xs.col(c);

    const Vector u = s > 1 ? project_out(xs.col(j), rest) : Vector(xs.col(j));
    const Vector w = s > 1 ? project_out(z_tilde, rest) : z_tilde;
    const double den = w.squaredNorm();
    if (den < kDegenerateNorm)
        throw DegeneratePerturbationError(
            "perturbation is degenerate after removing the active span");
    const double num = u.squaredNorm();
    if (num < kDegenerateNorm)
        throw SingularDesignError("active column lies in the span of the others", 1);
    return {std::sqrt(num / den), z_tilde};
}

MirrorGeometry mirror_geometry(const RegressionProblem& problem,
                               const SelectionEvent& event, int j, double c,
                               const Vector& z_tilde) {
    check_event_arguments(problem, event, j);
    if (!(c > 0.0)) throw InvalidArgumentError("mirror scale must be positive");
    if (z_tilde.size() != problem.n())
        throw InvalidArgumentError("perturbation length must match the sample size");

    const Matrix xs = gather_columns(problem.design, event.active_set);
    const Eigen::Index n = problem.n();
    const Eigen::Index s = xs.cols();

    Matrix aug(n, s + 1);
    aug.col(0) = xs.col(j) + c * z_tilde;
    aug.col(1) = xs.col(j) - c * z_tilde;
    Eigen::Index k = 2;
    for (Eigen::Index col = 0; col < s; ++col)
        if (col != j) aug.col(k++) = xs.col(col);

    const QrBasis qr(aug);
    const Vector beta = qr.solve(problem.response);

    Vector e1 = Vector::Zero(s + 1);
    Vector e2 = Vector::Zero(s + 1);
    e1[0] = 1.0;
    e2[1] = 1.0;

    MirrorGeometry geom;
    geom.psi1 = aug * qr.solve_normal(e1);
    geom.psi2 = aug * qr.solve_normal(e2);
    geom.alpha = 0.5 * (geom.psi1.squaredNorm() + geom.psi2.squaredNorm());
    geom.beta_plus = beta[0];
    geom.beta_minus = beta[1];
    geom.a0 = event.A0 * (geom.psi1 - geom.psi2) / 2.0;
    geom.a1 = event.A1 * (geom.psi1 + geom.psi2) / 2.0;

    const double sum = beta[0] + beta[1];
    const double diff = beta[0] - beta[1];
    geom.residual = problem.response -
                    (sum * (geom.psi1 + geom.psi2) + diff * (geom.psi1 - geom.psi2)) /
                        (2.0 * geom.alpha);
    return geom;
}

TruncationBox truncation_box(const MirrorGeometry& geometry, const SelectionEvent& event) {
    if (!(geometry.alpha > 0.0)) throw InvalidArgumentError("alpha must be positive");
    if (geometry.a0.size() != event.A0.rows() || geometry.a1.size() != event.A1.rows())
        throw InvalidArgumentError("geometry loadings do not match the event shape");
    if (geometry.residual.size() != event.A0.cols() && event.A0.rows() > 0)
        throw InvalidArgumentError("residual length does not match the event");

    const Vector q0 = event.b0 - event.A0 * geometry.residual;
    const Vector q1 = event.b1 - event.A1 * geometry.residual;
    const double sum = geometry.beta_plus + geometry.beta_minus;
    const double diff = geometry.beta_plus - geometry.beta_minus;
    return assemble_box(geometry.a0, q0, geometry.a1, q1, geometry.alpha, sum, diff);
}

double mirror_statistic_post(const MirrorGeometry& geometry, const TruncationBox& box,
                             double sigma,
                             const std::optional<std::pair<double, double>>& recenter) {
    return statistic_from_box(geometry.beta_plus + geometry.beta_minus,
                              geometry.beta_plus - geometry.beta_minus, geometry.alpha,
                              sigma, box, recenter);
}

SelectionReport run_gm_lasso(const RegressionProblem& problem, double q,
                             std::uint64_t rng_seed, const GmLassoOptions& options) {
    if (!problem.standardized)
        throw InvalidArgumentError("problem must be standardized");
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgumentError("q must lie in (0, 1)");
    if (options.fixed_lambda && !(*options.fixed_lambda > 0.0))
        throw InvalidArgumentError("fixed penalty must be positive");
    if (options.sigma && !(*options.sigma > 0.0))
        throw InvalidArgumentError("sigma must be positive");

    const Eigen::Index n = problem.n();
    const Eigen::Index p = problem.p();

    SelectionReport report;
    report.target_fdr = q;
    report.seed = rng_seed;
    report.method = "gm-lasso";
    report.statistics.assign(static_cast<std::size_t>(p), std::nullopt);

    const double lam = options.fixed_lambda
                           ? *options.fixed_lambda
                           : cross_validate_lambda(problem, options.cv_folds, rng_seed,
                                                   options.threads);
    report.lambda = lam;

    const LassoFit fit = lasso_fit(problem, lam);
    if (fit.active_set.empty()) {
        report.threshold = kInf;
        report.fdp_estimate = 0.0;
        report.sigma = options.sigma;
        report.diagnostic =
            "active set is empty at the selected penalty; no statistics computed";
        return report;
    }

    const SelectionEvent event = build_selection_event(problem, fit);
    const Eigen::Index s = static_cast<Eigen::Index>(fit.active_set.size());
    const Matrix xs = gather_columns(problem.design, fit.active_set);
    const QrBasis qr(xs);
    const Vector beta_refit = qr.solve(problem.response);

    double sigma;
    if (options.sigma) {
        sigma = *options.sigma;
    } else {
        if (s >= n)
            throw InvalidArgumentError(
                "noise scale cannot be estimated from a saturated refit; supply sigma");
        sigma = std::sqrt((problem.response - xs * beta_refit).squaredNorm() /
                          static_cast<double>(n - s));
        // an exactly interpolated response gives σ̂ = 0; keep the truncated CDFs
        // well defined with a floor far below any statistical scale
        const double floor =
            1e-10 * std::max(std::sqrt(problem.response.squaredNorm() /
                                       static_cast<double>(n)),
                             1e-300);
        if (!(sigma > floor)) sigma = floor;
    }
    report.sigma = sigma;

    // Shared pieces of the per-feature geometry. With u_k the k-th active
    // column residualized against the other active columns:
    //   ψ1+ψ2 = u_k/‖u_k‖² = X_S(X_SᵀX_S)⁻¹e_k,  ‖u_k‖² = 1/[(X_SᵀX_S)⁻¹]_kk,
    //   ψ1−ψ2 = c·z̃/‖u_k‖²,  α = 1/(2‖u_k‖²),
    // so one solve per active column replaces a fresh QR per feature.
    const Vector diag_inv = qr.normal_inverse_diagonal();
    Matrix sum_dirs(n, s);
    for (Eigen::Index k = 0; k < s; ++k) {
        Vector e = Vector::Zero(s);
        e[k] = 1.0;
        sum_dirs.col(k) = xs * qr.solve_normal(e);
    }
    Vector recenter_mean;
    if (options.recenter) {
        Vector coef_active(s);
        for (Eigen::Index k = 0; k < s; ++k)
            coef_active[k] = fit.coefficients[fit.active_set[static_cast<std::size_t>(k)]];
        recenter_mean = xs * coef_active;
    }

    const Vector& y = problem.response;
    parallel_for(
        0, static_cast<int>(s),
        [&](int k) {
            const int feature = fit.active_set[static_cast<std::size_t>(k)];
            RngStream stream(rng_seed,
                             derive_key(stream::kMirror, static_cast<std::uint64_t>(feature)));
            Vector z_tilde;
            double den = 0.0;
            bool usable = false;
            for (int attempt = 0; attempt <= kMaxRedraws && !usable; ++attempt) {
                z_tilde = qr.project_out(stream.normal_vector(n));
                den = z_tilde.squaredNorm();
                usable = den >= kDegenerateNorm;
            }
            if (!usable)
                throw DegeneratePerturbationError(
                    "feature " + std::to_string(feature) +
                    ": perturbation repeatedly degenerate");

            const double d = diag_inv[k];  // = 1/‖u_k‖²
            const double alpha = d / 2.0;
            const double c = std::sqrt(1.0 / (d * den));
            const Vector sum_dir = sum_dirs.col(k);       // ψ1+ψ2
            const Vector diff_dir = (c * d) * z_tilde;    // ψ1−ψ2
            const double sum = sum_dir.dot(y);
            const double diff = diff_dir.dot(y);
            const Vector residual = y - (sum / d) * sum_dir - (diff / d) * diff_dir;

            const Vector a0 = event.A0 * diff_dir / 2.0;
            const Vector a1 = event.A1 * sum_dir / 2.0;
            const Vector q0 = event.b0 - event.A0 * residual;
            const Vector q1 = event.b1 - event.A1 * residual;
            const TruncationBox box = assemble_box(a0, q0, a1, q1, alpha, sum, diff);

            std::optional<std::pair<double, double>> means;
            if (options.recenter)
                means = std::make_pair(sum_dir.dot(recenter_mean),
                                       diff_dir.dot(recenter_mean));
            report.statistics[static_cast<std::size_t>(feature)] =
                statistic_from_box(sum, diff, alpha, sigma, box, means);
        },
        options.threads);

    std::vector<double> present;
    present.reserve(static_cast<std::size_t>(s));
    for (int feature : fit.active_set)
        present.push_back(*report.statistics[static_cast<std::size_t>(feature)]);
    const ThresholdScan scan = select_threshold(present, q);
    report.threshold = scan.threshold;
    report.fdp_estimate = scan.fdp;
    for (int feature : fit.active_set)
        if (*report.statistics[static_cast<std::size_t>(feature)] >= scan.threshold)
            report.selected.push_back(feature);
    return report;
}

}  // namespace gm
