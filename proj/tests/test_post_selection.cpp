#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "gm/normal.hpp"
#include "gm/post_selection.hpp"
#include "gm/rng.hpp"
#include "oracles.hpp"

using namespace gm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Instance {
    RegressionProblem problem;
    Vector truth;
};

Instance make_instance(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                       std::vector<std::pair<int, double>> signals,
                       double noise_sd = 1.0) {
    RngStream xs(seed, derive_key(stream::kDesign, 0));
    RngStream ns(seed, derive_key(stream::kNoise, 0));
    RegressionProblem raw;
    raw.design.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) raw.design.col(j) = xs.normal_vector(n);
    Vector beta = Vector::Zero(p);
    for (auto [j, amp] : signals) beta[j] = amp;
    raw.response = raw.design * beta;
    if (noise_sd > 0.0) raw.response += noise_sd * ns.normal_vector(n);
    return {standardize(raw), beta};
}

Matrix active_columns(const RegressionProblem& prob, const std::vector<int>& sel) {
    Matrix out(prob.n(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t k = 0; k < sel.size(); ++k) out.col(k) = prob.design.col(sel[k]);
    return out;
}

bool satisfies_event(const SelectionEvent& ev, const Vector& y, double tol) {
    const double w0 =
        ev.A0.rows() ? (ev.A0 * y - ev.b0).maxCoeff() : -kInf;
    const double w1 =
        ev.A1.rows() ? (ev.A1 * y - ev.b1).maxCoeff() : -kInf;
    return std::max(w0, w1) <= tol;
}

// distance of y from the nearest constraint boundary
double boundary_margin(const SelectionEvent& ev, const Vector& y) {
    double m = kInf;
    if (ev.A0.rows()) m = std::min(m, (ev.A0 * y - ev.b0).cwiseAbs().minCoeff());
    if (ev.A1.rows()) m = std::min(m, (ev.A1 * y - ev.b1).cwiseAbs().minCoeff());
    return m;
}

}  // namespace

TEST_SUITE("post_selection") {

TEST_CASE("selection event constraints hold strictly on the generating data") {
    const Instance inst =
        make_instance(20, 5, 40, {{0, 3.0}, {2, -2.5}});
    const LassoFit fit = lasso_fit(inst.problem, 0.35 * lambda_max(inst.problem));
    REQUIRE(!fit.active_set.empty());
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    const Eigen::Index s = static_cast<Eigen::Index>(fit.active_set.size());
    CHECK(ev.A0.rows() == 2 * (inst.problem.p() - s));
    CHECK(ev.A0.cols() == inst.problem.n());
    CHECK(ev.b0.size() == ev.A0.rows());
    CHECK(ev.A1.rows() == s);
    CHECK(ev.b1.size() == s);
    CHECK(ev.active_set == fit.active_set);
    CHECK(ev.signs == fit.signs);
    CHECK(ev.penalty == fit.penalty);

    CHECK((ev.A0 * inst.problem.response - ev.b0).maxCoeff() < 0.0);
    CHECK((ev.A1 * inst.problem.response - ev.b1).maxCoeff() < 0.0);
}

TEST_CASE("polyhedron and refitting classify fresh responses identically") {
    const Instance inst =
        make_instance(25, 8, 41, {{1, 3.0}, {5, -3.0}});
    const double lam = 0.4 * lambda_max(inst.problem);
    const LassoFit fit = lasso_fit(inst.problem, lam);
    REQUIRE(!fit.active_set.empty());
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    const Vector mean = inst.problem.design * inst.truth;
    RngStream noise(4141, stream::kNoise);
    int agree = 0, boundary = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        const Vector y2 = mean + noise.normal_vector(inst.problem.n());
        RegressionProblem prob2 = inst.problem;
        prob2.response = y2;
        const LassoFit fit2 = lasso_fit(prob2, lam);
        const bool same_event =
            fit2.active_set == ev.active_set && fit2.signs == ev.signs;
        const bool inside = satisfies_event(ev, y2, 0.0);
        if (same_event == inside) {
            ++agree;
        } else if (boundary_margin(ev, y2) <= 1e-6) {
            ++boundary;  // knife-edge responses may tip either way
        }
    }
    CHECK(agree + boundary == reps);
    CHECK(agree >= 1998);
}

TEST_CASE("inactive-column permutation permutes the exclusion rows") {
    const Instance inst = make_instance(30, 6, 42, {{0, 4.0}});
    const LassoFit fit = lasso_fit(inst.problem, 0.5 * lambda_max(inst.problem));
    REQUIRE(!fit.active_set.empty());
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    // locate two inactive features and swap their columns
    std::vector<int> inactive;
    for (int j = 0; j < inst.problem.p(); ++j)
        if (!std::binary_search(fit.active_set.begin(), fit.active_set.end(), j))
            inactive.push_back(j);
    REQUIRE(inactive.size() >= 2);
    const int ia = inactive[0], ib = inactive[1];
    RegressionProblem swapped = inst.problem;
    swapped.design.col(ia).swap(swapped.design.col(ib));
    const SelectionEvent ev2 = build_selection_event(swapped, fit);

    const Eigen::Index m = static_cast<Eigen::Index>(inactive.size());
    const auto row_of = [&](int feature) {
        return static_cast<Eigen::Index>(
            std::find(inactive.begin(), inactive.end(), feature) - inactive.begin());
    };
    for (Eigen::Index k = 0; k < m; ++k) {
        Eigen::Index src = k;
        if (k == row_of(ia)) src = row_of(ib);
        if (k == row_of(ib)) src = row_of(ia);
        CHECK((ev2.A0.row(k) - ev.A0.row(src)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((ev2.A0.row(m + k) - ev.A0.row(m + src)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(ev2.b0[k] == doctest::Approx(ev.b0[src]).epsilon(1e-12));
        CHECK(ev2.b0[m + k] == doctest::Approx(ev.b0[m + src]).epsilon(1e-12));
    }
}

TEST_CASE("negating an active column flips its sign but not the event set") {
    const Instance inst = make_instance(30, 6, 43, {{0, 4.0}, {3, 2.5}});
    const double lam = 0.3 * lambda_max(inst.problem);
    const LassoFit fit = lasso_fit(inst.problem, lam);
    REQUIRE(fit.active_set.size() >= 2);
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    const int a = fit.active_set[0];
    RegressionProblem flipped = inst.problem;
    flipped.design.col(a) *= -1.0;
    const LassoFit fit2 = lasso_fit(flipped, lam);
    REQUIRE(fit2.active_set == fit.active_set);
    CHECK(fit2.coefficients[a] == doctest::Approx(-fit.coefficients[a]).epsilon(1e-8));
    CHECK(fit2.signs[0] == -fit.signs[0]);

    // the flip reparametrizes the problem; the set of responses producing the
    // (suitably flipped) fit is unchanged, hence so are the constraints
    const SelectionEvent ev2 = build_selection_event(flipped, fit2);
    CHECK((ev2.A1 - ev.A1).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((ev2.b1 - ev.b1).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((ev2.A0 - ev.A0).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((ev2.b0 - ev.b0).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("event construction rejects a penalty-convention mismatch") {
    const Instance inst = make_instance(30, 6, 44, {{0, 4.0}});
    LassoFit fit = lasso_fit(inst.problem, 0.3 * lambda_max(inst.problem));
    REQUIRE(!fit.active_set.empty());
    fit.penalty *= 4.0;  // as if λ had been stated in a different convention
    CHECK_THROWS_AS(build_selection_event(inst.problem, fit),
                    InconsistentEventError);

    LassoFit empty = fit;
    empty.active_set.clear();
    CHECK_THROWS_AS(build_selection_event(inst.problem, empty),
                    InvalidArgumentError);
}

TEST_CASE("post scale: single active feature reduces to a norm ratio") {
    const Instance inst = make_instance(40, 6, 45, {{2, 5.0}});
    const LassoFit fit = lasso_fit(inst.problem, 0.6 * lambda_max(inst.problem));
    REQUIRE(fit.active_set == std::vector<int>{2});
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    RngStream zs(9, 9);
    const Vector z = zs.normal_vector(inst.problem.n());
    const PostScale ps = compute_cj_post(inst.problem, ev, 0, z);

    const Matrix xs = active_columns(inst.problem, fit.active_set);
    const Vector zt_direct = z - xs * (xs.transpose() * xs).inverse() *
                                     (xs.transpose() * z);
    CHECK((ps.z_tilde - zt_direct).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(ps.c == doctest::Approx(inst.problem.design.col(2).norm() /
                                  ps.z_tilde.norm())
                      .epsilon(1e-12));
    CHECK(std::abs(xs.col(0).dot(ps.z_tilde)) <= 1e-8);
}

TEST_CASE("post scale matches the explicit projector formula") {
    const Instance inst =
        make_instance(50, 10, 46, {{0, 3.0}, {4, -2.0}, {7, 2.0}});
    const LassoFit fit = lasso_fit(inst.problem, 0.2 * lambda_max(inst.problem));
    REQUIRE(fit.active_set.size() >= 3);
    const SelectionEvent ev = build_selection_event(inst.problem, fit);
    const Matrix xs = active_columns(inst.problem, fit.active_set);

    RngStream zs(10, 10);
    for (int pos = 0; pos < static_cast<int>(fit.active_set.size()); ++pos) {
        const Vector z = zs.normal_vector(inst.problem.n());
        const PostScale ps = compute_cj_post(inst.problem, ev, pos, z);
        CHECK((xs.transpose() * ps.z_tilde).cwiseAbs().maxCoeff() <= 1e-8);

        Matrix rest(inst.problem.n(), xs.cols() - 1);
        Eigen::Index k = 0;
        for (Eigen::Index c = 0; c < xs.cols(); ++c)
            if (c != pos) rest.col(k++) = xs.col(c);
        const Matrix P = oracle::projection_matrix(rest);
        const Matrix I = Matrix::Identity(inst.problem.n(), inst.problem.n());
        const Vector x = xs.col(pos);
        const double direct = std::sqrt(x.dot((I - P) * x) /
                                        ps.z_tilde.dot((I - P) * ps.z_tilde));
        CHECK(ps.c == doctest::Approx(direct).epsilon(1e-8));
    }

    // a perturbation inside the active span is degenerate
    Vector w(xs.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 1.0 + static_cast<double>(i);
    const Vector in_span = xs * w;
    CHECK_THROWS_AS(compute_cj_post(inst.problem, ev, 0, in_span),
                    DegeneratePerturbationError);
}

TEST_CASE("mirror geometry satisfies its structural identities") {
    const Instance inst =
        make_instance(60, 20, 47, {{1, 3.0}, {8, -2.5}, {15, 2.0}});
    const LassoFit fit = lasso_fit(inst.problem, 0.25 * lambda_max(inst.problem));
    REQUIRE(fit.active_set.size() >= 3);
    const SelectionEvent ev = build_selection_event(inst.problem, fit);
    const Matrix xs = active_columns(inst.problem, fit.active_set);

    RngStream zs(11, 11);
    for (int pos = 0; pos < static_cast<int>(fit.active_set.size()); ++pos) {
        const Vector z = zs.normal_vector(inst.problem.n());
        const PostScale ps = compute_cj_post(inst.problem, ev, pos, z);
        const MirrorGeometry g =
            mirror_geometry(inst.problem, ev, pos, ps.c, ps.z_tilde);

        // β̂± agree with a direct least-squares fit of the mirrored design
        Matrix aug(inst.problem.n(), xs.cols() + 1);
        aug.col(0) = xs.col(pos) + ps.c * ps.z_tilde;
        aug.col(1) = xs.col(pos) - ps.c * ps.z_tilde;
        Eigen::Index k = 2;
        for (Eigen::Index c = 0; c < xs.cols(); ++c)
            if (c != pos) aug.col(k++) = xs.col(c);
        const Vector beta = least_squares(aug, inst.problem.response);
        CHECK(g.beta_plus == doctest::Approx(beta[0]).epsilon(1e-8));
        CHECK(g.beta_minus == doctest::Approx(beta[1]).epsilon(1e-8));
        CHECK(g.beta_plus == doctest::Approx(g.psi1.dot(inst.problem.response))
                                 .epsilon(1e-10));
        CHECK(g.beta_minus == doctest::Approx(g.psi2.dot(inst.problem.response))
                                  .epsilon(1e-10));

        // equal norms, orthogonal sum/difference directions
        CHECK(std::abs(g.psi1.squaredNorm() - g.psi2.squaredNorm()) <=
              1e-8 * g.psi1.squaredNorm());
        CHECK(g.alpha == doctest::Approx(g.psi1.squaredNorm()).epsilon(1e-10));
        CHECK(std::abs((g.psi1 + g.psi2).dot(g.psi1 - g.psi2)) <= 1e-8);

        // rank-one action of the constraint blocks
        CHECK((ev.A0 * (g.psi1 + g.psi2)).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((ev.A1 * (g.psi1 - g.psi2)).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((ev.A0 * (g.psi1 - g.psi2) / 2.0 - g.a0).cwiseAbs().maxCoeff() <=
              1e-10);
        CHECK((ev.A1 * (g.psi1 + g.psi2) / 2.0 - g.a1).cwiseAbs().maxCoeff() <=
              1e-10);

        // residual lies outside span(ψ1, ψ2)
        CHECK(std::abs(g.psi1.dot(g.residual)) <= 1e-8);
        CHECK(std::abs(g.psi2.dot(g.residual)) <= 1e-8);

        // closed forms against the explicit partial-projection vector
        Matrix rest = aug.rightCols(xs.cols() - 1);
        const Vector u = xs.col(pos) - oracle::projection_matrix(rest) * xs.col(pos);
        const double usq = u.squaredNorm();
        CHECK(g.alpha == doctest::Approx(1.0 / (2.0 * usq)).epsilon(1e-8));
        CHECK(((g.psi1 + g.psi2) - u / usq).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(((g.psi1 - g.psi2) - ps.c * ps.z_tilde / usq).cwiseAbs().maxCoeff() <=
              1e-8);
    }
}

TEST_CASE("truncation endpoints follow the loading classification") {
    // hand-built geometry: the box must be computed as α·(b−A·r)/a with the
    // rows split by the sign of a
    SelectionEvent ev;
    ev.A0 = Matrix::Zero(3, 4);
    ev.b0 = Vector(3);
    ev.b0 << 1.0, 2.0, 0.3;
    ev.A1 = Matrix::Zero(2, 4);
    ev.b1 = Vector(2);
    ev.b1 << 0.9, 1.1;
    ev.penalty = 1.0;

    MirrorGeometry g;
    g.residual = Vector::Zero(4);  // so b − A·r = b
    g.alpha = 0.4;
    g.a0 = Vector(3);
    g.a0 << 0.5, -0.25, 1e-18;  // below 1e-10·max|a| ⇒ slack row
    g.a1 = Vector(2);
    g.a1 << 0.3, -0.45;
    g.psi1 = Vector::Zero(4);
    g.psi2 = Vector::Zero(4);
    g.beta_plus = 0.3;   // sum 0.4 ∈ [−0.978, 1.2], diff 0.2 ∈ [−3.2, 0.8]
    g.beta_minus = 0.1;

    const TruncationBox box = truncation_box(g, ev);
    CHECK(box.diff_hi == doctest::Approx(0.4 * 1.0 / 0.5).epsilon(1e-12));
    CHECK(box.diff_lo == doctest::Approx(0.4 * 2.0 / -0.25).epsilon(1e-12));
    CHECK(box.slack0 == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(box.sum_hi == doctest::Approx(0.4 * 0.9 / 0.3).epsilon(1e-12));
    CHECK(box.sum_lo == doctest::Approx(0.4 * 1.1 / -0.45).epsilon(1e-12));
    CHECK(box.slack1 == kInf);

    SUBCASE("one-sided loadings leave the other side unbounded") {
        MirrorGeometry g2 = g;
        g2.a0 << 0.5, 0.25, 0.125;
        const TruncationBox b2 = truncation_box(g2, ev);
        CHECK(b2.diff_lo == -kInf);
        CHECK(b2.diff_hi == doctest::Approx(0.4 * 1.0 / 0.5).epsilon(1e-12));
        CHECK(b2.slack0 == kInf);
    }
    SUBCASE("an observed coordinate outside its interval is rejected") {
        MirrorGeometry g3 = g;
        g3.beta_plus = 5.0;  // diff = 4.9 ≫ diff_hi = 0.8
        g3.beta_minus = 0.1;
        CHECK_THROWS_AS(truncation_box(g3, ev), InconsistentEventError);
    }
}

TEST_CASE("box endpoints are exactly where the event flips") {
    const Instance inst =
        make_instance(30, 10, 48, {{0, 3.5}, {6, -3.0}});
    const LassoFit fit = lasso_fit(inst.problem, 0.35 * lambda_max(inst.problem));
    REQUIRE(fit.active_set.size() >= 2);
    const SelectionEvent ev = build_selection_event(inst.problem, fit);
    const Matrix xs = active_columns(inst.problem, fit.active_set);

    RngStream zs(12, 12);
    for (int pos = 0; pos < static_cast<int>(fit.active_set.size()); ++pos) {
        const Vector z = zs.normal_vector(inst.problem.n());
        const PostScale ps = compute_cj_post(inst.problem, ev, pos, z);
        const MirrorGeometry g =
            mirror_geometry(inst.problem, ev, pos, ps.c, ps.z_tilde);
        const TruncationBox box = truncation_box(g, ev);

        const double sum = g.beta_plus + g.beta_minus;
        const double diff = g.beta_plus - g.beta_minus;
        CHECK(sum >= box.sum_lo);
        CHECK(sum <= box.sum_hi);
        CHECK(diff >= box.diff_lo);
        CHECK(diff <= box.diff_hi);
        CHECK(box.slack0 > -1e-8);
        CHECK(box.slack1 > -1e-8);

        // rebuild y(sum', diff') = sum'·u + diff'·c·z̃ + r and verify membership
        // flips exactly at the computed endpoints
        const Vector u = (g.psi1 + g.psi2) / (2.0 * g.alpha);
        const Vector dir = ps.c * ps.z_tilde;
        auto rebuild_diff = [&](double dv) -> Vector {
            return sum * u + dv * dir + g.residual;
        };
        auto rebuild_sum = [&](double sv) -> Vector {
            return sv * u + diff * dir + g.residual;
        };
        const Vector roundtrip = rebuild_diff(diff);
        CHECK((roundtrip - inst.problem.response).cwiseAbs().maxCoeff() <= 1e-8);

        for (double lim : {box.diff_lo, box.diff_hi}) {
            if (!std::isfinite(lim)) continue;
            const double eps = 1e-7 * (1.0 + std::abs(lim));
            CHECK(satisfies_event(ev, rebuild_diff(lim - std::copysign(eps, lim - diff)),
                                  1e-9));
            CHECK(!satisfies_event(ev, rebuild_diff(lim + std::copysign(eps, lim - diff)),
                                   -1e-9));
        }
        for (double lim : {box.sum_lo, box.sum_hi}) {
            if (!std::isfinite(lim)) continue;
            const double eps = 1e-7 * (1.0 + std::abs(lim));
            CHECK(satisfies_event(ev, rebuild_sum(lim - std::copysign(eps, lim - sum)),
                                  1e-9));
            CHECK(!satisfies_event(ev, rebuild_sum(lim + std::copysign(eps, lim - sum)),
                                   -1e-9));
        }
    }
}

TEST_CASE("truncated statistic reduces to the plain mirror difference") {
    MirrorGeometry g;
    g.alpha = 0.125;  // s = σ√(2α) = 0.5 at σ = 1
    g.beta_plus = 0.8;
    g.beta_minus = 0.3;

    TruncationBox open_box{-kInf, kInf, -kInf, kInf, kInf, kInf};
    const double plain = std::abs(0.8 + 0.3) - std::abs(0.8 - 0.3);
    CHECK(mirror_statistic_post(g, open_box, 1.0) ==
          doctest::Approx(plain).epsilon(1e-9));
    CHECK(mirror_statistic_post(g, open_box, 2.0) ==
          doctest::Approx(plain).epsilon(1e-9));

    SUBCASE("median sum zeroes the first term") {
        MirrorGeometry g2 = g;
        g2.beta_plus = 0.7;
        g2.beta_minus = -0.7;  // sum = 0, diff = 1.4
        TruncationBox sym{-1.0, 1.0, -kInf, kInf, kInf, kInf};
        const double s = std::sqrt(2.0 * g2.alpha);
        const double expect = -std::abs(1.4);
        CHECK(mirror_statistic_post(g2, sym, 1.0) ==
              doctest::Approx(expect).epsilon(1e-9));
        (void)s;
    }
    SUBCASE("bad sigma is rejected") {
        CHECK_THROWS_AS(mirror_statistic_post(g, open_box, 0.0),
                        InvalidArgumentError);
    }
    SUBCASE("deep truncation stays finite through the quantile clamp") {
        MirrorGeometry g3 = g;
        g3.beta_plus = 8.6;
        g3.beta_minus = 8.4;  // sum 17, diff 0.2
        TruncationBox far{16.0, 18.0, -1.0, 1.0, kInf, kInf};
        const double m = mirror_statistic_post(g3, far, 1.0);
        CHECK(std::isfinite(m));
        const double s = std::sqrt(2.0 * 0.125);
        CHECK(std::abs(m) <= 8.29 * s * 2.0);
    }
}

TEST_CASE("null statistics fall on either side of zero evenly") {
    const Instance base = make_instance(120, 200, 49, {});  // pure noise
    RngStream noise(6161, stream::kNoise);
    int positive = 0, counted = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        RegressionProblem prob = base.problem;
        prob.response = noise.normal_vector(prob.n());
        GmLassoOptions opt;
        opt.fixed_lambda = 0.3 * lambda_max(prob);
        opt.sigma = 1.0;
        opt.threads = 1;
        const SelectionReport rep = run_gm_lasso(prob, 0.1, 5000 + r, opt);
        for (const auto& st : rep.statistics) {
            if (st.has_value()) {  // first active feature only
                ++counted;
                if (*st > 0) ++positive;
                break;
            }
        }
    }
    REQUIRE(counted >= 1900);
    const double freq = static_cast<double>(positive) / counted;
    CHECK(freq >= 0.47);
    CHECK(freq <= 0.53);
    CHECK(oracle::binomial_two_sided_p(counted, positive, 0.5) >= 0.01);
}

TEST_CASE("conditional law of the difference coordinate is uniform") {
    const Instance inst = make_instance(25, 8, 50, {{2, 4.0}, {6, 4.0}});
    const double lam = 0.35 * lambda_max(inst.problem);
    const LassoFit fit = lasso_fit(inst.problem, lam);
    REQUIRE(!fit.active_set.empty());
    const SelectionEvent ev = build_selection_event(inst.problem, fit);

    RngStream zs(13, 13);
    const Vector z = zs.normal_vector(inst.problem.n());
    const PostScale ps = compute_cj_post(inst.problem, ev, 0, z);

    // the difference coordinate projects onto z̃ ⊥ X_Ŝ, so as long as the true
    // mean lies in the active span its pivot has mean zero; replicates drawn
    // from the signal model that reproduce (Ŝ, ŝ) must then give uniform pivots
    for (int feature : {2, 6})
        REQUIRE(std::binary_search(ev.active_set.begin(), ev.active_set.end(),
                                   feature));
    const Vector mean = inst.problem.design * inst.truth;
    RngStream noise(7171, stream::kNoise);
    std::vector<double> pivots;
    int tries = 0;
    while (pivots.size() < 1200 && tries < 50000) {
        ++tries;
        const Vector y2 = mean + noise.normal_vector(inst.problem.n());
        if (!satisfies_event(ev, y2, 0.0)) continue;
        RegressionProblem prob2 = inst.problem;
        prob2.response = y2;
        const MirrorGeometry g = mirror_geometry(prob2, ev, 0, ps.c, ps.z_tilde);
        const TruncationBox box = truncation_box(g, ev);
        const double s = std::sqrt(2.0 * g.alpha);
        pivots.push_back(truncated_normal_cdf(g.beta_plus - g.beta_minus, 0.0, s,
                                              box.diff_lo, box.diff_hi));
    }
    REQUIRE(pivots.size() >= 500);
    CHECK(oracle::ks_uniform_p(pivots) >= 0.01);
}

TEST_CASE("full run selects a lone strong signal") {
    int exact = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Instance inst = make_instance(100, 300, 600 + s, {{0, 5.0}}, 0.0);
        const SelectionReport rep = run_gm_lasso(inst.problem, 0.1, 600 + s);
        if (rep.selected == std::vector<int>{0}) ++exact;
    }
    CHECK(exact >= 95);
}

TEST_CASE("reports are deterministic and structurally sound") {
    const Instance inst =
        make_instance(80, 120, 51, {{3, 3.0}, {40, -3.0}, {90, 2.5}});
    GmLassoOptions opt;
    opt.threads = 1;
    const SelectionReport a = run_gm_lasso(inst.problem, 0.2, 77, opt);
    opt.threads = 3;
    const SelectionReport b = run_gm_lasso(inst.problem, 0.2, 77, opt);

    REQUIRE(a.statistics.size() == b.statistics.size());
    for (std::size_t j = 0; j < a.statistics.size(); ++j) {
        CHECK(a.statistics[j].has_value() == b.statistics[j].has_value());
        if (a.statistics[j])
            CHECK(*a.statistics[j] == *b.statistics[j]);
    }
    CHECK(a.selected == b.selected);
    CHECK(a.threshold == b.threshold);
    CHECK(a.method == "gm-lasso");
    CHECK(a.target_fdr == 0.2);
    CHECK(a.seed == 77);
    REQUIRE(a.lambda.has_value());
    CHECK(*a.lambda > 0.0);
    REQUIRE(a.sigma.has_value());
    CHECK(*a.sigma > 0.0);
    CHECK(std::is_sorted(a.selected.begin(), a.selected.end()));

    // statistics exist exactly on the refit active set
    const LassoFit fit = lasso_fit(inst.problem, *a.lambda);
    for (int j = 0; j < inst.problem.p(); ++j) {
        const bool active = std::binary_search(fit.active_set.begin(),
                                               fit.active_set.end(), j);
        CHECK(a.statistics[j].has_value() == active);
    }
    for (int j : a.selected) {
        REQUIRE(a.statistics[j].has_value());
        CHECK(*a.statistics[j] >= a.threshold);
    }
    if (std::isfinite(a.threshold)) CHECK(a.fdp_estimate <= 0.2);
}

TEST_CASE("statistics agree with the single-feature reference route") {
    const Instance inst =
        make_instance(60, 40, 52, {{5, 3.5}, {11, -3.0}, {29, 3.0}});
    GmLassoOptions opt;
    opt.fixed_lambda = 0.25 * lambda_max(inst.problem);
    opt.sigma = 1.0;
    opt.threads = 1;
    const std::uint64_t seed = 314;
    const SelectionReport rep = run_gm_lasso(inst.problem, 0.3, seed, opt);

    const LassoFit fit = lasso_fit(inst.problem, *opt.fixed_lambda);
    REQUIRE(fit.active_set.size() >= 3);
    const SelectionEvent ev = build_selection_event(inst.problem, fit);
    for (int pos = 0; pos < static_cast<int>(fit.active_set.size()); ++pos) {
        const int feature = fit.active_set[pos];
        RngStream stream(seed, derive_key(stream::kMirror,
                                          static_cast<std::uint64_t>(feature)));
        const Vector z = stream.normal_vector(inst.problem.n());
        const PostScale ps = compute_cj_post(inst.problem, ev, pos, z);
        const MirrorGeometry g =
            mirror_geometry(inst.problem, ev, pos, ps.c, ps.z_tilde);
        const TruncationBox box = truncation_box(g, ev);
        const double direct = mirror_statistic_post(g, box, 1.0);
        REQUIRE(rep.statistics[feature].has_value());
        CHECK(*rep.statistics[feature] ==
              doctest::Approx(direct).epsilon(1e-8));
    }
}

TEST_CASE("screening keeps true signals inside the active set") {
    // fixed-magnitude signals, strong enough for the minimum-signal condition
    // behind the rate-based penalty: the active set should contain every
    // signal in nearly all runs while staying far from saturation
    const Eigen::Index n = 300, p = 1000;
    const int k_signals = 10;
    int covered = 0;
    double active_sum = 0.0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const std::uint64_t master = derive_key(stream::kReplicate, r);
        RngStream xs(master, stream::kDesign);
        RngStream ts(master, stream::kTruth);
        RngStream ns(master, stream::kNoise);
        RegressionProblem raw;
        raw.design.resize(n, p);
        for (Eigen::Index j = 0; j < p; ++j) raw.design.col(j) = xs.normal_vector(n);
        Vector beta = Vector::Zero(p);
        std::vector<int> idx(p);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < k_signals; ++i)
            std::swap(idx[i], idx[i + ts.integer(p - i)]);
        const double amp = 2.0;
        for (int i = 0; i < k_signals; ++i)
            beta[idx[i]] = ts.uniform() < 0.5 ? amp : -amp;
        raw.response = raw.design * beta + ns.normal_vector(n);
        const RegressionProblem prob = standardize(raw);

        const LassoFit fit = lasso_fit(prob, theoretical_lambda(prob, 1.0));
        active_sum += static_cast<double>(fit.active_set.size());
        bool all = true;
        for (int i = 0; i < k_signals; ++i)
            if (!std::binary_search(fit.active_set.begin(), fit.active_set.end(),
                                    idx[i]))
                all = false;
        if (all) ++covered;
    }
    CHECK(covered >= 94);  // 1 − 2/p − 0.05 of 100 runs
    CHECK(active_sum / 100.0 >= k_signals * 0.9);
    CHECK(active_sum / 100.0 <= 220.0);
}

TEST_CASE("an empty active set produces an empty diagnostic report") {
    const Instance inst = make_instance(50, 30, 53, {});
    GmLassoOptions opt;
    opt.fixed_lambda = lambda_max(inst.problem) * 1.5;
    const SelectionReport rep = run_gm_lasso(inst.problem, 0.1, 1, opt);
    CHECK(rep.selected.empty());
    CHECK(std::isinf(rep.threshold));
    CHECK(rep.fdp_estimate == 0.0);
    for (const auto& st : rep.statistics) CHECK(!st.has_value());
    CHECK(!rep.diagnostic.empty());
}

}  // TEST_SUITE
