#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gm/lasso.hpp"
#include "gm/rng.hpp"
#include "oracles.hpp"

using namespace gm;

namespace {

RegressionProblem random_problem(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                 double signal_amp = 0.0, int signal_count = 0) {
    RngStream xs(seed, derive_key(stream::kDesign, 0));
    RngStream ys(seed, derive_key(stream::kNoise, 0));
    RegressionProblem raw;
    raw.design.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j) raw.design.col(j) = xs.normal_vector(n);
    raw.response = ys.normal_vector(n);
    for (int j = 0; j < signal_count; ++j)
        raw.response += signal_amp * raw.design.col(j);
    return standardize(raw);
}

RegressionProblem orthogonal_problem(Eigen::Index n, Eigen::Index p,
                                     std::uint64_t seed) {
    RngStream xs(seed, derive_key(stream::kDesign, 1));
    RngStream ys(seed, derive_key(stream::kNoise, 1));
    Matrix raw(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        raw.col(j) = xs.normal_vector(n);
        raw.col(j).array() -= raw.col(j).mean();
    }
    Eigen::HouseholderQR<Matrix> qr(raw);
    RegressionProblem prob;
    prob.design = (qr.householderQ() * Matrix::Identity(n, p)) *
                  std::sqrt(static_cast<double>(n));
    prob.response = ys.normal_vector(n) + 2.0 * prob.design.col(0) -
                    0.7 * prob.design.col(1);
    return standardize(prob);
}

double objective_of(const RegressionProblem& prob, const Vector& b, double lam) {
    return (prob.response - prob.design * b).squaredNorm() +
           lam * b.template lpNorm<1>();
}

double soft(double a, double k) {
    if (a > k) return a - k;
    if (a < -k) return a + k;
    return 0.0;
}

}  // namespace

TEST_SUITE("lasso") {

TEST_CASE("penalty ceiling shrinks everything to zero") {
    const RegressionProblem prob = random_problem(50, 12, 21);
    const double lmax = lambda_max(prob);
    const double direct =
        2.0 * (prob.design.transpose() * prob.response).cwiseAbs().maxCoeff();
    CHECK(lmax == doctest::Approx(direct).epsilon(1e-14));

    for (double lam : {lmax, lmax * 1.01, lmax * 10.0}) {
        const LassoFit fit = lasso_fit(prob, lam);
        CHECK(fit.coefficients.cwiseAbs().maxCoeff() == 0.0);
        CHECK(fit.active_set.empty());
        CHECK(fit.objective ==
              doctest::Approx(prob.response.squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("orthogonal designs reduce to coordinate soft-thresholding") {
    const RegressionProblem prob = orthogonal_problem(64, 8, 33);
    const double lmax = lambda_max(prob);
    for (double lam : {lmax * 0.5, lmax * 0.1, lmax * 0.01}) {
        const LassoFit fit = lasso_fit(prob, lam);
        for (Eigen::Index j = 0; j < prob.p(); ++j) {
            const double xty = prob.design.col(j).dot(prob.response);
            const double oracle_beta =
                soft(xty, lam / 2.0) / prob.design.col(j).squaredNorm();
            CHECK(fit.coefficients[j] == doctest::Approx(oracle_beta).epsilon(1e-10));
        }
    }
}

TEST_CASE("stationarity conditions hold at the reported solution") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const bool highdim = seed % 2 == 0;
        const RegressionProblem prob = highdim
                                           ? random_problem(100, 200, seed, 3.0, 5)
                                           : random_problem(100, 20, seed, 3.0, 3);
        const double lam = lambda_max(prob) * 0.1;
        const LassoFit fit = lasso_fit(prob, lam);
        CHECK(kkt_residual(prob, fit) <= 1e-6);

        // structural invariants: sorted active set, matching signs, zero clamp
        CHECK(std::is_sorted(fit.active_set.begin(), fit.active_set.end()));
        REQUIRE(fit.signs.size() == fit.active_set.size());
        for (std::size_t k = 0; k < fit.active_set.size(); ++k) {
            const double b = fit.coefficients[fit.active_set[k]];
            CHECK(b != 0.0);
            CHECK(fit.signs[k] == (b > 0 ? 1 : -1));
        }
        for (Eigen::Index j = 0; j < prob.p(); ++j) {
            const bool active = std::binary_search(fit.active_set.begin(),
                                                   fit.active_set.end(), j);
            if (!active) CHECK(fit.coefficients[j] == 0.0);
        }
        CHECK(fit.objective ==
              doctest::Approx(objective_of(prob, fit.coefficients, lam))
                  .epsilon(1e-10));
        CHECK(fit.penalty == lam);
    }
}

TEST_CASE("no random perturbation beats the reported optimum") {
    const RegressionProblem prob = random_problem(100, 200, 99, 2.0, 4);
    const double lam = lambda_max(prob) * 0.15;
    const LassoFit fit = lasso_fit(prob, lam);
    const double base = objective_of(prob, fit.coefficients, lam);

    RngStream rng(4242, 0);
    const double scales[] = {1e-4, 1e-3, 1e-2, 1e-1};
    for (int trial = 0; trial < 1000; ++trial) {
        Vector pert = fit.coefficients;
        const int touched = 1 + static_cast<int>(rng.integer(10));
        const double scale = scales[trial % 4];
        for (int t = 0; t < touched; ++t)
            pert[static_cast<Eigen::Index>(rng.integer(prob.p()))] +=
                scale * rng.normal();
        // slack covers the solver's 1e-6 stationarity tolerance
        CHECK(base <= objective_of(prob, pert, lam) + 1e-6);
    }
}

TEST_CASE("warm starts do not move the optimum along the penalty grid") {
    const RegressionProblem prob = random_problem(60, 30, 55, 2.5, 3);
    const double lmax = lambda_max(prob);
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i)
        grid.push_back(lmax * std::pow(1e-4, i / 49.0));  // descending

    Vector warm = Vector::Zero(prob.p());
    int violations = 0;
    std::size_t prev_active = 0;
    bool first = true;
    for (double lam : grid) {
        const LassoFit with_warm = lasso_fit(prob, lam, &warm);
        const LassoFit cold = lasso_fit(prob, lam);
        CHECK(std::abs(with_warm.objective - cold.objective) <= 1e-8);
        warm = with_warm.coefficients;
        if (!first && with_warm.active_set.size() < prev_active) ++violations;
        prev_active = with_warm.active_set.size();
        first = false;
    }
    // active set should grow as the penalty decays, modulo small plateaus
    WARN(violations <= 2);
}

TEST_CASE("cross validation is deterministic and scale-sane") {
    const RegressionProblem noise = random_problem(60, 30, 777);
    const double l1 = cross_validate_lambda(noise, 5, 2024, 1);
    const double l2 = cross_validate_lambda(noise, 5, 2024, 3);
    CHECK(l1 == l2);
    CHECK(l1 > 0.0);
    CHECK(l1 <= lambda_max(noise));

    SUBCASE("pure noise pushes the penalty into the upper grid half") {
        int upper = 0;
        for (std::uint64_t s = 0; s < 50; ++s) {
            const RegressionProblem prob = random_problem(60, 30, 9000 + s);
            const double lmax = lambda_max(prob);
            const double chosen = cross_validate_lambda(prob, 5, s, 1);
            const double midpoint = lmax * std::pow(1e-4, 25.0 / 49.0);
            if (chosen >= midpoint) ++upper;
        }
        CHECK(upper >= 40);
    }

    SUBCASE("a strong signal survives the chosen penalty") {
        const RegressionProblem prob = random_problem(80, 40, 31415, 10.0, 1);
        const double chosen = cross_validate_lambda(prob, 5, 7, 1);
        const LassoFit fit = lasso_fit(prob, chosen);
        CHECK(fit.coefficients[0] != 0.0);
    }
}

TEST_CASE("rate-based penalty follows the stated formula") {
    // n=300, p=1000 instance: 4·√(log 1000 / 300) ≈ 0.6066 before the
    // objective-convention rescale by n
    const RegressionProblem big = random_problem(300, 1000, 2);
    const double expected_rate = 4.0 * std::sqrt(std::log(1000.0) / 300.0);
    CHECK(expected_rate == doctest::Approx(0.6066).epsilon(5e-4));
    CHECK(theoretical_lambda(big, 1.0) ==
          doctest::Approx(300.0 * expected_rate).epsilon(1e-12));
    CHECK(theoretical_lambda(big, 2.0) ==
          doctest::Approx(2.0 * theoretical_lambda(big, 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(theoretical_lambda(big, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(theoretical_lambda(big, -1.0), InvalidArgumentError);
}

TEST_CASE("solver rejects bad arguments") {
    const RegressionProblem prob = random_problem(40, 8, 3);
    CHECK_THROWS_AS(lasso_fit(prob, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS(lasso_fit(prob, -2.0), InvalidArgumentError);
    RegressionProblem unstd = prob;
    unstd.standardized = false;
    CHECK_THROWS_AS(lasso_fit(unstd, 1.0), InvalidArgumentError);
    CHECK_THROWS_AS(cross_validate_lambda(prob, 1, 0), InvalidArgumentError);
    CHECK_THROWS_AS(cross_validate_lambda(prob, 25, 0), InvalidArgumentError);
}

}  // TEST_SUITE
