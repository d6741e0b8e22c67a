#include "gm/linalg.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>

namespace gm {

namespace {

// Numerical rank from the pivoted triangular factor; pivots are on the
// diagonal in decreasing magnitude.
int pivot_rank(const Matrix& r_factor, Eigen::Index cols) {
    const double max_pivot = std::abs(r_factor(0, 0));
    if (max_pivot == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index k = 0; k < cols; ++k)
        if (std::abs(r_factor(k, k)) > kRankTolerance * max_pivot) ++rank;
    return rank;
}

}  // namespace

RegressionProblem standardize(const RegressionProblem& problem) {
    const Eigen::Index n = problem.design.rows();
    const Eigen::Index p = problem.design.cols();
    if (n < 1) throw InvalidArgumentError("design must have at least one row");
    if (problem.response.size() != n)
        throw InvalidArgumentError("response length does not match design rows");

    RegressionProblem out;
    out.design.resize(n, p);
    out.response = problem.response;
    out.standardized = true;
    Vector prev_center =
        problem.center.size() == p ? problem.center : Vector::Zero(p);
    Vector prev_scale = problem.scale.size() == p ? problem.scale : Vector::Ones(p);
    out.center = Vector::Zero(p);
    out.scale = Vector::Zero(p);

    for (Eigen::Index j = 0; j < p; ++j) {
        const double mu = problem.design.col(j).mean();
        Vector centered = problem.design.col(j).array() - mu;
        const double sq = centered.squaredNorm();
        if (sq <= double(n) * 1e-24 * std::max(1.0, mu * mu))
            throw InvalidArgumentError("constant design column " + std::to_string(j) +
                                       " cannot be standardized");
        const double s = std::sqrt(sq / double(n));
        out.design.col(j) = centered / s;
        // compose with any earlier affine map so original units stay recoverable
        out.center[j] = prev_center[j] + prev_scale[j] * mu;
        out.scale[j] = prev_scale[j] * s;
    }
    return out;
}

Vector least_squares(const Matrix& design, const Vector& response) {
    if (design.rows() != response.size())
        throw InvalidArgumentError("response length does not match design rows");
    if (design.cols() == 0) return Vector(0);
    if (design.rows() < design.cols())
        throw SingularDesignError("more columns than rows",
                                  int(design.cols() - design.rows()));
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    const int rank = pivot_rank(qr.matrixR(), design.cols());
    if (rank < design.cols())
        throw SingularDesignError("rank-deficient design", int(design.cols()) - rank);
    return qr.solve(response);
}

Vector project_out(const Vector& v, const Matrix& basis) {
    if (basis.cols() == 0) return v;
    if (basis.rows() != v.size())
        throw InvalidArgumentError("basis rows do not match vector length");
    return QrBasis(basis).project_out(v);
}

QrBasis::QrBasis(const Matrix& m) {
    if (m.cols() == 0 || m.rows() < m.cols())
        throw SingularDesignError("basis must be tall with at least one column",
                                  int(m.cols() - std::min(m.rows(), m.cols())));
    Eigen::ColPivHouseholderQR<Matrix> qr(m);
    const int rank = pivot_rank(qr.matrixR(), m.cols());
    if (rank < m.cols())
        throw SingularDesignError("rank-deficient basis", int(m.cols()) - rank);
    thin_q_ = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    r_ = qr.matrixR().topLeftCorner(m.cols(), m.cols()).triangularView<Eigen::Upper>();
    perm_ = qr.colsPermutation();
}

Vector QrBasis::project_out(const Vector& v) const {
    return v - thin_q_ * (thin_q_.transpose() * v);
}

Vector QrBasis::solve(const Vector& rhs) const {
    Vector w = r_.triangularView<Eigen::Upper>().solve(thin_q_.transpose() * rhs);
    return perm_ * w;
}

Vector QrBasis::solve_normal(const Vector& rhs) const {
    // (MᵀM)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ
    Vector w = r_.triangularView<Eigen::Upper>().transpose().solve(
        perm_.transpose() * rhs);
    return perm_ * (r_.triangularView<Eigen::Upper>().solve(w));
}

Vector QrBasis::normal_inverse_diagonal() const {
    const Eigen::Index k = r_.cols();
    Matrix r_inv = r_.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
    Vector permuted = r_inv.rowwise().squaredNorm();
    return perm_ * permuted;
}

}  // namespace gm
