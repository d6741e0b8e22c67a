#pragma once

#include <Eigen/Dense>

#include "gm/errors.hpp"

namespace gm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative pivot threshold below which a QR factor is treated as rank deficient.
inline constexpr double kRankTolerance = 1e-10;

// A regression data set: n×p design plus length-n response. Columns of a
// standardized problem are centered with squared norm n; `center` and `scale`
// record the affine map back to original units (x_orig = x_std * scale + center,
// applied columnwise), composing across repeated standardization.
struct RegressionProblem {
    Matrix design;
    Vector response;
    bool standardized = false;
    Vector center;  // per-column offsets removed (empty until standardized)
    Vector scale;   // per-column divisors applied (empty until standardized)

    Eigen::Index n() const { return design.rows(); }
    Eigen::Index p() const { return design.cols(); }
};

// Center every column and rescale it to squared norm n. Idempotent; scaling
// metadata composes so coefficients can always be mapped back to input units.
// Throws InvalidArgumentError naming the first constant column, if any.
RegressionProblem standardize(const RegressionProblem& problem);

// Minimum of ‖y − Xβ‖² over β via column-pivoted thin QR. The design must have
// full column rank: a pivot below kRankTolerance·(max pivot) raises
// SingularDesignError carrying the number of deficient columns.
Vector least_squares(const Matrix& design, const Vector& response);

// Residual of v after removing its projection onto span(basis): (I − P_B)v.
// An empty basis (0 columns) returns v unchanged. Rank-deficient bases raise
// SingularDesignError.
Vector project_out(const Vector& v, const Matrix& basis);

// Thin QR of a full-column-rank matrix, reused where several projections or
// normal-equation solves against the same design are needed.
class QrBasis {
public:
    explicit QrBasis(const Matrix& m);

    Eigen::Index cols() const { return thin_q_.cols(); }
    const Matrix& thin_q() const { return thin_q_; }

    // (I − P)v where P projects onto the column span.
    Vector project_out(const Vector& v) const;
    // Least-squares coefficients against the factored matrix.
    Vector solve(const Vector& rhs) const;
    // Solves (MᵀM)w = rhs using the triangular factor only.
    Vector solve_normal(const Vector& rhs) const;
    // Diagonal of (MᵀM)⁻¹.
    Vector normal_inverse_diagonal() const;

private:
    Matrix thin_q_;                            // n×k orthonormal columns
    Matrix r_;                                 // k×k upper triangular
    Eigen::PermutationMatrix<Eigen::Dynamic> perm_;
};

}  // namespace gm
