#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>

#include "rulgp/common.hpp"

namespace rulgp {

/// Fitted truncated SVD basis. `right_basis` holds the first `rank` right
/// singular vectors (n x t, orthonormal columns); `singular_values` keeps the
/// full non-increasing spectrum so reconstruction error can be audited.
/// `column_means` is subtracted from rows before projection; it is zero when
/// the basis was fitted on an already-centered matrix.
struct SvdBasis {
    Eigen::VectorXd column_means;
    Eigen::VectorXd singular_values;
    Eigen::MatrixXd right_basis;
    int rank = 0;

    Eigen::Index input_dim() const { return right_basis.rows(); }
};

/// Minimal t whose leading singular values reach `threshold` of the total
/// singular mass: sum_{i<=t} sigma_i >= threshold * sum_j sigma_j. Ties
/// resolve to the smaller t.
inline int select_rank(const Eigen::VectorXd& singular_values, double threshold = 0.9) {
    if (singular_values.size() == 0) throw InputError("select_rank: empty spectrum");
    double total = 0.0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
        const double s = singular_values[i];
        if (!(s >= 0.0)) throw InputError("select_rank: negative or non-finite singular value");
        if (i > 0 && s > singular_values[i - 1] + 1e-12 * singular_values[0])
            throw InputError("select_rank: spectrum is not non-increasing");
        total += s;
    }
    if (total <= 0.0) throw InputError("select_rank: all-zero spectrum is degenerate");

    double partial = 0.0;
    for (Eigen::Index t = 0; t < singular_values.size(); ++t) {
        partial += singular_values[t];
        if (partial >= threshold * total) return static_cast<int>(t) + 1;
    }
    return static_cast<int>(singular_values.size());
}

/// Decomposes X (taken as given, already centered) and truncates at the rank
/// chosen by select_rank.
inline SvdBasis fit_svd(const Eigen::MatrixXd& X, double threshold = 0.9) {
    if (X.rows() < 1 || X.cols() < 1) throw InputError("fit_svd: empty matrix");
    if (!X.allFinite()) throw InputError("fit_svd: non-finite entries");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    SvdBasis basis;
    basis.column_means = Eigen::VectorXd::Zero(X.cols());
    basis.singular_values = svd.singularValues();
    basis.rank = select_rank(basis.singular_values, threshold);
    basis.right_basis = svd.matrixV().leftCols(basis.rank);
    return basis;
}

/// Centers X by its column means, fits the basis on the centered matrix, and
/// stores the means so unseen rows are centered identically at projection.
inline SvdBasis fit_svd_centered(const Eigen::MatrixXd& X, double threshold = 0.9) {
    if (X.rows() < 1) throw InputError("fit_svd: empty matrix");
    const Eigen::VectorXd means = X.colwise().mean();
    SvdBasis basis = fit_svd(X.rowwise() - means.transpose(), threshold);
    basis.column_means = means;
    return basis;
}

/// Projects rows onto the truncated basis: (rows - column_means) * V_t.
/// On the training matrix itself this reproduces U_t Sigma_t.
inline Eigen::MatrixXd project(const Eigen::MatrixXd& rows, const SvdBasis& basis) {
    if (rows.cols() != basis.input_dim())
        throw InputError("project: rows have " + std::to_string(rows.cols()) +
                         " columns, basis expects " + std::to_string(basis.input_dim()));
    return (rows.rowwise() - basis.column_means.transpose()) * basis.right_basis;
}

inline Eigen::VectorXd project_row(const Eigen::VectorXd& row, const SvdBasis& basis) {
    if (row.size() != basis.input_dim()) throw InputError("project: row dimension mismatch");
    return basis.right_basis.transpose() * (row - basis.column_means);
}

}  // namespace rulgp
