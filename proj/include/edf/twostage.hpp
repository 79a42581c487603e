#ifndef EDF_TWOSTAGE_HPP
#define EDF_TWOSTAGE_HPP

#include <Eigen/Dense>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/ridge.hpp"

namespace edf {

// Two-stage residualization baseline. Stage one regresses X on S column by
// column, gamma = (S'S)^{-1} S'X, leaving residuals U = X - S gamma that are
// uncorrelated with S. Stage two fits
//   argmin_{a,b} ||Y - S a - U b||^2 + lambda ||a||^2
// and deploys the S-free prediction yhat = b' u_new. Unlike the deweighting
// models this baseline consumes S at fit and prediction time.
struct TwoStageModel {
    Eigen::MatrixXd gamma; // q x p
    Eigen::VectorXd alpha; // q
    Eigen::VectorXd beta;  // p
    double lambda = 0.0;
    Eigen::VectorXd x_mean;
    Eigen::VectorXd s_mean;
    double y_mean = 0.0;
    Standardization standardization;

    // include_alpha restores the limited S involvement of the ridge-on-alpha
    // variant at prediction time; off by default.
    Eigen::VectorXd predict_sfree(const Eigen::MatrixXd& x_std, const Eigen::MatrixXd& s_new,
                                  bool include_alpha = false) const {
        if (x_std.cols() != beta.size() || s_new.cols() != alpha.size() ||
            x_std.rows() != s_new.rows())
            throw data_error("predict_sfree: dimension mismatch");
        const Eigen::MatrixXd xc = x_std.rowwise() - x_mean.transpose();
        const Eigen::MatrixXd sc = s_new.rowwise() - s_mean.transpose();
        const Eigen::MatrixXd u = xc - sc * gamma;
        Eigen::VectorXd yhat = (u * beta).array() + y_mean;
        if (include_alpha) yhat += sc * alpha;
        return yhat;
    }
};

inline TwoStageModel fit_twostage(const Dataset& train, double lambda) {
    if (lambda < 0) throw config_error("lambda must be nonnegative");
    if (train.q() < 1) throw data_error("fit_twostage: dataset has no sensitive columns");
    const auto n = train.n();
    const auto p = train.p();
    const auto q = train.q();

    TwoStageModel m;
    m.lambda = lambda;
    m.x_mean = train.x.colwise().mean();
    m.s_mean = train.s.colwise().mean();
    m.y_mean = train.y.mean();
    m.standardization = train.standardization;

    const Eigen::MatrixXd xc = train.x.rowwise() - m.x_mean.transpose();
    const Eigen::MatrixXd sc = train.s.rowwise() - m.s_mean.transpose();
    const Eigen::VectorXd yc = train.y.array() - m.y_mean;

    // Stage one: X on S.
    const Eigen::MatrixXd sts = sc.transpose() * sc;
    Eigen::LDLT<Eigen::MatrixXd> s_ldlt(sts);
    if (s_ldlt.info() != Eigen::Success)
        throw numeric_error("singular S'S in first stage");
    m.gamma = s_ldlt.solve(sc.transpose() * xc);
    if (!m.gamma.allFinite() || (sts * m.gamma - sc.transpose() * xc).norm() >
                                    1e-8 * std::max((sc.transpose() * xc).norm(), 1.0))
        throw numeric_error("singular S'S in first stage");

    const Eigen::MatrixXd u = xc - sc * m.gamma;

    // Stage two: joint normal equations for (alpha, beta) of the penalized
    // objective. S'U = 0 by construction, so the system is block diagonal up
    // to rounding, but we solve it jointly.
    Eigen::MatrixXd lhs(q + p, q + p);
    lhs.topLeftCorner(q, q) = sts + lambda * Eigen::MatrixXd::Identity(q, q);
    lhs.topRightCorner(q, p) = sc.transpose() * u;
    lhs.bottomLeftCorner(p, q) = u.transpose() * sc;
    lhs.bottomRightCorner(p, p) = u.transpose() * u;
    Eigen::VectorXd rhs(q + p);
    rhs.head(q) = sc.transpose() * yc;
    rhs.tail(p) = u.transpose() * yc;

    detail::check_invertible(lhs,
                             "singular second-stage system (degenerate residuals U?)");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        throw numeric_error("singular second-stage system (degenerate residuals U?)");
    Eigen::VectorXd coef = ldlt.solve(rhs);
    coef += ldlt.solve(rhs - lhs * coef);
    if (!coef.allFinite() ||
        (lhs * coef - rhs).norm() > 1e-8 * std::max(rhs.norm(), 1.0))
        throw numeric_error("singular second-stage system (degenerate residuals U?)");

    m.alpha = coef.head(q);
    m.beta = coef.tail(p);

    // Residual orthogonality must hold on the training data.
    const Eigen::MatrixXd cross = (u.transpose() * sc) / double(n - 1);
    if (cross.cwiseAbs().maxCoeff() > 1e-8)
        throw numeric_error("first-stage residuals not orthogonal to S");
    (void)n;
    return m;
}

} // namespace edf

#endif
