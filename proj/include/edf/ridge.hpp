#ifndef EDF_RIDGE_HPP
#define EDF_RIDGE_HPP

#include <Eigen/Dense>
#include <string>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"

namespace edf {

enum class RidgeFitMethod { closed_form, augmented };

// Generalized ridge regression penalizing only the C features:
//   argmin_b ||Y - X b||^2 + ||D b||^2,  D = diag(d_1, ..., d_p),
// solved as b = (X'X + D^2)^{-1} X'Y on centered data. d_i = 0 off C, so
// features outside C see no shrinkage.
struct RidgeDeweightModel {
    Eigen::VectorXd coefficients;
    double intercept = 0.0;
    Eigen::VectorXd d;
    RidgeFitMethod fit_method = RidgeFitMethod::closed_form;
    Standardization standardization;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x_std) const {
        if (x_std.cols() != coefficients.size())
            throw data_error("predict: expected " + std::to_string(coefficients.size()) +
                             " features, got " + std::to_string(x_std.cols()));
        if (!x_std.allFinite()) throw data_error("predict: non-finite input");
        return (x_std * coefficients).array() + intercept;
    }

    double predict_one(const Eigen::VectorXd& x_std) const {
        return predict(Eigen::MatrixXd(x_std.transpose()))[0];
    }

    // Sum_i (d_i b_i)^2, the quantity bounded in the dual formulation.
    double penalized_norm() const {
        return (d.array() * coefficients.array()).square().sum();
    }
};

namespace detail {

struct CenteredProblem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd x_mean;
    double y_mean;
};

inline CenteredProblem center(const Dataset& train) {
    CenteredProblem c;
    c.x_mean = train.x.colwise().mean();
    c.y_mean = train.y.mean();
    c.x = train.x.rowwise() - c.x_mean.transpose();
    c.y = train.y.array() - c.y_mean;
    return c;
}

// Scale-invariant singularity test for a symmetric positive definite system:
// equilibrate lhs to unit diagonal before looking at its pivots, so a huge
// but honest penalty does not look singular.
inline void check_invertible(const Eigen::MatrixXd& lhs, const char* what) {
    const Eigen::VectorXd diag = lhs.diagonal();
    if (!(diag.minCoeff() > 0.0)) throw numeric_error(what);
    const Eigen::VectorXd s = diag.array().sqrt().inverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * lhs * s.asDiagonal();
    Eigen::LDLT<Eigen::MatrixXd> probe(scaled);
    const Eigen::VectorXd piv = probe.vectorD();
    const double piv_max = piv.cwiseAbs().maxCoeff();
    if (probe.info() != Eigen::Success || !(piv.minCoeff() > 1e-12 * piv_max))
        throw numeric_error(what);
}

inline void check_normal_equations(const Eigen::MatrixXd& lhs, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& b) {
    if (!b.allFinite())
        throw numeric_error("ridge solve produced non-finite coefficients");
    const double rhs_norm = rhs.norm();
    const double resid = (lhs * b - rhs).norm();
    if (resid > 1e-8 * std::max(rhs_norm, 1.0))
        throw numeric_error("singular system: X'X + D^2 is not invertible "
                            "(rank-deficient X with zero d on the deficient directions?)");
}

} // namespace detail

// Closed-form solve of the deweighted ridge problem via a symmetric positive
// definite factorization of X'X + D^2. Singularity is an error, not a
// pseudo-inverse fallback.
inline RidgeDeweightModel fit_closed_form(const Dataset& train, const DeweightSpec& spec) {
    spec.validate(train.c_mask);
    const auto c = detail::center(train);
    const Eigen::MatrixXd lhs =
        c.x.transpose() * c.x + Eigen::MatrixXd(spec.ridge_d.array().square().matrix().asDiagonal());
    const Eigen::VectorXd rhs = c.x.transpose() * c.y;

    detail::check_invertible(lhs, "singular system: X'X + D^2 is not invertible");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        throw numeric_error("singular system: X'X + D^2 factorization failed");
    Eigen::VectorXd b = ldlt.solve(rhs);
    b += ldlt.solve(rhs - lhs * b); // one refinement step
    detail::check_normal_equations(lhs, rhs, b);

    RidgeDeweightModel m;
    m.coefficients = b;
    m.intercept = c.y_mean - c.x_mean.dot(b);
    m.d = spec.ridge_d;
    m.fit_method = RidgeFitMethod::closed_form;
    m.standardization = train.standardization;
    return m;
}

// Equivalent computation through the artificial-row trick: append the rows of
// D to the design and p zeros to the outcome, then run an ordinary least
// squares solve on the augmented system. Agrees with fit_closed_form.
inline RidgeDeweightModel fit_augmented(const Dataset& train, const DeweightSpec& spec) {
    spec.validate(train.c_mask);
    const auto c = detail::center(train);
    const auto n = c.x.rows();
    const auto p = c.x.cols();

    Eigen::MatrixXd a(n + p, p);
    a.topRows(n) = c.x;
    a.bottomRows(p) = Eigen::MatrixXd(spec.ridge_d.asDiagonal());
    Eigen::VectorXd b_rhs = Eigen::VectorXd::Zero(n + p);
    b_rhs.head(n) = c.y;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < p)
        throw numeric_error("singular system: augmented design is rank deficient");
    Eigen::VectorXd b = qr.solve(b_rhs);
    b += qr.solve(b_rhs - a * b); // one refinement step
    detail::check_normal_equations(
        c.x.transpose() * c.x +
            Eigen::MatrixXd(spec.ridge_d.array().square().matrix().asDiagonal()),
        c.x.transpose() * c.y, b);

    RidgeDeweightModel m;
    m.coefficients = b;
    m.intercept = c.y_mean - c.x_mean.dot(b);
    m.d = spec.ridge_d;
    m.fit_method = RidgeFitMethod::augmented;
    m.standardization = train.standardization;
    return m;
}

} // namespace edf

#endif
