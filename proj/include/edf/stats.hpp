#ifndef EDF_STATS_HPP
#define EDF_STATS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "edf/errors.hpp"

namespace edf {

inline double mean(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw data_error("mean: empty vector");
    return v.mean();
}

// Sample standard deviation, n-1 denominator.
inline double sample_stddev(const Eigen::VectorXd& v) {
    const auto n = v.size();
    if (n < 2) throw data_error("sample_stddev: need at least 2 values");
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / double(n - 1));
}

inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw data_error("pearson: length mismatch");
    if (a.size() < 3) throw data_error("pearson: need at least 3 observations");
    const double ma = a.mean(), mb = b.mean();
    Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
    const double sa = std::sqrt(da.square().sum());
    const double sb = std::sqrt(db.square().sum());
    if (sa == 0.0 || sb == 0.0) throw data_error("pearson: constant input vector");
    return (da * db).sum() / (sa * sb);
}

// The fairness measure: squared Pearson correlation of the two continuous
// surrogates T and W. Lower is fairer.
inline double rho_squared(const Eigen::VectorXd& t, const Eigen::VectorXd& w) {
    const double r = pearson(t, w);
    return r * r;
}

// Mean absolute prediction error. Named after the tables it reproduces;
// despite the acronym this is plain mean |y - yhat|, not a percentage.
inline double mape(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size()) throw data_error("mape: length mismatch");
    if (y_true.size() == 0) throw data_error("mape: empty input");
    return (y_true - y_pred).array().abs().mean();
}

// Overall probability of misclassification at a probability threshold.
inline double opm(const Eigen::VectorXd& y_true, const Eigen::VectorXd& proba,
                  double threshold = 0.5) {
    if (y_true.size() != proba.size()) throw data_error("opm: length mismatch");
    if (y_true.size() == 0) throw data_error("opm: empty input");
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        const double label = proba[i] >= threshold ? 1.0 : 0.0;
        if (label != y_true[i]) ++wrong;
    }
    return double(wrong) / double(y_true.size());
}

// Per-sensitive-level rho^2 between fitted values of a full model (with S)
// and the deweighted model, restricted to each subgroup. Gauges whether C is
// an adequate stand-in for S.
inline std::vector<std::pair<std::string, double>>
proxy_adequacy(const Eigen::VectorXd& full_fitted, const Eigen::VectorXd& edf_fitted,
               const Eigen::VectorXd& s_col, const std::string& s_name) {
    if (full_fitted.size() != edf_fitted.size() || full_fitted.size() != s_col.size())
        throw data_error("proxy_adequacy: length mismatch");
    std::vector<std::pair<std::string, double>> out;
    for (double level : {0.0, 1.0}) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < s_col.size(); ++i)
            if (s_col[i] == level) rows.push_back(i);
        if (rows.size() < 3)
            throw data_error("proxy_adequacy: subgroup " + s_name + "." +
                             std::to_string(int(level)) + " has fewer than 3 rows");
        Eigen::VectorXd a(rows.size()), b(rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            a[j] = full_fitted[rows[j]];
            b[j] = edf_fitted[rows[j]];
        }
        out.emplace_back(s_name + "." + std::to_string(int(level)), rho_squared(a, b));
    }
    return out;
}

} // namespace edf

#endif
