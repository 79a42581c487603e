#ifndef EDF_FAIRNESS_HPP
#define EDF_FAIRNESS_HPP

#include <Eigen/Dense>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/knn.hpp"
#include "edf/stats.hpp"

namespace edf {

// Type-erased view of a fitted model, enough to build the T surrogate.
// predict_proba1 is empty for models without probability output.
struct Predictor {
    std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> predict;
    std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> predict_proba1;
};

template <typename Model>
Predictor make_predictor(const Model& model) {
    Predictor p;
    p.predict = [&model](const Eigen::MatrixXd& x) { return model.predict(x); };
    if constexpr (requires(const Model& m, const Eigen::MatrixXd& x) { m.predict_proba1(x); }) {
        p.predict_proba1 = [&model](const Eigen::MatrixXd& x) {
            return model.predict_proba1(x);
        };
    }
    return p;
}

enum class WAuxFamily { knn, linear_probability };

struct SurrogateConstruction {
    std::string t_branch; // "prediction" or "probability"
    std::string w_branch; // "verbatim", "knn", or "linear-probability"
};

// T and W, the continuous surrogates of Yhat and S that the fairness measure
// correlates, with a record of which construction branch produced each.
struct SurrogatePair {
    Eigen::VectorXd t;
    Eigen::VectorXd w;
    SurrogateConstruction construction;
};

// Continuous Y: T is the prediction. Binary Y: T is P(Y=1|X), never rounded.
inline Eigen::VectorXd build_T(const Predictor& model, const Dataset& eval,
                               std::string* branch = nullptr) {
    if (eval.y_kind == OutcomeKind::binary) {
        if (!model.predict_proba1)
            throw data_error("build_T: binary outcome requires a model with probability output");
        if (branch) *branch = "probability";
        return model.predict_proba1(eval.x);
    }
    if (branch) *branch = "prediction";
    return model.predict(eval.x);
}

inline bool is_indicator(const Eigen::VectorXd& v) {
    return ((v.array() == 0.0) || (v.array() == 1.0)).all();
}

// Continuous S: W is the S column itself. One-hot S: W is P(S=1|X) from an
// auxiliary model fit on the training rows only (same leakage discipline as T).
inline Eigen::VectorXd build_W(const Dataset& train, const Dataset& eval,
                               Eigen::Index sensitive_index,
                               WAuxFamily aux = WAuxFamily::knn, int aux_k = 25,
                               std::string* branch = nullptr) {
    if (sensitive_index < 0 || sensitive_index >= eval.q())
        throw data_error("build_W: sensitive index out of range");
    const Eigen::VectorXd s_eval = eval.s.col(sensitive_index);
    if ((s_eval.array() == s_eval[0]).all())
        throw data_error("build_W: sensitive column '" +
                         eval.s_names[std::size_t(sensitive_index)] +
                         "' is constant in the evaluation split");
    const Eigen::VectorXd s_train = train.s.col(sensitive_index);
    if (!is_indicator(s_train)) {
        if (branch) *branch = "verbatim";
        return s_eval;
    }

    if (aux == WAuxFamily::knn) {
        Dataset aux_train = train;
        aux_train.y = s_train;
        aux_train.y_kind = OutcomeKind::binary;
        KnnModel aux_model = knn_fit(aux_train, DeweightSpec::none(train.p()),
                                     std::min<int>(aux_k, int(train.n())));
        if (branch) *branch = "knn";
        return aux_model.predict_proba1(eval.x);
    }

    // Linear-probability: OLS of S on X, predictions clipped to [0,1].
    const Eigen::VectorXd x_mean = train.x.colwise().mean();
    const Eigen::MatrixXd xc = train.x.rowwise() - x_mean.transpose();
    const double s_mean = s_train.mean();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xc.transpose() * xc);
    if (ldlt.info() != Eigen::Success)
        throw numeric_error("build_W: singular X'X in linear-probability fit");
    const Eigen::VectorXd b = ldlt.solve(xc.transpose() * (s_train.array() - s_mean).matrix());
    Eigen::VectorXd w =
        ((eval.x.rowwise() - x_mean.transpose()) * b).array() + s_mean;
    w = w.cwiseMax(0.0).cwiseMin(1.0);
    if (branch) *branch = "linear-probability";
    return w;
}

struct FairnessReport {
    std::vector<std::pair<std::string, double>> per_category; // (label, rho^2)
    std::string utility_metric; // "MAPE" or "OPM"
    double utility_value = 0.0;
    Eigen::Index n_eval = 0;
    std::string rho_eval_split = "holdout";

    std::string text_table() const {
        std::ostringstream os;
        os << "metric     | value\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-10s | %.2f\n", utility_metric.c_str(), utility_value);
        os << buf;
        for (const auto& [label, rho2] : per_category) {
            std::snprintf(buf, sizeof buf, "rho^2 %-4s | %.4f\n", label.c_str(), rho2);
            os << buf;
        }
        return os.str();
    }
};

// Evaluates a fitted model on a holdout: utility (MAPE for continuous
// outcomes, OPM for binary) plus one rho^2(T, W) per sensitive category.
inline FairnessReport evaluate_fairness(const Predictor& model, const Dataset& train,
                                        const Dataset& eval,
                                        WAuxFamily aux = WAuxFamily::knn, int aux_k = 25) {
    FairnessReport report;
    report.n_eval = eval.n();
    const Eigen::VectorXd t = build_T(model, eval);
    if (eval.y_kind == OutcomeKind::binary) {
        report.utility_metric = "OPM";
        report.utility_value = opm(eval.y, t);
    } else {
        report.utility_metric = "MAPE";
        report.utility_value = mape(eval.y, t);
    }
    for (Eigen::Index j = 0; j < eval.q(); ++j) {
        const Eigen::VectorXd w = build_W(train, eval, j, aux, aux_k);
        report.per_category.emplace_back(eval.s_names[std::size_t(j)], rho_squared(t, w));
    }
    return report;
}

} // namespace edf

#endif
