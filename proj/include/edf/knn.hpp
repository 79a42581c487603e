#ifndef EDF_KNN_HPP
#define EDF_KNN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"

namespace edf {

// d(a, b) = sqrt(sum_i w_i (a_i - b_i)^2). The factor multiplies the squared
// coordinate difference, so weight 0 is the exact column-exclusion limit.
inline double weighted_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& weights) {
    if (a.size() != b.size() || a.size() != weights.size())
        throw data_error("weighted_distance: dimension mismatch");
    return std::sqrt((weights.array() * (a - b).array().square()).sum());
}

// Brute-force k-NN with per-coordinate deweighting on C. Fitting is storage.
struct KnnModel {
    int k = 25;
    Eigen::VectorXd weights;
    Eigen::MatrixXd train_x; // standardized
    Eigen::VectorXd train_y;
    OutcomeKind y_kind = OutcomeKind::continuous;
    Standardization standardization;

    // Indices of the k nearest training rows; ties at the k-th distance are
    // broken by lowest training-row index.
    std::vector<Eigen::Index> neighbors(const Eigen::VectorXd& x_new) const {
        if (x_new.size() != train_x.cols())
            throw data_error("knn_predict: dimension mismatch");
        const auto n = train_x.rows();
        // Squared distances; the square root is monotone and irrelevant here.
        std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 =
                (weights.array() * (train_x.row(i).transpose() - x_new).array().square()).sum();
            dist[std::size_t(i)] = {d2, i};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) out[std::size_t(i)] = dist[std::size_t(i)].second;
        return out;
    }

    double predict_one(const Eigen::VectorXd& x_new) const {
        const auto nb = neighbors(x_new);
        double sum = 0.0;
        for (auto i : nb) sum += train_y[i];
        return sum / double(k);
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x_new) const {
        Eigen::VectorXd out(x_new.rows());
        for (Eigen::Index i = 0; i < x_new.rows(); ++i)
            out[i] = predict_one(x_new.row(i).transpose());
        return out;
    }

    // Class frequencies among the k neighbors, (P(y=0), P(y=1)).
    Eigen::Vector2d predict_proba_one(const Eigen::VectorXd& x_new) const {
        if (y_kind != OutcomeKind::binary)
            throw data_error("predict_proba: outcome is not binary");
        const double p1 = predict_one(x_new);
        return {1.0 - p1, p1};
    }

    // P(y=1) per row.
    Eigen::VectorXd predict_proba1(const Eigen::MatrixXd& x_new) const {
        if (y_kind != OutcomeKind::binary)
            throw data_error("predict_proba: outcome is not binary");
        return predict(x_new);
    }
};

inline KnnModel knn_fit(const Dataset& train, const DeweightSpec& spec, int k) {
    spec.validate(train.c_mask);
    if (k < 1) throw config_error("k must be at least 1");
    if (Eigen::Index(k) > train.n())
        throw config_error("k = " + std::to_string(k) + " exceeds n = " +
                           std::to_string(train.n()));
    KnnModel m;
    m.k = k;
    m.weights = spec.factor;
    m.train_x = train.x;
    m.train_y = train.y;
    m.y_kind = train.y_kind;
    m.standardization = train.standardization;
    return m;
}

} // namespace edf

#endif
