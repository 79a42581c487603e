#ifndef EDF_FOREST_HPP
#define EDF_FOREST_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/rng.hpp"

namespace edf {

struct ForestConfig {
    int n_trees = 500;
    int min_node_size = 10;
    int mtry = 0; // 0 means ceil(sqrt(p))
    Eigen::VectorXd sampling_weights; // empty means all ones
    std::uint64_t seed = 0;
    bool bootstrap = true;
    unsigned threads = 1; // per-tree RNG streams keep the result thread-count independent
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;   // regression: mean y of the node
    double count0 = 0.0;       // classification: node class counts
    double count1 = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
};

namespace detail {

struct SplitResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

// Weighted sampling without replacement: sequential draws proportional to the
// remaining weights (the ranger-style split-candidate weighting).
inline std::vector<int> draw_candidates(std::vector<std::pair<int, double>> pool,
                                        int mtry, Rng& rng) {
    std::vector<int> out;
    const int take = std::min<int>(mtry, int(pool.size()));
    out.reserve(std::size_t(take));
    for (int t = 0; t < take; ++t) {
        double total = 0.0;
        for (const auto& pw : pool) total += pw.second;
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t chosen = pool.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            acc += pool[i].second;
            if (target < acc) { chosen = i; break; }
        }
        out.push_back(pool[chosen].first);
        pool.erase(pool.begin() + std::ptrdiff_t(chosen));
    }
    return out;
}

// Best midpoint split for one feature within a node, by variance reduction
// (regression) or Gini impurity decrease (classification).
inline void best_split_for_feature(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const std::vector<Eigen::Index>& rows, int feature,
                                   bool classification, SplitResult& best) {
    const std::size_t m = rows.size();
    std::vector<std::pair<double, double>> vals(m); // (x, y)
    for (std::size_t i = 0; i < m; ++i)
        vals[i] = {x(rows[i], feature), y[rows[i]]};
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) return; // constant in node

    // Prefix sums over the sorted order.
    double sum_l = 0.0, sumsq_l = 0.0, ones_l = 0.0;
    double sum_t = 0.0, sumsq_t = 0.0, ones_t = 0.0;
    for (const auto& v : vals) {
        sum_t += v.second;
        sumsq_t += v.second * v.second;
        ones_t += v.second;
    }
    const double n_t = double(m);
    const double parent_impurity = classification
        ? 1.0 - (ones_t / n_t) * (ones_t / n_t) - ((n_t - ones_t) / n_t) * ((n_t - ones_t) / n_t)
        : sumsq_t - sum_t * sum_t / n_t;

    for (std::size_t i = 0; i + 1 < m; ++i) {
        sum_l += vals[i].second;
        sumsq_l += vals[i].second * vals[i].second;
        ones_l += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        const double thr = 0.5 * (vals[i].first + vals[i + 1].first);
        const double n_l = double(i + 1), n_r = n_t - n_l;
        double decrease;
        if (classification) {
            const double p1l = ones_l / n_l, p1r = (ones_t - ones_l) / n_r;
            const double gini_l = 1.0 - p1l * p1l - (1.0 - p1l) * (1.0 - p1l);
            const double gini_r = 1.0 - p1r * p1r - (1.0 - p1r) * (1.0 - p1r);
            decrease = parent_impurity - (n_l / n_t) * gini_l - (n_r / n_t) * gini_r;
        } else {
            const double sum_r = sum_t - sum_l, sumsq_r = sumsq_t - sumsq_l;
            const double sse_l = sumsq_l - sum_l * sum_l / n_l;
            const double sse_r = sumsq_r - sum_r * sum_r / n_r;
            decrease = parent_impurity - sse_l - sse_r;
        }
        if (decrease <= 0.0) continue;
        // Ties broken by lowest feature index, then lowest threshold.
        const bool better = !best.found || decrease > best.decrease ||
                            (decrease == best.decrease &&
                             (feature < best.feature ||
                              (feature == best.feature && thr < best.threshold)));
        if (better) best = {true, feature, thr, decrease};
    }
}

inline Tree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const ForestConfig& cfg, const Eigen::VectorXd& weights,
                      int mtry, bool classification, Rng& rng) {
    Tree tree;
    std::vector<Eigen::Index> sample;
    const auto n = x.rows();
    sample.reserve(std::size_t(n));
    if (cfg.bootstrap) {
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (Eigen::Index i = 0; i < n; ++i) sample.push_back(pick(rng));
    } else {
        for (Eigen::Index i = 0; i < n; ++i) sample.push_back(i);
    }

    std::vector<std::pair<int, double>> pool; // positive-weight features only
    for (Eigen::Index j = 0; j < weights.size(); ++j)
        if (weights[j] > 0.0) pool.emplace_back(int(j), weights[j]);

    struct Work { int node; std::vector<Eigen::Index> rows; };
    tree.nodes.emplace_back();
    std::vector<Work> stack;
    stack.push_back({0, std::move(sample)});

    auto make_leaf = [&](TreeNode& node, const std::vector<Eigen::Index>& rows) {
        node.feature = -1;
        double sum = 0.0, ones = 0.0;
        for (auto r : rows) { sum += y[r]; ones += y[r]; }
        node.leaf_value = sum / double(rows.size());
        node.count1 = ones;
        node.count0 = double(rows.size()) - ones;
    };

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        TreeNode& node = tree.nodes[std::size_t(w.node)];

        bool pure = true;
        for (std::size_t i = 1; i < w.rows.size(); ++i)
            if (y[w.rows[i]] != y[w.rows[0]]) { pure = false; break; }
        if (pure || int(w.rows.size()) <= cfg.min_node_size) {
            make_leaf(node, w.rows);
            continue;
        }

        SplitResult best;
        for (int f : draw_candidates(pool, mtry, rng))
            best_split_for_feature(x, y, w.rows, f, classification, best);
        if (!best.found) {
            make_leaf(node, w.rows);
            continue;
        }

        std::vector<Eigen::Index> left_rows, right_rows;
        for (auto r : w.rows) {
            if (x(r, best.feature) <= best.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }

        const int left_id = int(tree.nodes.size());
        tree.nodes.emplace_back();
        const int right_id = int(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& nd = tree.nodes[std::size_t(w.node)]; // re-fetch, vector grew
        nd.feature = best.feature;
        nd.threshold = best.threshold;
        nd.left = left_id;
        nd.right = right_id;
        stack.push_back({right_id, std::move(right_rows)});
        stack.push_back({left_id, std::move(left_rows)});
    }
    return tree;
}

} // namespace detail

struct ForestModel {
    std::vector<Tree> trees;
    OutcomeKind y_kind = OutcomeKind::continuous;
    ForestConfig config;
    Standardization standardization;
    Eigen::Index p = 0;

    static const TreeNode& leaf_for(const Tree& tree, const Eigen::VectorXd& x_new) {
        int id = 0;
        for (;;) {
            const TreeNode& node = tree.nodes[std::size_t(id)];
            if (node.feature < 0) return node;
            id = x_new[node.feature] <= node.threshold ? node.left : node.right;
        }
    }

    double predict_one(const Eigen::VectorXd& x_new) const {
        if (x_new.size() != p) throw data_error("forest_predict: dimension mismatch");
        double sum = 0.0;
        for (const auto& tree : trees) sum += leaf_for(tree, x_new).leaf_value;
        return sum / double(trees.size());
    }

    Eigen::VectorXd predict(const Eigen::MatrixXd& x_new) const {
        Eigen::VectorXd out(x_new.rows());
        for (Eigen::Index i = 0; i < x_new.rows(); ++i)
            out[i] = predict_one(x_new.row(i).transpose());
        return out;
    }

    // Average over trees of the leaf class frequencies, (P(y=0), P(y=1)).
    Eigen::Vector2d predict_proba_one(const Eigen::VectorXd& x_new) const {
        if (y_kind != OutcomeKind::binary)
            throw data_error("predict_proba: outcome is not binary");
        if (x_new.size() != p) throw data_error("forest_predict: dimension mismatch");
        Eigen::Vector2d acc{0.0, 0.0};
        for (const auto& tree : trees) {
            const TreeNode& leaf = leaf_for(tree, x_new);
            const double total = leaf.count0 + leaf.count1;
            acc[0] += leaf.count0 / total;
            acc[1] += leaf.count1 / total;
        }
        return acc / double(trees.size());
    }

    Eigen::VectorXd predict_proba1(const Eigen::MatrixXd& x_new) const {
        Eigen::VectorXd out(x_new.rows());
        for (Eigen::Index i = 0; i < x_new.rows(); ++i)
            out[i] = predict_proba_one(x_new.row(i).transpose())[1];
        return out;
    }

    // Number of internal nodes splitting on each feature, over the forest.
    Eigen::VectorXi split_counts() const {
        Eigen::VectorXi counts = Eigen::VectorXi::Zero(p);
        for (const auto& tree : trees)
            for (const auto& node : tree.nodes)
                if (node.feature >= 0) ++counts[node.feature];
        return counts;
    }
};

inline ForestModel forest_fit(const Dataset& train, ForestConfig config) {
    const auto p = train.p();
    if (config.sampling_weights.size() == 0)
        config.sampling_weights = Eigen::VectorXd::Ones(p);
    if (config.sampling_weights.size() != p)
        throw config_error("sampling weights length mismatch");
    if ((config.sampling_weights.array() < 0).any())
        throw config_error("sampling weights must be nonnegative");
    if ((config.sampling_weights.array() == 0).all())
        throw config_error("all sampling weights are zero");
    if (config.n_trees < 1) throw config_error("n_trees must be positive");
    if (config.min_node_size < 1) throw config_error("min_node_size must be positive");
    if (config.mtry == 0) config.mtry = int(std::ceil(std::sqrt(double(p))));
    if (config.mtry > p) throw config_error("mtry exceeds p");
    if (train.n() < config.min_node_size)
        throw data_error("fewer training rows than min_node_size");
    if (!train.y.allFinite()) throw data_error("degenerate y: non-finite values");

    const bool classification = train.y_kind == OutcomeKind::binary;
    ForestModel m;
    m.y_kind = train.y_kind;
    m.config = config;
    m.standardization = train.standardization;
    m.p = p;
    m.trees.resize(std::size_t(config.n_trees));

    parallel_for(std::size_t(config.n_trees), config.threads, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, t));
        m.trees[t] = detail::grow_tree(train.x, train.y, config, config.sampling_weights,
                                       config.mtry, classification, rng);
    });
    return m;
}

} // namespace edf

#endif
