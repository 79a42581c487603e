#ifndef EDF_SERIALIZE_HPP
#define EDF_SERIALIZE_HPP

#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/forest.hpp"
#include "edf/knn.hpp"
#include "edf/ridge.hpp"
#include "edf/twostage.hpp"

namespace edf {

using json = nlohmann::json;

inline json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i].get<double>();
    return v;
}

inline json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        rows.push_back(vec_to_json(m.row(i).transpose()));
    return rows;
}

inline Eigen::MatrixXd mat_from_json(const json& rows) {
    if (rows.empty()) return {};
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        m.row(Eigen::Index(i)) = vec_from_json(rows[i]).transpose();
    return m;
}

inline json schema_to_json(const FeatureSchema& schema) {
    json cols = json::array();
    for (const auto& c : schema.columns) {
        json jc{{"name", c.name}};
        switch (c.kind) {
            case ColumnKind::numeric: jc["kind"] = "numeric"; break;
            case ColumnKind::categorical: jc["kind"] = "categorical"; break;
            case ColumnKind::onehot_derived:
                jc["kind"] = "onehot-derived";
                jc["source"] = c.source_column;
                jc["category"] = c.category_label;
                break;
        }
        cols.push_back(jc);
    }
    return cols;
}

inline FeatureSchema schema_from_json(const json& cols) {
    FeatureSchema schema;
    for (const auto& jc : cols) {
        SchemaColumn c;
        c.name = jc.at("name").get<std::string>();
        const std::string kind = jc.at("kind").get<std::string>();
        if (kind == "numeric") c.kind = ColumnKind::numeric;
        else if (kind == "categorical") c.kind = ColumnKind::categorical;
        else if (kind == "onehot-derived") {
            c.kind = ColumnKind::onehot_derived;
            c.source_column = jc.at("source").get<std::string>();
            c.category_label = jc.at("category").get<std::string>();
        } else throw config_error("unknown column kind: " + kind);
        schema.columns.push_back(std::move(c));
    }
    return schema;
}

inline json standardization_to_json(const Standardization& st) {
    return {{"mean", vec_to_json(st.mean)}, {"stddev", vec_to_json(st.stddev)}};
}

inline Standardization standardization_from_json(const json& j) {
    return {vec_from_json(j.at("mean")), vec_from_json(j.at("stddev"))};
}

inline std::uint64_t fnv1a_file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    return h;
}

inline json ridge_to_json(const RidgeDeweightModel& m) {
    return {{"family", "linear-edf"},
            {"coefficients", vec_to_json(m.coefficients)},
            {"intercept", m.intercept},
            {"d", vec_to_json(m.d)},
            {"fit_method", m.fit_method == RidgeFitMethod::closed_form ? "closed-form" : "augmented"},
            {"standardization", standardization_to_json(m.standardization)}};
}

inline RidgeDeweightModel ridge_from_json(const json& j) {
    RidgeDeweightModel m;
    m.coefficients = vec_from_json(j.at("coefficients"));
    m.intercept = j.at("intercept").get<double>();
    m.d = vec_from_json(j.at("d"));
    m.fit_method = j.at("fit_method") == "augmented" ? RidgeFitMethod::augmented
                                                     : RidgeFitMethod::closed_form;
    m.standardization = standardization_from_json(j.at("standardization"));
    return m;
}

inline json twostage_to_json(const TwoStageModel& m) {
    return {{"family", "twostage"},
            {"gamma", mat_to_json(m.gamma)},
            {"alpha", vec_to_json(m.alpha)},
            {"beta", vec_to_json(m.beta)},
            {"lambda", m.lambda},
            {"x_mean", vec_to_json(m.x_mean)},
            {"s_mean", vec_to_json(m.s_mean)},
            {"y_mean", m.y_mean},
            {"standardization", standardization_to_json(m.standardization)}};
}

inline TwoStageModel twostage_from_json(const json& j) {
    TwoStageModel m;
    m.gamma = mat_from_json(j.at("gamma"));
    m.alpha = vec_from_json(j.at("alpha"));
    m.beta = vec_from_json(j.at("beta"));
    m.lambda = j.at("lambda").get<double>();
    m.x_mean = vec_from_json(j.at("x_mean"));
    m.s_mean = vec_from_json(j.at("s_mean"));
    m.y_mean = j.at("y_mean").get<double>();
    m.standardization = standardization_from_json(j.at("standardization"));
    return m;
}

// k-NN models reference their training data by path + content hash rather
// than embedding it.
inline json knn_to_json(const KnnModel& m, const std::string& data_path,
                        const json& data_roles) {
    return {{"family", "knn"},
            {"k", m.k},
            {"weights", vec_to_json(m.weights)},
            {"y_kind", m.y_kind == OutcomeKind::binary ? "binary" : "continuous"},
            {"standardization", standardization_to_json(m.standardization)},
            {"data_ref",
             {{"path", data_path}, {"hash", fnv1a_file_hash(data_path)}, {"roles", data_roles}}}};
}

inline json forest_to_json(const ForestModel& m) {
    json trees = json::array();
    for (const auto& tree : m.trees) {
        json nodes = json::array();
        for (const auto& nd : tree.nodes)
            nodes.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.leaf_value,
                             nd.count0, nd.count1});
        trees.push_back(std::move(nodes));
    }
    return {{"family", "forest"},
            {"y_kind", m.y_kind == OutcomeKind::binary ? "binary" : "continuous"},
            {"p", m.p},
            {"n_trees", m.config.n_trees},
            {"min_node_size", m.config.min_node_size},
            {"mtry", m.config.mtry},
            {"seed", m.config.seed},
            {"sampling_weights", vec_to_json(m.config.sampling_weights)},
            {"standardization", standardization_to_json(m.standardization)},
            {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const json& j) {
    ForestModel m;
    m.y_kind = j.at("y_kind") == "binary" ? OutcomeKind::binary : OutcomeKind::continuous;
    m.p = j.at("p").get<Eigen::Index>();
    m.config.n_trees = j.at("n_trees").get<int>();
    m.config.min_node_size = j.at("min_node_size").get<int>();
    m.config.mtry = j.at("mtry").get<int>();
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.sampling_weights = vec_from_json(j.at("sampling_weights"));
    m.standardization = standardization_from_json(j.at("standardization"));
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt) {
            TreeNode nd;
            nd.feature = jn[0].get<int>();
            nd.threshold = jn[1].get<double>();
            nd.left = jn[2].get<int>();
            nd.right = jn[3].get<int>();
            nd.leaf_value = jn[4].get<double>();
            nd.count0 = jn[5].get<double>();
            nd.count1 = jn[6].get<double>();
            tree.nodes.push_back(nd);
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

} // namespace edf

#endif
