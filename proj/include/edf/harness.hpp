#ifndef EDF_HARNESS_HPP
#define EDF_HARNESS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edf/dataset.hpp"
#include "edf/errors.hpp"
#include "edf/fairness.hpp"
#include "edf/forest.hpp"
#include "edf/knn.hpp"
#include "edf/ridge.hpp"
#include "edf/rng.hpp"
#include "edf/twostage.hpp"

namespace edf {

enum class ModelFamily { linear_edf, twostage, knn, forest };

inline std::string family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::linear_edf: return "linear-edf";
        case ModelFamily::twostage: return "twostage";
        case ModelFamily::knn: return "knn";
        case ModelFamily::forest: return "forest";
    }
    return "?";
}

inline ModelFamily family_from_name(const std::string& name) {
    if (name == "linear-edf") return ModelFamily::linear_edf;
    if (name == "twostage") return ModelFamily::twostage;
    if (name == "knn") return ModelFamily::knn;
    if (name == "forest") return ModelFamily::forest;
    throw config_error("unknown model family: " + name);
}

struct DataConfig {
    std::string path;
    std::string outcome;
    std::vector<std::string> sensitive;
    std::vector<std::string> c_features;
    std::optional<std::string> positive_class;
};

struct FamilyParams {
    int k = 25;           // knn
    double lambda = 0.0;  // twostage
    int n_trees = 500;    // forest
    int min_node_size = 10;
    int mtry = 0;
};

// Declarative description of a replicated-holdout experiment: one scalar
// deweight value per grid point, applied commonly across C.
struct ExperimentConfig {
    DataConfig data;
    ModelFamily family = ModelFamily::linear_edf;
    FamilyParams params;
    std::vector<double> deweight_grid; // delta for linear, lambda for twostage,
                                       // factor in [0,1] for knn/forest
    int replications = 1;
    Eigen::Index holdout_size = 1000;
    std::uint64_t master_seed = 0;
    WAuxFamily w_family = WAuxFamily::knn;
    int w_k = 25;
    unsigned threads = 1;

    void validate() const {
        if (deweight_grid.empty()) throw config_error("deweight grid is empty");
        if (replications < 1) throw config_error("replications must be >= 1");
        if (holdout_size < 1) throw config_error("holdout size must be >= 1");
        for (double v : deweight_grid) {
            if (!std::isfinite(v) || v < 0)
                throw config_error("grid value must be a finite nonnegative number");
            if ((family == ModelFamily::knn || family == ModelFamily::forest) && v > 1.0)
                throw config_error("deweight factor must lie in [0,1] for knn/forest");
        }
    }
};

struct ReplicationRecord {
    double deweight = 0.0;
    int replication = 0;
    std::uint64_t seed = 0;
    double utility = 0.0;
    std::vector<std::pair<std::string, double>> rho2;
};

struct TableRow {
    double deweight = 0.0;
    double mean_utility = 0.0;
    double se_utility = 0.0;
    std::vector<std::string> categories;
    std::vector<double> mean_rho2;
    std::vector<double> se_rho2;
    int n_replications = 0;
};

struct ReplicationTable {
    std::string utility_metric;
    std::vector<TableRow> rows;
    std::vector<ReplicationRecord> records;

    std::string text_table() const {
        std::ostringstream os;
        os << "deweight | " << utility_metric;
        const auto& cats = rows.empty() ? std::vector<std::string>{} : rows.front().categories;
        if (cats.size() == 1) {
            os << " | rho^2";
        } else {
            for (const auto& c : cats) os << " | rho^2(" << c << ")";
        }
        os << "\n";
        char buf[64];
        for (const auto& row : rows) {
            std::snprintf(buf, sizeof buf, "%.2f", row.deweight);
            os << buf;
            if (utility_metric == "MAPE")
                std::snprintf(buf, sizeof buf, " | %.2f", row.mean_utility);
            else
                std::snprintf(buf, sizeof buf, " | %.4f", row.mean_utility);
            os << buf;
            for (double r : row.mean_rho2) {
                std::snprintf(buf, sizeof buf, " | %.4f", r);
                os << buf;
            }
            os << "\n";
        }
        return os.str();
    }
};

namespace detail {

inline ReplicationRecord run_one(const Dataset& data, const ExperimentConfig& cfg,
                                 double deweight, int rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.master_seed, std::uint64_t(rep));
    auto [train, test] = split_holdout(data, cfg.holdout_size, rep_seed);

    Predictor pred;
    // Keep the fitted model alive for the duration of the evaluation.
    RidgeDeweightModel ridge;
    TwoStageModel twostage;
    KnnModel knn;
    ForestModel forest;

    switch (cfg.family) {
        case ModelFamily::linear_edf: {
            ridge = fit_closed_form(train, DeweightSpec::common(train.c_mask, deweight, 1.0));
            pred = make_predictor(ridge);
            break;
        }
        case ModelFamily::twostage: {
            twostage = fit_twostage(train, deweight);
            // The S-free prediction needs the test rows' S at evaluation time.
            const Eigen::MatrixXd s_test = test.s;
            const TwoStageModel* m = &twostage;
            Eigen::Index n_test = test.n();
            pred.predict = [m, s_test, n_test](const Eigen::MatrixXd& x) {
                if (x.rows() != n_test)
                    throw data_error("twostage harness predictor: row mismatch");
                return m->predict_sfree(x, s_test);
            };
            break;
        }
        case ModelFamily::knn: {
            knn = knn_fit(train, DeweightSpec::common(train.c_mask, 0.0, deweight),
                          cfg.params.k);
            pred = make_predictor(knn);
            break;
        }
        case ModelFamily::forest: {
            ForestConfig fc;
            fc.n_trees = cfg.params.n_trees;
            fc.min_node_size = cfg.params.min_node_size;
            fc.mtry = cfg.params.mtry;
            fc.sampling_weights =
                DeweightSpec::common(train.c_mask, 0.0, deweight).factor;
            fc.seed = derive_seed(rep_seed, 0x464f5245u);
            forest = forest_fit(train, fc);
            pred = make_predictor(forest);
            break;
        }
    }

    FairnessReport report = evaluate_fairness(pred, train, test, cfg.w_family, cfg.w_k);
    ReplicationRecord rec;
    rec.deweight = deweight;
    rec.replication = rep;
    rec.seed = rep_seed;
    rec.utility = report.utility_value;
    rec.rho2 = report.per_category;
    return rec;
}

inline std::pair<double, double> mean_se(const std::vector<double>& v) {
    const double n = double(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace detail

// Runs the full grid x replication protocol. Replication seeds are derived
// from the master seed by counter and shared across grid values, so the grid
// rows are compared on identical holdout splits. Deterministic for a fixed
// master seed regardless of thread count.
inline ReplicationTable run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
    cfg.validate();
    const std::size_t n_grid = cfg.deweight_grid.size();
    const std::size_t n_rep = std::size_t(cfg.replications);

    ReplicationTable table;
    table.utility_metric = data.y_kind == OutcomeKind::binary ? "OPM" : "MAPE";
    table.records.resize(n_grid * n_rep);

    std::vector<std::string> first_error(n_grid * n_rep);
    parallel_for(n_grid * n_rep, cfg.threads, [&](std::size_t i) {
        const std::size_t g = i / n_rep;
        const int rep = int(i % n_rep);
        try {
            table.records[i] = detail::run_one(data, cfg, cfg.deweight_grid[g], rep);
        } catch (const std::exception& e) {
            first_error[i] = std::string(e.what()) + " (grid value " +
                             std::to_string(cfg.deweight_grid[g]) + ", replication " +
                             std::to_string(rep) + ")";
        }
    });
    for (const auto& msg : first_error)
        if (!msg.empty()) throw numeric_error(msg);

    for (std::size_t g = 0; g < n_grid; ++g) {
        TableRow row;
        row.deweight = cfg.deweight_grid[g];
        row.n_replications = cfg.replications;
        std::vector<double> util;
        util.reserve(n_rep);
        for (std::size_t r = 0; r < n_rep; ++r)
            util.push_back(table.records[g * n_rep + r].utility);
        std::tie(row.mean_utility, row.se_utility) = detail::mean_se(util);

        const auto& cats = table.records[g * n_rep].rho2;
        for (std::size_t c = 0; c < cats.size(); ++c) {
            std::vector<double> rho;
            rho.reserve(n_rep);
            for (std::size_t r = 0; r < n_rep; ++r)
                rho.push_back(table.records[g * n_rep + r].rho2[c].second);
            auto [m, se] = detail::mean_se(rho);
            row.categories.push_back(cats[c].first);
            row.mean_rho2.push_back(m);
            row.se_rho2.push_back(se);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline ReplicationTable run_experiment(const ExperimentConfig& cfg) {
    Dataset data = load_csv(cfg.data.path, cfg.data.outcome, cfg.data.sensitive,
                            cfg.data.c_features, cfg.data.positive_class);
    return run_experiment(cfg, data);
}

struct DeweightSelection {
    double deweight = 0.0;
    bool infeasible = false; // no grid row met the rho^2 cap
};

// Among rows whose every per-category mean rho^2 is at or below the cap,
// picks the one with the best (lowest) mean utility. If none qualifies,
// returns the row with the lowest worst-category rho^2, flagged infeasible.
inline DeweightSelection select_deweight(const ReplicationTable& table, double rho_cap) {
    if (table.rows.empty()) throw config_error("select_deweight: empty table");
    if (rho_cap < 0 || rho_cap > 1) throw config_error("rho cap must lie in [0,1]");
    const TableRow* best = nullptr;
    for (const auto& row : table.rows) {
        bool ok = true;
        for (double r : row.mean_rho2)
            if (r > rho_cap) { ok = false; break; }
        if (ok && (!best || row.mean_utility < best->mean_utility)) best = &row;
    }
    if (best) return {best->deweight, false};
    const TableRow* fallback = nullptr;
    double fallback_rho = 0.0;
    for (const auto& row : table.rows) {
        const double worst = *std::max_element(row.mean_rho2.begin(), row.mean_rho2.end());
        if (!fallback || worst < fallback_rho) {
            fallback = &row;
            fallback_rho = worst;
        }
    }
    return {fallback->deweight, true};
}

// --- JSON bindings ---------------------------------------------------------

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig cfg;
        const auto& jd = j.at("data");
        cfg.data.path = jd.at("path").get<std::string>();
        cfg.data.outcome = jd.at("outcome").get<std::string>();
        cfg.data.sensitive = jd.at("sensitive").get<std::vector<std::string>>();
        if (jd.contains("c_features"))
            cfg.data.c_features = jd.at("c_features").get<std::vector<std::string>>();
        if (jd.contains("positive_class"))
            cfg.data.positive_class = jd.at("positive_class").get<std::string>();
        cfg.family = family_from_name(j.at("family").get<std::string>());
        if (j.contains("params")) {
            const auto& jp = j.at("params");
            if (jp.contains("k")) cfg.params.k = jp.at("k").get<int>();
            if (jp.contains("lambda")) cfg.params.lambda = jp.at("lambda").get<double>();
            if (jp.contains("n_trees")) cfg.params.n_trees = jp.at("n_trees").get<int>();
            if (jp.contains("min_node_size"))
                cfg.params.min_node_size = jp.at("min_node_size").get<int>();
            if (jp.contains("mtry")) cfg.params.mtry = jp.at("mtry").get<int>();
        }
        cfg.deweight_grid = j.at("deweight_grid").get<std::vector<double>>();
        if (j.contains("replications")) cfg.replications = j.at("replications").get<int>();
        if (j.contains("holdout_size"))
            cfg.holdout_size = j.at("holdout_size").get<Eigen::Index>();
        if (j.contains("master_seed"))
            cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("w_family"))
            cfg.w_family = j.at("w_family") == "linear-probability"
                               ? WAuxFamily::linear_probability
                               : WAuxFamily::knn;
        if (j.contains("w_k")) cfg.w_k = j.at("w_k").get<int>();
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad experiment config: ") + e.what());
    }
}

inline nlohmann::json table_to_json(const ReplicationTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json categories = nlohmann::json::array();
        for (std::size_t c = 0; c < row.categories.size(); ++c)
            categories.push_back({{"category", row.categories[c]},
                                  {"mean_rho2", row.mean_rho2[c]},
                                  {"se_rho2", row.se_rho2[c]}});
        rows.push_back({{"deweight", row.deweight},
                        {"mean_utility", row.mean_utility},
                        {"se_utility", row.se_utility},
                        {"rho2", categories},
                        {"n_replications", row.n_replications}});
    }
    return {{"utility_metric", table.utility_metric}, {"rows", rows}};
}

inline nlohmann::json record_to_json(const ReplicationRecord& rec) {
    nlohmann::json rho = nlohmann::json::array();
    for (const auto& [label, value] : rec.rho2)
        rho.push_back({{"category", label}, {"rho2", value}});
    return {{"deweight", rec.deweight},
            {"replication", rec.replication},
            {"seed", rec.seed},
            {"utility", rec.utility},
            {"rho2", rho}};
}

} // namespace edf

#endif
