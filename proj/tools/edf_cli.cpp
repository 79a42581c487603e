// edf: fairness-aware prediction with explicitly deweighted proxy features.
//
// Subcommands: fit, predict, evaluate, experiment, rank-proxies.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.
// Result artifacts go to stdout / --out; diagnostics go to stderr.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "edf/edf.hpp"

namespace {

using edf::json;

unsigned thread_count(unsigned flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("EDF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return unsigned(v);
    }
    return 1;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw edf::config_error("cannot open config: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw edf::config_error("malformed JSON in " + path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw edf::data_error("cannot write: " + path);
    out << content;
}

edf::DataConfig data_config_from_json(const json& jd) {
    try {
        edf::DataConfig dc;
        dc.path = jd.at("path").get<std::string>();
        dc.outcome = jd.at("outcome").get<std::string>();
        dc.sensitive = jd.at("sensitive").get<std::vector<std::string>>();
        if (jd.contains("c_features"))
            dc.c_features = jd.at("c_features").get<std::vector<std::string>>();
        if (jd.contains("positive_class"))
            dc.positive_class = jd.at("positive_class").get<std::string>();
        return dc;
    } catch (const json::exception& e) {
        throw edf::config_error(std::string("bad data config: ") + e.what());
    }
}

json data_config_to_json(const edf::DataConfig& dc) {
    json j{{"path", dc.path},
           {"outcome", dc.outcome},
           {"sensitive", dc.sensitive},
           {"c_features", dc.c_features}};
    if (dc.positive_class) j["positive_class"] = *dc.positive_class;
    return j;
}

edf::Dataset load_from_config(const edf::DataConfig& dc) {
    return edf::load_csv(dc.path, dc.outcome, dc.sensitive, dc.c_features, dc.positive_class);
}

// Re-encodes raw CSV rows against a fitted model's feature schema: numeric
// columns pass through, one-hot columns become indicators of their recorded
// source category.
Eigen::MatrixXd encode_with_schema(const edf::csv::Table& table,
                                   const edf::FeatureSchema& schema) {
    auto column_index = [&](const std::string& name) {
        for (std::size_t j = 0; j < table.header.size(); ++j)
            if (table.header[j] == name) return j;
        throw edf::data_error("missing column: " + name);
    };
    const auto n = table.rows.size();
    Eigen::MatrixXd x(n, schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        const auto& col = schema.columns[c];
        if (col.kind == edf::ColumnKind::onehot_derived) {
            const std::size_t src = column_index(col.source_column);
            for (std::size_t i = 0; i < n; ++i)
                x(Eigen::Index(i), Eigen::Index(c)) =
                    table.rows[i][src] == col.category_label ? 1.0 : 0.0;
        } else {
            const std::size_t src = column_index(col.name);
            for (std::size_t i = 0; i < n; ++i) {
                double v;
                if (!edf::csv::parse_double(table.rows[i][src], v) || !std::isfinite(v))
                    throw edf::data_error("non-numeric cell in column '" + col.name + "'");
                x(Eigen::Index(i), Eigen::Index(c)) = v;
            }
        }
    }
    return x;
}

Eigen::MatrixXd standardize_with(const Eigen::MatrixXd& raw, const edf::Standardization& st) {
    Eigen::MatrixXd out = raw;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        out.col(j) = (out.col(j).array() - st.mean[j]) / st.stddev[j];
    return out;
}

struct LoadedModel {
    json doc;
    std::string family;
    edf::FeatureSchema schema;
    edf::DataConfig roles;
    edf::RidgeDeweightModel ridge;
    edf::TwoStageModel twostage;
    edf::KnnModel knn;
    edf::ForestModel forest;
};

LoadedModel load_model(const std::string& path) {
    LoadedModel m;
    m.doc = read_json_file(path);
    try {
        m.family = m.doc.at("model").at("family").get<std::string>();
        m.schema = edf::schema_from_json(m.doc.at("schema"));
        m.roles = data_config_from_json(m.doc.at("roles"));
    } catch (const json::exception& e) {
        throw edf::config_error(std::string("bad model file: ") + e.what());
    }
    const json& jm = m.doc.at("model");
    if (m.family == "linear-edf") {
        m.ridge = edf::ridge_from_json(jm);
    } else if (m.family == "twostage") {
        m.twostage = edf::twostage_from_json(jm);
    } else if (m.family == "forest") {
        m.forest = edf::forest_from_json(jm);
    } else if (m.family == "knn") {
        const json& ref = jm.at("data_ref");
        const std::string data_path = ref.at("path").get<std::string>();
        if (edf::fnv1a_file_hash(data_path) != ref.at("hash").get<std::uint64_t>())
            throw edf::data_error("training data at " + data_path +
                                  " no longer matches the hash recorded in the model");
        edf::Dataset train = load_from_config(data_config_from_json(ref.at("roles")));
        edf::DeweightSpec spec = edf::DeweightSpec::none(train.p());
        spec.factor = edf::vec_from_json(jm.at("weights"));
        m.knn = edf::knn_fit(train, spec, jm.at("k").get<int>());
    } else {
        throw edf::config_error("unknown model family in model file: " + m.family);
    }
    return m;
}

edf::Predictor predictor_for(const LoadedModel& m) {
    if (m.family == "linear-edf") return edf::make_predictor(m.ridge);
    if (m.family == "knn") return edf::make_predictor(m.knn);
    if (m.family == "forest") return edf::make_predictor(m.forest);
    throw edf::config_error("family '" + m.family + "' has no plain predictor; "
                            "twostage prediction needs sensitive columns (use evaluate)");
}

int cmd_fit(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed_override) {
    const json cfg = read_json_file(config_path);
    edf::DataConfig dc = data_config_from_json(cfg.at("data"));
    edf::Dataset train = load_from_config(dc);

    std::string family;
    double deweight = 0.0;
    try {
        family = cfg.at("family").get<std::string>();
        if (cfg.contains("deweight")) deweight = cfg.at("deweight").get<double>();
    } catch (const json::exception& e) {
        throw edf::config_error(std::string("bad fit config: ") + e.what());
    }

    json model_json;
    if (family == "linear-edf") {
        const auto spec = edf::DeweightSpec::common(train.c_mask, deweight, 1.0);
        const bool augmented = cfg.value("fit_method", "closed-form") == "augmented";
        edf::RidgeDeweightModel m =
            augmented ? edf::fit_augmented(train, spec) : edf::fit_closed_form(train, spec);
        model_json = edf::ridge_to_json(m);
    } else if (family == "twostage") {
        model_json = edf::twostage_to_json(edf::fit_twostage(train, deweight));
    } else if (family == "knn") {
        const auto spec = edf::DeweightSpec::common(train.c_mask, 0.0, deweight);
        const int k = cfg.contains("params") ? cfg.at("params").value("k", 25) : 25;
        edf::KnnModel m = edf::knn_fit(train, spec, k);
        model_json = edf::knn_to_json(m, dc.path, data_config_to_json(dc));
    } else if (family == "forest") {
        edf::ForestConfig fc;
        if (cfg.contains("params")) {
            const json& jp = cfg.at("params");
            fc.n_trees = jp.value("n_trees", 500);
            fc.min_node_size = jp.value("min_node_size", 10);
            fc.mtry = jp.value("mtry", 0);
            fc.seed = jp.value("seed", std::uint64_t(0));
        }
        if (seed_override) fc.seed = *seed_override;
        fc.sampling_weights = edf::DeweightSpec::common(train.c_mask, 0.0, deweight).factor;
        model_json = edf::forest_to_json(edf::forest_fit(train, fc));
    } else {
        throw edf::config_error("unknown model family: " + family);
    }

    json doc{{"model", std::move(model_json)},
             {"schema", edf::schema_to_json(train.schema)},
             {"roles", data_config_to_json(dc)},
             {"deweight", deweight}};
    write_text_file(out_path, doc.dump(2) + "\n");
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    LoadedModel m = load_model(model_path);
    const edf::csv::Table table = edf::csv::read_file(data_path);
    const Eigen::MatrixXd raw = encode_with_schema(table, m.schema);

    Eigen::VectorXd yhat;
    if (m.family == "linear-edf")
        yhat = m.ridge.predict(standardize_with(raw, m.ridge.standardization));
    else if (m.family == "knn")
        yhat = m.knn.predict(standardize_with(raw, m.knn.standardization));
    else if (m.family == "forest")
        yhat = m.forest.predict(standardize_with(raw, m.forest.standardization));
    else
        throw edf::config_error("predict does not support family: " + m.family);

    std::ostringstream os;
    os << "prediction\n";
    os.precision(17);
    for (Eigen::Index i = 0; i < yhat.size(); ++i) os << yhat[i] << "\n";
    if (out_path.empty())
        std::cout << os.str();
    else
        write_text_file(out_path, os.str());
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& w_family_name, int w_k) {
    LoadedModel m = load_model(model_path);
    // Training rows come from the data reference recorded at fit time; the
    // supplied file is the evaluation split.
    edf::DataConfig eval_roles = m.roles;
    eval_roles.path = data_path;
    edf::Dataset train = load_from_config(m.roles);
    edf::Dataset eval = load_from_config(eval_roles);
    eval.standardization = train.standardization;
    eval.x = train.standardize_rows(eval.raw_x());

    const auto aux = w_family_name == "linear-probability"
                         ? edf::WAuxFamily::linear_probability
                         : edf::WAuxFamily::knn;

    edf::FairnessReport report;
    if (m.family == "twostage") {
        const edf::TwoStageModel* ts = &m.twostage;
        const Eigen::MatrixXd s_eval = eval.s;
        edf::Predictor pred;
        pred.predict = [ts, s_eval](const Eigen::MatrixXd& x) {
            return ts->predict_sfree(x, s_eval);
        };
        report = edf::evaluate_fairness(pred, train, eval, aux, w_k);
    } else {
        report = edf::evaluate_fairness(predictor_for(m), train, eval, aux, w_k);
    }
    std::cout << report.text_table();
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_prefix,
                   std::optional<std::uint64_t> seed_override, unsigned threads) {
    const json jcfg = read_json_file(config_path);
    edf::ExperimentConfig cfg = edf::experiment_config_from_json(jcfg);
    if (seed_override) cfg.master_seed = *seed_override;
    cfg.threads = threads;

    edf::ReplicationTable table = edf::run_experiment(cfg);

    const std::string text = table.text_table();
    std::cout << text;
    if (!out_prefix.empty()) {
        json summary{{"config", jcfg},
                     {"master_seed", cfg.master_seed},
                     {"summary", edf::table_to_json(table)}};
        write_text_file(out_prefix + ".json", summary.dump(2) + "\n");
        write_text_file(out_prefix + ".txt", text);
        std::ostringstream lines;
        for (const auto& rec : table.records) lines << edf::record_to_json(rec).dump() << "\n";
        write_text_file(out_prefix + ".jsonl", lines.str());
    }
    return 0;
}

int cmd_rank_proxies(const std::string& data_path, const std::string& outcome,
                     const std::string& sensitive) {
    edf::Dataset data = edf::load_csv(data_path, outcome, {sensitive}, {});
    // Categorical sensitive columns expand to several indicator columns; rank
    // against the first.
    const auto ranking = edf::rank_proxy_features(data, 0);
    std::cout << "feature,score\n";
    char buf[64];
    for (const auto& [name, score] : ranking) {
        std::snprintf(buf, sizeof buf, "%.6f", score);
        std::cout << name << "," << buf << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EDF: fairness-aware prediction via explicitly deweighted proxy features"};
    app.require_subcommand(1);
    app.fallthrough(); // let --seed/--threads/--verbose follow the subcommand

    std::string config_path, out_path, model_path, data_path;
    std::string w_family = "knn", outcome, sensitive;
    int w_k = 25;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    bool verbose = false;
    app.add_flag("--verbose", verbose, "diagnostic chatter on stderr");
    app.add_option("--threads", threads, "worker threads (default: EDF_THREADS or 1)");
    auto* seed_opt = app.add_option("--seed", seed, "override the seed from the config");

    auto* fit = app.add_subcommand("fit", "fit a single model from a JSON config");
    fit->add_option("--config", config_path, "fit config JSON")->required();
    fit->add_option("--out", out_path, "output model JSON")->required();

    auto* predict = app.add_subcommand("predict", "predict with a fitted model");
    predict->add_option("--model", model_path, "model JSON from fit")->required();
    predict->add_option("--data", data_path, "CSV of rows to predict")->required();
    predict->add_option("--out", out_path, "output CSV (default stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "fairness/utility report on a holdout CSV");
    evaluate->add_option("--model", model_path, "model JSON from fit")->required();
    evaluate->add_option("--data", data_path, "evaluation CSV")->required();
    evaluate->add_option("--w-family", w_family, "auxiliary model for W: knn|linear-probability");
    evaluate->add_option("--w-k", w_k, "k for the knn auxiliary model");

    auto* experiment = app.add_subcommand("experiment", "replicated-holdout deweighting grid");
    experiment->add_option("--config", config_path, "experiment config JSON")->required();
    experiment->add_option("--out", out_path, "output prefix (.json/.txt/.jsonl)");

    auto* rank = app.add_subcommand("rank-proxies", "rank features by squared correlation with S");
    rank->add_option("--data", data_path, "CSV file")->required();
    rank->add_option("--outcome", outcome, "outcome column")->required();
    rank->add_option("--sensitive", sensitive, "sensitive column")->required();

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;
    std::optional<std::uint64_t> seed_override =
        seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt;

    try {
        if (*fit) return cmd_fit(config_path, out_path, seed_override);
        if (*predict) return cmd_predict(model_path, data_path, out_path);
        if (*evaluate) return cmd_evaluate(model_path, data_path, w_family, w_k);
        if (*experiment)
            return cmd_experiment(config_path, out_path, seed_override, thread_count(threads));
        if (*rank) return cmd_rank_proxies(data_path, outcome, sensitive);
    } catch (const edf::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const edf::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const edf::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
