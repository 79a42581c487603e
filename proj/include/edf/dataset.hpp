#ifndef EDF_DATASET_HPP
#define EDF_DATASET_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edf/csv.hpp"
#include "edf/errors.hpp"
#include "edf/rng.hpp"
#include "edf/stats.hpp"

namespace edf {

enum class ColumnKind { numeric, categorical, onehot_derived };
enum class OutcomeKind { continuous, binary };

struct SchemaColumn {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::string source_column; // onehot_derived only
    std::string category_label; // onehot_derived only
};

struct FeatureSchema {
    std::vector<SchemaColumn> columns;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return int(i);
        return -1;
    }
};

// Per-column standardization parameters. One-hot columns carry the identity
// transform (mean 0, stddev 1) and stay on their raw 0/1 scale.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
};

// Per-feature deweighting hyperparameters. ridge_d holds the d_i of the
// diagonal penalty matrix D (user-facing configs carry delta_i = d_i^2);
// factor holds the multiplicative weight used by k-NN and random forests.
struct DeweightSpec {
    Eigen::VectorXd ridge_d; // >= 0; zero off C
    Eigen::VectorXd factor;  // in [0,1]; one off C

    static DeweightSpec none(Eigen::Index p) {
        DeweightSpec s;
        s.ridge_d = Eigen::VectorXd::Zero(p);
        s.factor = Eigen::VectorXd::Ones(p);
        return s;
    }

    // Common scalar deweighting applied to every feature in C; this is the
    // usual one-dimensional tuning knob.
    static DeweightSpec common(const std::vector<bool>& c_mask, double ridge_delta,
                               double factor_value) {
        if (ridge_delta < 0) throw config_error("ridge delta must be nonnegative");
        if (factor_value < 0 || factor_value > 1)
            throw config_error("deweight factor must lie in [0,1]");
        DeweightSpec s = none(Eigen::Index(c_mask.size()));
        for (std::size_t i = 0; i < c_mask.size(); ++i) {
            if (c_mask[i]) {
                s.ridge_d[Eigen::Index(i)] = std::sqrt(ridge_delta);
                s.factor[Eigen::Index(i)] = factor_value;
            }
        }
        return s;
    }

    void validate(const std::vector<bool>& c_mask) const {
        if (std::size_t(ridge_d.size()) != c_mask.size() ||
            std::size_t(factor.size()) != c_mask.size())
            throw config_error("DeweightSpec: dimension mismatch with c-mask");
        for (std::size_t i = 0; i < c_mask.size(); ++i) {
            const auto j = Eigen::Index(i);
            if (!std::isfinite(ridge_d[j]) || !std::isfinite(factor[j]))
                throw config_error("DeweightSpec: non-finite entry");
            if (ridge_d[j] < 0) throw config_error("DeweightSpec: negative ridge d");
            if (factor[j] < 0 || factor[j] > 1)
                throw config_error("DeweightSpec: factor outside [0,1]");
            if (!c_mask[i] && (ridge_d[j] != 0.0 || factor[j] != 1.0))
                throw config_error("DeweightSpec: deweighting applied outside C");
        }
    }
};

// Standardized design matrix plus everything needed to interpret it: outcome,
// sensitive attributes (never part of x), schema, and the C designation.
struct Dataset {
    Eigen::MatrixXd x; // n x p, numeric columns standardized
    Eigen::VectorXd y;
    OutcomeKind y_kind = OutcomeKind::continuous;
    Eigen::MatrixXd s; // n x q
    std::vector<std::string> s_names;
    FeatureSchema schema;
    std::vector<bool> c_mask;
    Standardization standardization;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }
    Eigen::Index q() const { return s.cols(); }

    // Recovers the pre-standardization feature values.
    Eigen::MatrixXd raw_x() const {
        Eigen::MatrixXd raw = x;
        for (Eigen::Index j = 0; j < raw.cols(); ++j)
            raw.col(j) = raw.col(j) * standardization.stddev[j] +
                         Eigen::VectorXd::Constant(raw.rows(), standardization.mean[j]);
        return raw;
    }

    // Applies this dataset's standardization to raw feature rows.
    Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& raw) const {
        if (raw.cols() != p()) throw data_error("standardize_rows: dimension mismatch");
        Eigen::MatrixXd out = raw;
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out.col(j) = (out.col(j).array() - standardization.mean[j]) /
                         standardization.stddev[j];
        return out;
    }
};

namespace detail {

inline void standardize_in_place(Eigen::MatrixXd& x, const FeatureSchema& schema,
                                 Standardization& st) {
    const auto n = x.rows();
    st.mean = Eigen::VectorXd::Zero(x.cols());
    st.stddev = Eigen::VectorXd::Ones(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (schema.columns[std::size_t(j)].kind != ColumnKind::numeric) continue;
        const double m = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - m).square().sum() / double(n - 1));
        if (sd == 0.0)
            throw data_error("constant column: " + schema.columns[std::size_t(j)].name);
        st.mean[j] = m;
        st.stddev[j] = sd;
        x.col(j) = (x.col(j).array() - m) / sd;
    }
}

inline void check_finite(const Eigen::MatrixXd& m, const std::string& what) {
    if (!m.allFinite()) throw data_error("non-finite value in " + what);
}

} // namespace detail

// Builds a Dataset from in-memory raw numeric features. Columns are treated
// as numeric and standardized unless assume_standardized is set, in which
// case x is stored verbatim with the identity transform.
inline Dataset make_dataset(Eigen::MatrixXd x_raw, Eigen::VectorXd y, OutcomeKind y_kind,
                            Eigen::MatrixXd s, std::vector<std::string> s_names,
                            std::vector<bool> c_mask, bool assume_standardized = false) {
    if (x_raw.rows() < 2 || x_raw.cols() < 1)
        throw data_error("dataset needs n >= 2 and p >= 1");
    if (y.size() != x_raw.rows() || (s.size() > 0 && s.rows() != x_raw.rows()))
        throw data_error("row count mismatch between x, y, s");
    if (c_mask.size() != std::size_t(x_raw.cols()))
        throw data_error("c-mask length mismatch");
    detail::check_finite(x_raw, "x");
    if (!y.allFinite()) throw data_error("non-finite value in y");
    if (y_kind == OutcomeKind::binary)
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] != 0.0 && y[i] != 1.0)
                throw data_error("binary outcome must be exactly 0 or 1");

    Dataset d;
    d.schema.columns.reserve(std::size_t(x_raw.cols()));
    for (Eigen::Index j = 0; j < x_raw.cols(); ++j)
        d.schema.columns.push_back({"x" + std::to_string(j + 1), ColumnKind::numeric, "", ""});
    d.x = std::move(x_raw);
    d.y = std::move(y);
    d.y_kind = y_kind;
    d.s = std::move(s);
    d.s_names = std::move(s_names);
    d.c_mask = std::move(c_mask);
    if (assume_standardized) {
        d.standardization.mean = Eigen::VectorXd::Zero(d.p());
        d.standardization.stddev = Eigen::VectorXd::Ones(d.p());
    } else {
        detail::standardize_in_place(d.x, d.schema, d.standardization);
    }
    return d;
}

namespace detail {

struct RawColumn {
    std::string name;
    bool numeric = true;
    std::vector<double> values; // numeric columns
    std::vector<std::string> labels; // categorical columns
};

inline RawColumn classify_column(const csv::Table& t, std::size_t col) {
    RawColumn c;
    c.name = t.header[col];
    c.values.reserve(t.rows.size());
    c.labels.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        const std::string& cell = row[col];
        if (cell.empty())
            throw data_error("missing value in column '" + c.name + "'");
        double v;
        if (c.numeric && csv::parse_double(cell, v)) {
            if (!std::isfinite(v))
                throw data_error("non-finite cell in column '" + c.name + "'");
            c.values.push_back(v);
        } else {
            c.numeric = false;
        }
        c.labels.push_back(cell);
    }
    if (!c.numeric) c.values.clear();
    return c;
}

inline std::vector<std::string> sorted_categories(const std::vector<std::string>& labels) {
    std::set<std::string> cats(labels.begin(), labels.end());
    return {cats.begin(), cats.end()};
}

} // namespace detail

// Ingests a CSV file: categorical columns are one-hot encoded (one column per
// category, no reference level dropped), numeric feature columns are
// standardized, and the C designation is expanded over derived columns.
inline Dataset load_csv(const std::string& path, const std::string& outcome,
                        const std::vector<std::string>& sensitive,
                        const std::vector<std::string>& c_features,
                        const std::optional<std::string>& positive_class = std::nullopt) {
    const csv::Table table = csv::read_file(path);
    const auto n = table.rows.size();
    if (n < 2) throw data_error("dataset needs at least 2 rows: " + path);

    auto column_index = [&](const std::string& name) {
        for (std::size_t j = 0; j < table.header.size(); ++j)
            if (table.header[j] == name) return j;
        throw data_error("missing column: " + name);
    };

    for (const auto& s_name : sensitive)
        if (std::find(c_features.begin(), c_features.end(), s_name) != c_features.end())
            throw data_error("sensitive column '" + s_name +
                             "' cannot be listed among c-features: S must be excluded from X");

    {
        std::set<std::string> seen(table.header.begin(), table.header.end());
        if (seen.size() != table.header.size())
            throw data_error("duplicate column names in " + path);
    }

    (void)column_index(outcome);
    for (const auto& s_name : sensitive) (void)column_index(s_name);
    for (const auto& c_name : c_features) (void)column_index(c_name);

    const std::set<std::string> sensitive_set(sensitive.begin(), sensitive.end());
    const std::set<std::string> c_set(c_features.begin(), c_features.end());

    // Outcome.
    detail::RawColumn y_col = detail::classify_column(table, column_index(outcome));
    Eigen::VectorXd y(n);
    OutcomeKind y_kind;
    if (y_col.numeric) {
        bool all01 = true;
        for (double v : y_col.values)
            if (v != 0.0 && v != 1.0) { all01 = false; break; }
        y_kind = all01 ? OutcomeKind::binary : OutcomeKind::continuous;
        for (std::size_t i = 0; i < n; ++i) y[Eigen::Index(i)] = y_col.values[i];
    } else {
        auto cats = detail::sorted_categories(y_col.labels);
        if (cats.size() != 2)
            throw data_error("categorical outcome '" + outcome + "' must have exactly 2 values");
        // Lexicographically larger label is the positive class by default.
        std::string positive = positive_class.value_or(cats[1]);
        if (positive != cats[0] && positive != cats[1])
            throw data_error("positive class '" + positive + "' not found in outcome column");
        y_kind = OutcomeKind::binary;
        for (std::size_t i = 0; i < n; ++i)
            y[Eigen::Index(i)] = y_col.labels[i] == positive ? 1.0 : 0.0;
    }

    // Sensitive attributes: numeric columns pass through, categorical ones
    // expand to one indicator per category.
    std::vector<std::pair<std::string, Eigen::VectorXd>> s_cols;
    for (const auto& s_name : sensitive) {
        detail::RawColumn col = detail::classify_column(table, column_index(s_name));
        if (col.numeric) {
            Eigen::VectorXd v(n);
            for (std::size_t i = 0; i < n; ++i) v[Eigen::Index(i)] = col.values[i];
            s_cols.emplace_back(s_name, std::move(v));
        } else {
            for (const auto& cat : detail::sorted_categories(col.labels)) {
                Eigen::VectorXd v(n);
                for (std::size_t i = 0; i < n; ++i)
                    v[Eigen::Index(i)] = col.labels[i] == cat ? 1.0 : 0.0;
                s_cols.emplace_back(s_name + "." + cat, std::move(v));
            }
        }
    }

    // Features: everything that is neither the outcome nor sensitive.
    FeatureSchema schema;
    std::vector<Eigen::VectorXd> x_cols;
    std::vector<bool> c_mask;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        const std::string& name = table.header[j];
        if (name == outcome || sensitive_set.count(name)) continue;
        detail::RawColumn col = detail::classify_column(table, j);
        const bool in_c = c_set.count(name) > 0;
        if (col.numeric) {
            Eigen::VectorXd v(n);
            for (std::size_t i = 0; i < n; ++i) v[Eigen::Index(i)] = col.values[i];
            schema.columns.push_back({name, ColumnKind::numeric, "", ""});
            x_cols.push_back(std::move(v));
            c_mask.push_back(in_c);
        } else {
            for (const auto& cat : detail::sorted_categories(col.labels)) {
                Eigen::VectorXd v(n);
                for (std::size_t i = 0; i < n; ++i)
                    v[Eigen::Index(i)] = col.labels[i] == cat ? 1.0 : 0.0;
                schema.columns.push_back({name + "." + cat, ColumnKind::onehot_derived, name, cat});
                x_cols.push_back(std::move(v));
                c_mask.push_back(in_c);
            }
        }
    }
    if (x_cols.empty()) throw data_error("no feature columns left after excluding outcome and S");

    Dataset d;
    d.schema = std::move(schema);
    d.c_mask = std::move(c_mask);
    d.x.resize(Eigen::Index(n), Eigen::Index(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j) d.x.col(Eigen::Index(j)) = x_cols[j];
    d.y = std::move(y);
    d.y_kind = y_kind;
    d.s.resize(Eigen::Index(n), Eigen::Index(s_cols.size()));
    for (std::size_t j = 0; j < s_cols.size(); ++j) {
        d.s_names.push_back(s_cols[j].first);
        d.s.col(Eigen::Index(j)) = s_cols[j].second;
    }
    detail::check_finite(d.x, "x");
    detail::standardize_in_place(d.x, d.schema, d.standardization);
    return d;
}

// Disjoint uniform-random partition. Train standardization is recomputed on
// the train rows and applied to the test rows.
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& data,
                                                 Eigen::Index holdout_size,
                                                 std::uint64_t seed) {
    const auto n = data.n();
    if (holdout_size < 1) throw config_error("holdout size must be positive");
    if (holdout_size >= n)
        throw data_error("holdout size " + std::to_string(holdout_size) +
                         " must be smaller than n = " + std::to_string(n));

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const Eigen::MatrixXd raw = data.raw_x();
    auto take = [&](std::size_t begin, std::size_t count) {
        Dataset out;
        out.schema = data.schema;
        out.c_mask = data.c_mask;
        out.y_kind = data.y_kind;
        out.s_names = data.s_names;
        out.x.resize(Eigen::Index(count), data.p());
        out.y.resize(Eigen::Index(count));
        out.s.resize(Eigen::Index(count), data.q());
        for (std::size_t i = 0; i < count; ++i) {
            const auto r = idx[begin + i];
            out.x.row(Eigen::Index(i)) = raw.row(r);
            out.y[Eigen::Index(i)] = data.y[r];
            if (data.q() > 0) out.s.row(Eigen::Index(i)) = data.s.row(r);
        }
        return out;
    };

    Dataset test = take(0, std::size_t(holdout_size));
    Dataset train = take(std::size_t(holdout_size), std::size_t(n - holdout_size));
    detail::standardize_in_place(train.x, train.schema, train.standardization);
    test.standardization = train.standardization;
    for (Eigen::Index j = 0; j < test.x.cols(); ++j)
        test.x.col(j) = (test.x.col(j).array() - train.standardization.mean[j]) /
                        train.standardization.stddev[j];
    return {std::move(train), std::move(test)};
}

// Advisory proxy ranking: squared sample correlation between each feature and
// the chosen sensitive column, sorted descending. The user still designates C.
inline std::vector<std::pair<std::string, double>>
rank_proxy_features(const Dataset& data, Eigen::Index sensitive_index) {
    if (sensitive_index < 0 || sensitive_index >= data.q())
        throw data_error("sensitive index out of range");
    if (data.n() < 3) throw data_error("rank_proxy_features: need n >= 3");
    const Eigen::VectorXd s_col = data.s.col(sensitive_index);
    if ((s_col.array() == s_col[0]).all())
        throw data_error("degenerate sensitive column: " + data.s_names[std::size_t(sensitive_index)]);

    std::vector<std::pair<std::string, double>> out;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        double score = 0.0;
        const Eigen::VectorXd col = data.x.col(j);
        if (!(col.array() == col[0]).all()) score = rho_squared(col, s_col);
        out.emplace_back(data.schema.columns[std::size_t(j)].name, score);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

} // namespace edf

#endif
