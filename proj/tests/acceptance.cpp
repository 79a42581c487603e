// Acceptance suite: one pass/fail line per criterion. Exit 0 only if every
// non-optional criterion passes. Criterion 9 runs only when the external
// datasets are present (EDF_DATA_DIR or ./data).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edf/edf.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int num, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++failures;
}

void report_skip(int num, const std::string& name, const std::string& why) {
    std::printf("[SKIP] criterion %d: %s — %s\n", num, name.c_str(), why.c_str());
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Dense normal-equation oracle by Gauss-Jordan elimination with partial
// pivoting; deliberately independent of the library's Eigen-based solvers.
Eigen::VectorXd gauss_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index piv = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        a.row(col).swap(a.row(piv));
        std::swap(b[col], b[piv]);
        const double d = a(col, col);
        a.row(col) /= d;
        b[col] /= d;
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a(r, col);
            a.row(r) -= f * a.row(col);
            b[r] -= f * b[col];
        }
    }
    return b;
}

edf::Dataset random_instance(int n, int p, edf::Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n), s(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = gauss(rng);
        y[i] = gauss(rng);
        s[i] = gauss(rng);
    }
    std::vector<bool> c_mask(static_cast<size_t>(p), true);
    Eigen::MatrixXd sm(n, 1);
    sm.col(0) = s;
    return edf::make_dataset(x, y, edf::OutcomeKind::continuous, sm, {"s"}, c_mask);
}

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    edf::Rng rng(101);
    std::uniform_int_distribution<int> n_dist(20, 200), p_dist(1, 10);
    std::uniform_real_distribution<double> d_dist(0.0, 50.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = n_dist(rng), p = p_dist(rng);
        edf::Dataset ds = random_instance(n, p, rng);
        edf::DeweightSpec spec = edf::DeweightSpec::none(ds.p());
        for (int j = 0; j < p; ++j) spec.ridge_d[j] = d_dist(rng);
        const auto closed = edf::fit_closed_form(ds, spec);
        const auto aug = edf::fit_augmented(ds, spec);
        const double rel = (closed.coefficients - aug.coefficients).norm() /
                           std::max(closed.coefficients.norm(), 1e-300);
        worst = std::max(worst, rel);
    }
    const double secs = elapsed_s(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel diff %.3e, %.1f s", worst, secs);
    report(1, "ridge-path equivalence (closed form vs augmented rows)",
           worst <= 1e-8 && secs < 10.0, buf);
}

void criterion_2() {
    edf::Rng rng(202);
    std::uniform_int_distribution<int> n_dist(20, 200), p_dist(1, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = n_dist(rng), p = p_dist(rng);
        edf::Dataset ds = random_instance(n, p, rng);
        const auto fit = edf::fit_closed_form(ds, edf::DeweightSpec::none(ds.p()));
        Eigen::MatrixXd xc = ds.x.rowwise() - ds.x.colwise().mean();
        Eigen::VectorXd yc = ds.y.array() - ds.y.mean();
        const Eigen::VectorXd oracle = gauss_solve(xc.transpose() * xc, xc.transpose() * yc);
        worst = std::max(worst, (fit.coefficients - oracle).norm() /
                                    std::max(oracle.norm(), 1e-300));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max rel diff %.3e", worst);
    report(2, "zero-penalty fit reduces to ordinary least squares", worst <= 1e-10, buf);
}

void criterion_3() {
    edf::Rng rng(303);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 150, p = 4, q = 2;
        Eigen::MatrixXd s(n, q), x(n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < q; ++j) s(i, j) = gauss(rng);
            for (int j = 0; j < p; ++j) x(i, j) = 0.7 * s(i, j % q) + gauss(rng);
            y[i] = x.row(i).sum() + s.row(i).sum() + gauss(rng);
        }
        std::vector<bool> c_mask(static_cast<size_t>(p), false);
        edf::Dataset ds = edf::make_dataset(x, y, edf::OutcomeKind::continuous, s,
                                            {"s1", "s2"}, c_mask);
        const auto model = edf::fit_twostage(ds, 1.0);
        const Eigen::VectorXd yhat = model.predict_sfree(ds.x, ds.s);
        Eigen::VectorXd yc = yhat.array() - yhat.mean();
        for (int j = 0; j < q; ++j) {
            Eigen::VectorXd sc = ds.s.col(j).array() - ds.s.col(j).mean();
            worst = std::max(worst, std::abs(yc.dot(sc) / (n - 1)));
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |cov| %.3e", worst);
    report(3, "two-stage predictions uncorrelated with sensitive attributes",
           worst <= 1e-8, buf);
}

void criterion_4() {
    const auto t0 = std::chrono::steady_clock::now();
    edf::ExperimentConfig cfg;
    cfg.family = edf::ModelFamily::linear_edf;
    cfg.deweight_grid = {0.0, 1e6};
    cfg.replications = 100;
    cfg.holdout_size = 600;
    cfg.master_seed = 44;
    cfg.threads = 8;
    // Outcome noise is scaled so the proxy carries real but not dominant
    // signal; dropping it costs accuracy without wrecking the model.
    const edf::Dataset ds = testutil::proxy_fixture(3000, 44, 0.5, /*y_noise=*/2.0);
    const auto table = edf::run_experiment(cfg, ds);
    const auto& base = table.rows[0];
    const auto& heavy = table.rows[1];
    const double rho0 = base.mean_rho2[0];
    const double rho1 = heavy.mean_rho2[0];
    const double se = std::max(base.se_rho2[0], heavy.se_rho2[0]);
    const bool rho_ok = rho1 < rho0 - 3.0 * se;
    const bool mape_ok = heavy.mean_utility <= 1.25 * base.mean_utility;
    const double secs = elapsed_s(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "rho^2 %.4f -> %.4f (se %.4f), MAPE %.4f -> %.4f, %.1f s", rho0,
                  rho1, se, base.mean_utility, heavy.mean_utility, secs);
    report(4, "synthetic fairness-utility tradeoff, linear family",
           rho_ok && mape_ok && secs < 120.0, buf);
}

void criterion_5() {
    edf::Rng rng(505);
    std::uniform_int_distribution<int> n_dist(50, 500), p_dist(3, 8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const int n = n_dist(rng), p = p_dist(rng);
        edf::Dataset ds = random_instance(n, p, rng);
        const int killed = 0; // the single C feature
        edf::DeweightSpec spec = edf::DeweightSpec::none(ds.p());
        spec.factor = Eigen::VectorXd::Ones(p);
        spec.factor[killed] = 0.0;
        const auto model = edf::knn_fit(ds, spec, 7);

        // Column-deleted twin.
        Eigen::MatrixXd x2(n, p - 1);
        Eigen::Index c = 0;
        for (int j = 0; j < p; ++j)
            if (j != killed) x2.col(c++) = ds.x.col(j);
        std::vector<bool> mask2(static_cast<size_t>(p - 1), false);
        edf::Dataset ds2 =
            edf::make_dataset(x2, ds.y, ds.y_kind, ds.s, ds.s_names, mask2,
                              /*assume_standardized=*/true);
        const auto model2 = edf::knn_fit(ds2, edf::DeweightSpec::none(p - 1), 7);

        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXd query(p), query2(p - 1);
            for (int j = 0; j < p; ++j) query[j] = gauss(rng);
            c = 0;
            for (int j = 0; j < p; ++j)
                if (j != killed) query2[c++] = query[j];
            if (model.predict_one(query) != model2.predict_one(query2)) {
                ok = false;
                break;
            }
        }
    }
    report(5, "k-NN weight zero equals column deletion exactly", ok);
}

void criterion_6() {
    const int proxy = 0;
    bool exclusion_ok = true;
    // Exact exclusion: weight 0 on the proxy, full 500-tree forests.
    for (int seed = 0; seed < 20 && exclusion_ok; ++seed) {
        edf::Dataset ds = testutil::proxy_fixture(250, 9000 + std::uint64_t(seed));
        edf::ForestConfig cfg;
        cfg.n_trees = 500;
        cfg.seed = edf::derive_seed(778, std::uint64_t(seed));
        cfg.sampling_weights = Eigen::VectorXd::Ones(ds.p());
        cfg.sampling_weights[proxy] = 0.0;
        if (edf::forest_fit(ds, cfg).split_counts()[proxy] != 0) exclusion_ok = false;
    }
    // Monotone usage: the proxy's share of splits, averaged over 20 seeds,
    // is nonincreasing as its sampling weight drops. mtry = 1 so the weight
    // actually gates which feature gets considered.
    bool monotone_ok = true;
    edf::Dataset ds = testutil::proxy_fixture(250, 606);
    double prev_share = 1.1;
    for (double factor : {1.0, 0.5, 0.1}) {
        double share_sum = 0.0;
        for (int seed = 0; seed < 20; ++seed) {
            edf::ForestConfig cfg;
            cfg.n_trees = 50;
            cfg.mtry = 1;
            cfg.seed = edf::derive_seed(777, std::uint64_t(seed));
            cfg.sampling_weights = Eigen::VectorXd::Ones(ds.p());
            cfg.sampling_weights[proxy] = factor;
            const auto counts = edf::forest_fit(ds, cfg).split_counts();
            share_sum += double(counts[proxy]) / double(counts.sum());
        }
        const double share = share_sum / 20.0;
        if (share > prev_share + 1e-12) monotone_ok = false;
        prev_share = share;
    }
    report(6, "forest weight-zero exclusion and monotone split usage",
           exclusion_ok && monotone_ok,
           exclusion_ok ? (monotone_ok ? "" : "usage not monotone")
                        : "excluded feature was split on");
}

void criterion_7() {
    edf::Rng rng(707);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 40;
        Eigen::VectorXd t(m), w(m);
        for (int i = 0; i < m; ++i) {
            t[i] = gauss(rng);
            w[i] = 0.4 * t[i] + gauss(rng);
        }
        // Textbook Pearson via the sum formula.
        double st = 0, sw = 0, stt = 0, sww = 0, stw = 0;
        for (int i = 0; i < m; ++i) {
            st += t[i];
            sw += w[i];
            stt += t[i] * t[i];
            sww += w[i] * w[i];
            stw += t[i] * w[i];
        }
        const double num = m * stw - st * sw;
        const double den =
            std::sqrt(m * stt - st * st) * std::sqrt(m * sww - sw * sw);
        const double r = num / den;
        worst = std::max(worst, std::abs(edf::rho_squared(t, w) - r * r));
    }
    Eigen::VectorXd t(1000);
    for (int i = 0; i < 1000; ++i) t[i] = gauss(rng);
    const bool self_ok = std::abs(edf::rho_squared(t, t) - 1.0) <= 1e-12;
    Eigen::VectorXd a(10000), b(10000);
    for (int i = 0; i < 10000; ++i) {
        a[i] = gauss(rng);
        b[i] = gauss(rng);
    }
    const double indep = edf::rho_squared(a, b);
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |diff| %.3e, indep %.4f", worst, indep);
    report(7, "rho^2 matches textbook Pearson", worst <= 1e-12 && self_ok && indep < 0.01,
           buf);
}

void criterion_8() {
    edf::ExperimentConfig cfg;
    cfg.family = edf::ModelFamily::linear_edf;
    cfg.deweight_grid = {0.0, 25.0, 625.0};
    cfg.replications = 8;
    cfg.holdout_size = 100;
    cfg.master_seed = 88;
    const edf::Dataset ds = testutil::proxy_fixture(500, 88);
    cfg.threads = 1;
    const std::string serial = edf::run_experiment(cfg, ds).text_table();
    cfg.threads = 8;
    const std::string parallel = edf::run_experiment(cfg, ds).text_table();
    report(8, "byte-identical tables, serial vs 8-way parallel", serial == parallel);
}

fs::path external_data_dir() {
    if (const char* env = std::getenv("EDF_DATA_DIR")) return fs::path(env);
    return fs::path("data");
}

bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

void criterion_9() {
    const fs::path dir = external_data_dir();
    const fs::path census = dir / "census.csv";
    const fs::path compas = dir / "compas.csv";
    const fs::path mortgage = dir / "mortgage.csv";
    if (!fs::exists(census) && !fs::exists(compas) && !fs::exists(mortgage)) {
        report_skip(9, "external dataset ranges",
                    "no external CSVs found (set EDF_DATA_DIR to enable)");
        return;
    }
    bool ok = true;
    std::string detail;
    auto run = [&](const fs::path& path, edf::ModelFamily family, double deweight,
                   const char* outcome, const char* sensitive, double ulo, double uhi,
                   double rlo, double rhi) {
        if (!fs::exists(path)) return;
        edf::ExperimentConfig cfg;
        cfg.family = family;
        cfg.deweight_grid = {deweight};
        cfg.replications = 10;
        cfg.master_seed = 99;
        cfg.threads = 8;
        edf::Dataset ds = edf::load_csv(path.string(), outcome, {sensitive}, {});
        cfg.holdout_size = static_cast<int>(ds.n() / 5);
        const auto table = edf::run_experiment(cfg, ds);
        const auto& row = table.rows[0];
        double rho = 0.0;
        for (double v : row.mean_rho2) rho = std::max(rho, v);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: utility %.4f rho^2 %.4f; ",
                      path.filename().string().c_str(), row.mean_utility, rho);
        detail += buf;
        if (!in_range(row.mean_utility, ulo, uhi) || !in_range(rho, rlo, rhi))
            ok = false;
    };
    run(census, edf::ModelFamily::linear_edf, 1.0, "income", "race", 24500, 26800, 0.18,
        0.26);
    run(compas, edf::ModelFamily::forest, 1.0, "recid", "race", 0.19, 0.24, 0.27,
        0.35);
    run(mortgage, edf::ModelFamily::knn, 1.0, "deny", "black", 0.07, 0.12, 0.04,
        0.08);
    report(9, "external dataset ranges", ok, detail);
}

} // namespace

int main() {
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4();
        criterion_5();
        criterion_6();
        criterion_7();
        criterion_8();
        criterion_9();
    } catch (const std::exception& e) {
        std::printf("[FAIL] unexpected exception: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
