#include <catch_amalgamated.hpp>

#include "edf/forest.hpp"
#include "edf/serialize.hpp"
#include "test_util.hpp"

using namespace edf;
using Catch::Approx;

namespace {

Dataset step_fixture(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i, 0) = unif(rng);
        y[i] = x(i, 0) > 0 ? 1.0 : 0.0;
    }
    return make_dataset(x, y, OutcomeKind::binary, Eigen::MatrixXd(n, 0), {}, {false}, true);
}

} // namespace

TEST_CASE("config validation") {
    std::mt19937_64 rng(1);
    Dataset d = testutil::random_dataset(30, 2, rng);
    ForestConfig cfg;
    cfg.n_trees = 5;

    SECTION("all-zero sampling weights rejected") {
        cfg.sampling_weights = Eigen::VectorXd::Zero(2);
        REQUIRE_THROWS_AS(forest_fit(d, cfg), config_error);
    }
    SECTION("mtry > p rejected") {
        cfg.mtry = 3;
        REQUIRE_THROWS_AS(forest_fit(d, cfg), config_error);
    }
}

TEST_CASE("constant y gives exactly constant predictions") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd x = testutil::random_matrix(40, 2, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(40, 3.25);
    Dataset d = make_dataset(x, y, OutcomeKind::continuous, Eigen::MatrixXd(40, 0), {},
                             {false, false}, true);
    ForestConfig cfg;
    cfg.n_trees = 20;
    auto m = forest_fit(d, cfg);
    for (int q = 0; q < 5; ++q)
        REQUIRE(m.predict_one(testutil::random_vector(2, rng)) == 3.25);
}

TEST_CASE("single-feature step function is learned") {
    Dataset d = step_fixture(200, 3);
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.min_node_size = 10;
    cfg.seed = 7;
    auto m = forest_fit(d, cfg);
    // Evaluate on a fresh sample from the same law.
    Dataset fresh = step_fixture(500, 4);
    const Eigen::VectorXd p1 = m.predict_proba1(fresh.x);
    REQUIRE(opm(fresh.y, p1) <= 0.05);
}

TEST_CASE("hand-built 3-node tree traces correctly") {
    ForestModel m;
    m.p = 2;
    m.y_kind = OutcomeKind::continuous;
    Tree tree;
    tree.nodes.resize(3);
    tree.nodes[0].feature = 1;
    tree.nodes[0].threshold = 0.5;
    tree.nodes[0].left = 1;
    tree.nodes[0].right = 2;
    tree.nodes[1].leaf_value = -7.0;
    tree.nodes[2].leaf_value = 7.0;
    m.trees.push_back(tree);
    Eigen::VectorXd q(2);
    q << 99.0, 0.4;
    REQUIRE(m.predict_one(q) == -7.0);
    q[1] = 0.6;
    REQUIRE(m.predict_one(q) == 7.0);
}

TEST_CASE("probabilities sum to one and lie in [0,1]") {
    Dataset d = step_fixture(100, 5);
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 11;
    auto m = forest_fit(d, cfg);
    std::mt19937_64 rng(6);
    for (int q = 0; q < 25; ++q) {
        const Eigen::Vector2d p = m.predict_proba_one(testutil::random_vector(1, rng));
        REQUIRE(p[0] + p[1] == Approx(1.0).margin(1e-12));
        REQUIRE(p[0] >= 0.0);
        REQUIRE(p[1] >= 0.0);
    }
}

TEST_CASE("regression predictions stay within the training range") {
    std::mt19937_64 rng(7);
    Dataset d = testutil::random_dataset(150, 3, rng);
    ForestConfig cfg;
    cfg.n_trees = 50;
    cfg.seed = 13;
    auto m = forest_fit(d, cfg);
    for (int q = 0; q < 30; ++q) {
        const double pred = m.predict_one(2.0 * testutil::random_vector(3, rng));
        REQUIRE(pred >= d.y.minCoeff());
        REQUIRE(pred <= d.y.maxCoeff());
    }
}

TEST_CASE("sampling weight 0 excludes the feature from every split") {
    std::mt19937_64 rng(8);
    Dataset d = testutil::random_dataset(120, 4, rng);
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = 17;
    cfg.sampling_weights = Eigen::VectorXd::Ones(4);
    cfg.sampling_weights[2] = 0.0;
    auto m = forest_fit(d, cfg);
    REQUIRE(m.split_counts()[2] == 0);
}

TEST_CASE("seed determinism: identical serialized forests, across thread counts") {
    std::mt19937_64 rng(9);
    Dataset d = testutil::random_dataset(80, 3, rng);
    ForestConfig cfg;
    cfg.n_trees = 25;
    cfg.seed = 19;
    auto a = forest_fit(d, cfg);
    cfg.threads = 4;
    auto b = forest_fit(d, cfg);
    REQUIRE(forest_to_json(a).dump() == forest_to_json(b).dump());

    cfg.seed = 20;
    auto c = forest_fit(d, cfg);
    REQUIRE(forest_to_json(a).dump() != forest_to_json(c).dump());
}

TEST_CASE("uniform weights draw candidate features uniformly") {
    // The mtry sampler itself, isolated from split selection: with uniform
    // weights each feature should appear in the candidate set equally often.
    Rng rng(10);
    const int p = 4, mtry = 2, draws = 20000;
    const std::vector<std::pair<int, double>> pool{{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}};
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(p);
    for (int i = 0; i < draws; ++i)
        for (auto j : detail::draw_candidates(pool, mtry, rng)) ++counts[j];
    // Chi-square against uniform; 3 dof, p > 0.001 means stat < 16.27.
    const double expect = double(draws * mtry) / p;
    double chi2 = 0.0;
    for (int j = 0; j < p; ++j)
        chi2 += (double(counts[j]) - expect) * (double(counts[j]) - expect) / expect;
    REQUIRE(chi2 < 16.27);
}

TEST_CASE("no feature dominates splits when averaged over noise datasets") {
    // On a single dataset sampling noise makes some feature genuinely win
    // more often, so aggregate split shares over independent datasets.
    std::mt19937_64 rng(11);
    const Eigen::Index n = 150, p = 4;
    Eigen::VectorXd share_sum = Eigen::VectorXd::Zero(p);
    const int datasets = 12;
    for (int t = 0; t < datasets; ++t) {
        Eigen::MatrixXd x = testutil::random_matrix(n, p, rng);
        Eigen::VectorXd y = testutil::random_vector(n, rng);
        Dataset d = make_dataset(x, y, OutcomeKind::continuous, Eigen::MatrixXd(n, 0),
                                 {}, std::vector<bool>(4, false), true);
        ForestConfig cfg;
        cfg.n_trees = 40;
        cfg.seed = 100 + std::uint64_t(t);
        cfg.mtry = 2;
        const Eigen::VectorXi counts = forest_fit(d, cfg).split_counts();
        share_sum += counts.cast<double>() / double(counts.sum());
    }
    const Eigen::VectorXd shares = share_sum / datasets;
    for (Eigen::Index j = 0; j < p; ++j)
        REQUIRE(shares[j] == Catch::Approx(0.25).margin(0.05));
}

TEST_CASE("monotone usage under decreasing sampling weight") {
    // Two equally informative features; lowering feature 0's weight lowers its
    // share of splits, averaged over seeds.
    const Eigen::Index n = 150;
    std::mt19937_64 rng(11);
    Eigen::MatrixXd x = testutil::random_matrix(n, 2, rng);
    Eigen::VectorXd y = x.col(0) + x.col(1) + 0.1 * testutil::random_vector(n, rng);
    Dataset d = make_dataset(x, y, OutcomeKind::continuous, Eigen::MatrixXd(n, 0), {},
                             {true, false}, true);
    double prev_share = 1.1;
    for (double factor : {1.0, 0.5, 0.1}) {
        double share_sum = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            ForestConfig cfg;
            cfg.n_trees = 20;
            cfg.min_node_size = 10;
            cfg.mtry = 1;
            cfg.seed = seed;
            cfg.sampling_weights = Eigen::VectorXd::Ones(2);
            cfg.sampling_weights[0] = factor;
            const Eigen::VectorXi counts = forest_fit(d, cfg).split_counts();
            share_sum += double(counts[0]) / double(counts.sum());
        }
        const double share = share_sum / 20.0;
        REQUIRE(share < prev_share);
        prev_share = share;
    }
}

TEST_CASE("forest JSON round-trip preserves predictions") {
    std::mt19937_64 rng(12);
    Dataset d = testutil::random_dataset(60, 2, rng);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 29;
    auto m = forest_fit(d, cfg);
    auto m2 = forest_from_json(forest_to_json(m));
    for (int q = 0; q < 10; ++q) {
        Eigen::VectorXd query = testutil::random_vector(2, rng);
        REQUIRE(m.predict_one(query) == m2.predict_one(query));
    }
}
