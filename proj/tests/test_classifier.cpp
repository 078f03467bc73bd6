#include <doctest.h>

#include <random>
#include <set>

#include "loadid/classifier.hpp"

using namespace loadid;

namespace {

struct Blobs {
    Matrix x;
    std::vector<int> y;
};

Blobs gaussian_blobs(std::uint64_t seed, int n_per_class, int classes, int d, double sep) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Blobs b;
    b.x.resize(n_per_class * classes, d);
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < n_per_class; ++i) {
            long row = c * n_per_class + i;
            for (int j = 0; j < d; ++j) b.x(row, j) = sep * c + g(rng);
            b.y.push_back(c);
        }
    return b;
}

double training_accuracy(const DecisionTree& t, const Matrix& x, const std::vector<int>& y) {
    auto pred = predict_tree(t, x);
    int correct = 0;
    for (size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("tree splits a separable pair at the midpoint") {
    Matrix x(2, 1);
    x << 0.0, 1.0;
    std::vector<int> y{0, 1};
    auto t = fit_tree(x, y, 10);
    REQUIRE(!t.nodes[0].is_leaf());
    CHECK(t.nodes[0].threshold == doctest::Approx(0.5));
    CHECK(training_accuracy(t, x, y) == 1.0);
}

TEST_CASE("pure input yields a single leaf") {
    Matrix x(4, 2);
    x.setRandom();
    std::vector<int> y{1, 1, 1, 1};
    auto t = fit_tree(x, y, 10);
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].label == 1);
}

TEST_CASE("tree solves 2-D XOR") {
    Matrix x(4, 2);
    x << 0, 0, 0, 1, 1, 0, 1, 1;
    std::vector<int> y{0, 1, 1, 0};
    auto t = fit_tree(x, y, 3);
    CHECK(training_accuracy(t, x, y) == 1.0);
    CHECK(t.internal_node_count() <= 3);
}

TEST_CASE("hand-built tree routes probes as traced") {
    DecisionTree t;
    t.class_count = 3;
    t.feature_count = 2;
    t.nodes.resize(3);
    t.nodes[0].feature = 0;
    t.nodes[0].threshold = 5.0;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[1].label = 2;
    t.nodes[2].label = 1;
    Matrix probes(3, 2);
    probes << 4.9, 0, 5.0, 0, 7.0, 0;
    CHECK(predict_tree(t, probes) == std::vector<int>{2, 1, 1});
}

TEST_CASE("single-leaf tree predicts a constant") {
    Matrix x(3, 1);
    x << 1, 2, 3;
    std::vector<int> y{1, 1, 1};
    auto t = fit_tree(x, y, 5);
    Matrix probes(2, 1);
    probes << -100, 100;
    CHECK(predict_tree(t, probes) == std::vector<int>{1, 1});
}

TEST_CASE("predict_tree rejects wrong feature count") {
    Matrix x(2, 2);
    x << 0, 0, 1, 1;
    auto t = fit_tree(x, {0, 1}, 3);
    Matrix bad(1, 3);
    bad.setZero();
    CHECK_THROWS_AS(predict_tree(t, bad), DataError);
}

TEST_CASE("full tree reaches perfect training accuracy without conflicts") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto b = gaussian_blobs(seed, 8, 3, 2, 1.0);  // overlapping but continuous -> no ties
        auto t = fit_tree(b.x, b.y, static_cast<int>(b.x.rows()) - 1);
        CHECK(training_accuracy(t, b.x, b.y) == 1.0);
    }
}

TEST_CASE("raising max_splits never lowers training accuracy") {
    auto b = gaussian_blobs(4, 12, 3, 2, 1.5);
    double prev = 0.0;
    for (int cap = 1; cap < 20; ++cap) {
        auto t = fit_tree(b.x, b.y, cap);
        double acc = training_accuracy(t, b.x, b.y);
        CHECK(acc >= prev - 1e-12);
        prev = acc;
    }
}

TEST_CASE("bootstrap basics") {
    auto rng = make_rng(1);
    CHECK(bootstrap_sample(1, rng) == std::vector<int>{0});

    auto r1 = make_rng(7);
    auto r2 = make_rng(7);
    CHECK(bootstrap_sample(50, r1) == bootstrap_sample(50, r2));
}

TEST_CASE("bootstrap distinct fraction approaches 1 - 1/e") {
    auto rng = make_rng(99);
    auto idx = bootstrap_sample(10000, rng);
    std::set<int> distinct(idx.begin(), idx.end());
    double frac = static_cast<double>(distinct.size()) / 10000.0;
    CHECK(frac == doctest::Approx(0.632).epsilon(0.032));
}

TEST_CASE("single-learner ensemble equals its tree") {
    auto b = gaussian_blobs(5, 10, 2, 2, 3.0);
    auto e = fit_bdt(b.x, b.y, 1, 20, 3);
    auto probes = gaussian_blobs(6, 5, 2, 2, 3.0);
    CHECK(predict_bdt(e, probes.x) == predict_tree(e.trees[0], probes.x));
}

TEST_CASE("ensemble is deterministic per seed") {
    auto b = gaussian_blobs(7, 10, 2, 2, 3.0);
    auto e1 = fit_bdt(b.x, b.y, 5, 20, 11);
    auto e2 = fit_bdt(b.x, b.y, 5, 20, 11);
    CHECK(e1.bootstrap_records == e2.bootstrap_records);
    auto probes = gaussian_blobs(8, 10, 2, 2, 3.0);
    CHECK(predict_bdt(e1, probes.x) == predict_bdt(e2, probes.x));
}

TEST_CASE("bdt separates seeded Gaussian blobs") {
    auto train = gaussian_blobs(9, 50, 2, 3, 4.0);
    auto test = gaussian_blobs(10, 50, 2, 3, 4.0);
    auto e = fit_bdt(train.x, train.y, 30, 100, 13);
    auto pred = predict_bdt(e, test.x);
    int correct = 0;
    for (size_t i = 0; i < test.y.size(); ++i)
        if (pred[i] == test.y[i]) ++correct;
    CHECK(static_cast<double>(correct) / static_cast<double>(test.y.size()) >= 0.95);
}

TEST_CASE("majority vote and tie rules") {
    // build 3 stub single-leaf trees voting fixed classes
    auto leaf_tree = [](int label, int classes) {
        DecisionTree t;
        t.class_count = classes;
        t.feature_count = 1;
        t.nodes.resize(1);
        t.nodes[0].label = label;
        return t;
    };
    Matrix probe(1, 1);
    probe << 0.0;

    BaggedEnsemble e;
    e.class_count = 2;
    e.n_learners = 3;
    e.trees = {leaf_tree(0, 2), leaf_tree(0, 2), leaf_tree(1, 2)};
    CHECK(predict_bdt(e, probe) == std::vector<int>{0});  // strict majority

    BaggedEnsemble tie;
    tie.class_count = 2;
    tie.n_learners = 2;
    tie.trees = {leaf_tree(1, 2), leaf_tree(0, 2)};
    CHECK(predict_bdt(tie, probe) == std::vector<int>{0});  // tie -> lowest index

    BaggedEnsemble unanimous;
    unanimous.class_count = 3;
    unanimous.n_learners = 4;
    unanimous.trees = {leaf_tree(2, 3), leaf_tree(2, 3), leaf_tree(2, 3), leaf_tree(2, 3)};
    CHECK(predict_bdt(unanimous, probe) == std::vector<int>{2});
}

TEST_CASE("out-of-bag fraction is near 36.8 percent") {
    auto b = gaussian_blobs(20, 2500, 2, 1, 5.0);  // n = 5000
    auto e = fit_bdt(b.x, b.y, 3, 2, 17);
    for (const auto& record : e.bootstrap_records) {
        std::set<int> in_bag(record.begin(), record.end());
        double oob = 1.0 - static_cast<double>(in_bag.size()) / 5000.0;
        CHECK(oob == doctest::Approx(0.368).epsilon(0.055));
    }
}

TEST_CASE("knn exact match and global majority") {
    Matrix x(5, 1);
    x << 0, 1, 2, 3, 4;
    std::vector<int> y{0, 0, 0, 1, 1};
    auto m1 = fit_knn(x, y, 1);
    Matrix probe(1, 1);
    probe << 3.0;
    CHECK(predict_knn(m1, probe) == std::vector<int>{1});

    auto mall = fit_knn(x, y, 5);
    Matrix anywhere(1, 1);
    anywhere << 100.0;
    CHECK(predict_knn(mall, anywhere) == std::vector<int>{0});  // global majority
}

TEST_CASE("knn votes match a hand-computed distance table") {
    Matrix train(6, 2);
    train << 0, 0, 1, 0, 0, 1, 5, 5, 6, 5, 5, 6;
    std::vector<int> y{0, 0, 0, 1, 1, 1};
    Matrix probes(3, 2);
    probes << 0.4, 0.4,  // nearest three are class 0
        5.4, 5.4,        // nearest three are class 1
        2.5, 2.5;        // equidistant-ish; 3-NN = {(1,0),(0,1),(0,0)} all class 0
    auto m = fit_knn(train, y, 3);
    CHECK(predict_knn(m, probes) == std::vector<int>{0, 1, 0});
}

TEST_CASE("inverse-distance weighting favors the closest point") {
    Matrix train(3, 1);
    train << 0.0, 10.0, 10.5;
    std::vector<int> y{0, 1, 1};
    Matrix probe(1, 1);
    probe << 1.0;
    // uniform 3-NN would vote class 1 (2 votes); inverse-distance picks class 0
    auto uni = fit_knn(train, y, 3, KnnWeighting::Uniform);
    auto inv = fit_knn(train, y, 3, KnnWeighting::InverseDistance);
    CHECK(predict_knn(uni, probe) == std::vector<int>{1});
    CHECK(predict_knn(inv, probe) == std::vector<int>{0});
}

TEST_CASE("knn rejects k > n_train") {
    Matrix x(3, 1);
    x << 0, 1, 2;
    CHECK_THROWS_AS(fit_knn(x, {0, 1, 0}, 4), DataError);
}
