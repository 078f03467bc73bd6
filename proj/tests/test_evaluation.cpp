#include <doctest.h>

#include <set>

#include "loadid/evaluation.hpp"

using namespace loadid;

TEST_CASE("stratified kfold with exact divisibility") {
    std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    auto folds = stratified_kfold(labels, 5, 3);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) {
        REQUIRE(f.test.size() == 2);
        std::set<int> classes;
        for (int i : f.test) classes.insert(labels[static_cast<size_t>(i)]);
        CHECK(classes == std::set<int>{0, 1});
    }
}

TEST_CASE("kfold test folds partition the indices") {
    std::vector<int> labels;
    for (int i = 0; i < 23; ++i) labels.push_back(i % 3);
    auto folds = stratified_kfold(labels, 4, 7);
    std::set<int> seen;
    for (const auto& f : folds)
        for (int i : f.test) {
            CHECK(!seen.count(i));
            seen.insert(i);
        }
    CHECK(seen.size() == 23);
    // train = complement of test
    for (const auto& f : folds) CHECK(f.train.size() + f.test.size() == 23);
}

TEST_CASE("kfold is deterministic per seed") {
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(i % 3);
    auto a = stratified_kfold(labels, 5, 11);
    auto b = stratified_kfold(labels, 5, 11);
    for (size_t f = 0; f < a.size(); ++f) {
        CHECK(a[f].test == b[f].test);
        CHECK(a[f].train == b[f].train);
    }
}

TEST_CASE("kfold names a class smaller than the fold count") {
    std::vector<int> labels{0, 0, 0, 0, 1};
    CHECK_THROWS_WITH_AS(stratified_kfold(labels, 3, 0), doctest::Contains("class 1"), DataError);
}

TEST_CASE("confusion tallies") {
    auto cm = confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][0] == 0);
    CHECK(cm.counts[1][1] == 2);

    auto perfect = confusion({0, 1, 2}, {0, 1, 2}, 3);
    CHECK(accuracy(perfect) == 1.0);
    CHECK(macro_f_score(perfect) == 1.0);

    auto onecol = confusion({0, 1, 2}, {1, 1, 1}, 3);
    CHECK(onecol.counts[0][1] == 1);
    CHECK(onecol.counts[1][1] == 1);
    CHECK(onecol.counts[2][1] == 1);
}

TEST_CASE("confusion validates inputs") {
    CHECK_THROWS_AS(confusion({0, 1}, {0}, 2), DataError);
    CHECK_THROWS_AS(confusion({0, 2}, {0, 0}, 2), DataError);
}

TEST_CASE("accuracy and macro F on the worked example") {
    auto cm = confusion({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    CHECK(accuracy(cm) == doctest::Approx(0.75));
    // class 0: P=1, R=0.5, F=2/3; class 1: P=2/3, R=1, F=0.8
    CHECK(macro_f_score(cm) == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
}

TEST_CASE("never-predicted class contributes zero F") {
    auto cm = confusion({0, 0, 1}, {0, 0, 0}, 2);
    // class 0: P=2/3, R=1, F=0.8; class 1 has no TP and no predictions -> 0
    CHECK(macro_f_score(cm) == doctest::Approx(0.4));
}

namespace {
ExperimentConfig smoke_config() {
    ExperimentConfig cfg;
    cfg.dataset = "synth:{\"classes\":3,\"per_class\":8,\"length\":256,\"seed\":5}";
    cfg.descriptors = {"rmsf"};
    cfg.window_lengths = {32};
    cfg.reducers = {ReducerSpec{"none", 0, 0, std::nullopt}};
    cfg.classifiers = {ClassifierSpec{"bdt", nlohmann::json{{"learners", 5}, {"max_splits", 50}}}};
    cfg.folds = 4;
    cfg.seed = 21;
    return cfg;
}
}  // namespace

TEST_CASE("run_experiment smoke cell") {
    auto report = run_experiment(smoke_config());
    REQUIRE(report.cells.size() == 1);
    const auto& c = report.cells[0];
    CHECK(c.error.empty());
    CHECK(c.accuracy >= 0.0);
    CHECK(c.accuracy <= 1.0);
    CHECK(c.macro_f >= 0.0);
    CHECK(c.pooled_confusion.total() == 24);
    CHECK(c.fold_count == 4);
}

TEST_CASE("run_experiment metrics are deterministic; timing may differ") {
    auto r1 = run_experiment(smoke_config());
    auto r2 = run_experiment(smoke_config());
    CHECK(r1.cells[0].accuracy == r2.cells[0].accuracy);
    CHECK(r1.cells[0].macro_f == r2.cells[0].macro_f);
    CHECK(r1.cells[0].pooled_confusion == r2.cells[0].pooled_confusion);
}

TEST_CASE("a failing cell records its error and others proceed") {
    auto cfg = smoke_config();
    cfg.reducers.push_back(ReducerSpec{"lda", 5, 0, std::nullopt});  // r > C-1 fails
    auto report = run_experiment(cfg);
    REQUIRE(report.cells.size() == 2);
    CHECK(report.cells[0].error.empty());
    CHECK(!report.cells[1].error.empty());
}

TEST_CASE("report json round-trips losslessly") {
    auto report = run_experiment(smoke_config());
    nlohmann::json j = report;
    auto back = j.get<ExperimentReport>();
    REQUIRE(back.cells.size() == report.cells.size());
    const auto& a = report.cells[0];
    const auto& b = back.cells[0];
    CHECK(a.descriptor == b.descriptor);
    CHECK(a.window_length == b.window_length);
    CHECK(a.reducer == b.reducer);
    CHECK(a.classifier == b.classifier);
    CHECK(a.params == b.params);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.macro_f == b.macro_f);
    CHECK(a.pooled_confusion == b.pooled_confusion);
    CHECK(a.fold_count == b.fold_count);
    CHECK(a.seed == b.seed);
}

TEST_CASE("reducer is fitted on training folds only") {
    auto cfg = smoke_config();
    cfg.reducers = {ReducerSpec{"fnpa-qr", 2, 3, std::nullopt}};
    auto data = load_config_dataset(cfg.dataset);
    DescriptorConfig dcfg;
    dcfg.kind = Descriptor::Rmsf;
    auto features = extract(data, dcfg, 32);

    auto cell = cross_validate_cell(features, cfg.reducers[0], cfg.classifiers[0], cfg.folds,
                                    cfg.seed, /*keep_fold_detail=*/true);
    REQUIRE(cell.fold_projections.size() == 4);
    for (size_t f = 0; f < cell.fold_splits.size(); ++f) {
        FeatureMatrix train = detail::subset(features, cell.fold_splits[f].train);
        auto refit = detail::fit_reducer(cfg.reducers[0], train);
        CHECK((refit.basis - cell.fold_projections[f]->basis).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("csv report has one row per cell") {
    auto cfg = smoke_config();
    cfg.classifiers.push_back(ClassifierSpec{"knn", nlohmann::json{{"k", 1}}});
    auto report = run_experiment(cfg);
    auto csv_text = report_csv(report);
    size_t rows = std::count(csv_text.begin(), csv_text.end(), '\n');
    CHECK(rows == report.cells.size() + 1);  // header + cells
}
