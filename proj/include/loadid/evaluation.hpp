#pragma once

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadid/classifier.hpp"
#include "loadid/common.hpp"
#include "loadid/dataset.hpp"
#include "loadid/features.hpp"
#include "loadid/reduction.hpp"

namespace loadid {

using nlohmann::json;

struct ConfusionMatrix {
    std::vector<std::vector<long>> counts;  // rows = true, cols = predicted

    explicit ConfusionMatrix(int c = 0)
        : counts(static_cast<size_t>(c), std::vector<long>(static_cast<size_t>(c), 0)) {}

    int size() const { return static_cast<int>(counts.size()); }

    long total() const {
        long t = 0;
        for (const auto& row : counts)
            for (long v : row) t += v;
        return t;
    }

    void add(const ConfusionMatrix& other) {
        for (size_t i = 0; i < counts.size(); ++i)
            for (size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int c) {
    if (y_true.size() != y_pred.size())
        throw DataError("confusion: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                        std::to_string(y_pred.size()) + ")");
    ConfusionMatrix cm(c);
    for (size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= c || y_pred[i] < 0 || y_pred[i] >= c)
            throw DataError("confusion: label out of range at index " + std::to_string(i));
        ++cm.counts[static_cast<size_t>(y_true[i])][static_cast<size_t>(y_pred[i])];
    }
    return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const long total = cm.total();
    if (total == 0) throw DataError("accuracy: empty confusion matrix");
    long correct = 0;
    for (size_t i = 0; i < cm.counts.size(); ++i) correct += cm.counts[i][i];
    return static_cast<double>(correct) / total;
}

// Unweighted mean over classes of 2PR/(P+R); a class with P+R = 0 contributes
// zero.
inline double macro_f_score(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("macro_f_score: empty confusion matrix");
    const size_t c = cm.counts.size();
    double sum = 0.0;
    for (size_t k = 0; k < c; ++k) {
        long tp = cm.counts[k][k], fp = 0, fn = 0;
        for (size_t i = 0; i < c; ++i)
            if (i != k) {
                fp += cm.counts[i][k];
                fn += cm.counts[k][i];
            }
        const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return sum / static_cast<double>(c);
}

struct FoldSplit {
    std::vector<int> train;
    std::vector<int> test;
};

// Seeded stratified k-fold: within-class shuffle then round-robin deal, so
// per-fold class counts differ from proportional by at most one.
inline std::vector<FoldSplit> stratified_kfold(const std::vector<int>& labels, int k_folds,
                                               std::uint64_t seed) {
    if (k_folds < 2) throw DataError("stratified_kfold: k_folds must be >= 2");
    const int c = class_count_of(labels);
    std::vector<std::vector<int>> by_class(static_cast<size_t>(c));
    for (size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<size_t>(labels[i])].push_back(static_cast<int>(i));
    for (int cls = 0; cls < c; ++cls)
        if (static_cast<int>(by_class[static_cast<size_t>(cls)].size()) < k_folds)
            throw DataError("stratified_kfold: class " + std::to_string(cls) + " has only " +
                            std::to_string(by_class[static_cast<size_t>(cls)].size()) +
                            " members, fewer than " + std::to_string(k_folds) + " folds");

    std::vector<std::vector<int>> fold_members(static_cast<size_t>(k_folds));
    for (int cls = 0; cls < c; ++cls) {
        auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
        auto& members = by_class[static_cast<size_t>(cls)];
        std::shuffle(members.begin(), members.end(), rng);
        for (size_t i = 0; i < members.size(); ++i)
            fold_members[i % static_cast<size_t>(k_folds)].push_back(members[i]);
    }

    std::vector<FoldSplit> folds(static_cast<size_t>(k_folds));
    for (int f = 0; f < k_folds; ++f) {
        auto& split = folds[static_cast<size_t>(f)];
        split.test = fold_members[static_cast<size_t>(f)];
        std::sort(split.test.begin(), split.test.end());
        for (int g = 0; g < k_folds; ++g)
            if (g != f)
                split.train.insert(split.train.end(), fold_members[static_cast<size_t>(g)].begin(),
                                   fold_members[static_cast<size_t>(g)].end());
        std::sort(split.train.begin(), split.train.end());
    }
    return folds;
}

struct ReducerSpec {
    std::string method = "none";  // none | fnpa-qr | pca | lda | flda
    int r = 0;                    // 0 -> min(C-1, d)
    int k = 0;                    // 0 -> min(7, min class size - 1)
    std::optional<double> ridge;
};

struct ClassifierSpec {
    std::string kind = "bdt";  // bdt | dt | knn
    json params = json::object();
};

struct ExperimentConfig {
    std::string dataset;  // manifest path or "synth:{...}"
    std::vector<std::string> descriptors;
    std::vector<int> window_lengths;
    std::vector<ReducerSpec> reducers;
    std::vector<ClassifierSpec> classifiers;
    int folds = 10;
    std::uint64_t seed = 0;
    bool rmsf_literal = false;
    std::optional<double> sscf_threshold;
};

struct CellResult {
    std::string descriptor;
    int window_length = 0;
    std::string reducer;
    int r = 0;
    std::string classifier;
    std::string params;
    double accuracy = 0.0;       // mean over folds
    double macro_f = 0.0;        // mean over folds
    double fit_time_s = 0.0;     // summed over folds
    double predict_time_s = 0.0;
    ConfusionMatrix pooled_confusion;
    int fold_count = 0;
    std::uint64_t seed = 0;
    std::string error;

    // fold-level detail, used by diagnostics; not serialized
    std::vector<std::optional<Projection>> fold_projections;
    std::vector<FoldSplit> fold_splits;
};

struct ExperimentReport {
    std::vector<CellResult> cells;
};

namespace detail {

inline Projection fit_reducer(const ReducerSpec& spec, const FeatureMatrix& train) {
    const int c = class_count_of(train.labels);
    const int d = static_cast<int>(train.cols());
    const int r = spec.r > 0 ? spec.r : std::max(1, std::min(c - 1, d));
    const int k = spec.k > 0 ? spec.k : default_neighbor_count(train.labels);
    const auto method = reducer_from_name(spec.method);
    switch (method) {
        case ReducerMethod::FnpaQr: return fit_fnpa_qr(train, r, k, spec.ridge);
        case ReducerMethod::Pca: return fit_pca(train, r);
        case ReducerMethod::Lda: return fit_lda(train, r, spec.ridge);
        case ReducerMethod::Flda:
            return fit_flda(train, r, k, 1.0, spec.ridge);
    }
    throw std::logic_error("unreachable");
}

struct FittedClassifier {
    std::optional<BaggedEnsemble> bdt;
    std::optional<DecisionTree> dt;
    std::optional<KnnModel> knn;

    std::vector<int> predict(const Matrix& x) const {
        if (bdt) return predict_bdt(*bdt, x);
        if (dt) return predict_tree(*dt, x);
        return predict_knn(*knn, x);
    }
};

inline FittedClassifier fit_classifier(const ClassifierSpec& spec, const Matrix& x,
                                       const std::vector<int>& y, std::uint64_t seed) {
    FittedClassifier fc;
    if (spec.kind == "bdt") {
        const int learners = spec.params.value("learners", kDefaultLearners);
        const int max_splits = spec.params.value("max_splits", kDefaultMaxSplits);
        fc.bdt = fit_bdt(x, y, learners, max_splits, spec.params.value("seed", seed));
    } else if (spec.kind == "dt") {
        const int max_splits = spec.params.value("max_splits", 100);
        fc.dt = fit_tree(x, y, std::max(1, std::min(max_splits, static_cast<int>(x.rows()) - 1)));
        fc.dt->class_count = class_count_of(y);
    } else if (spec.kind == "knn") {
        const int k = spec.params.value("k", 1);
        const std::string w = spec.params.value("weighting", "uniform");
        if (w != "uniform" && w != "inverse-distance")
            throw DataError("knn weighting must be 'uniform' or 'inverse-distance'");
        fc.knn = fit_knn(x, y, k,
                         w == "uniform" ? KnnWeighting::Uniform : KnnWeighting::InverseDistance);
    } else {
        throw DataError("unknown classifier kind: " + spec.kind);
    }
    return fc;
}

inline FeatureMatrix subset(const FeatureMatrix& f, const std::vector<int>& rows) {
    FeatureMatrix out;
    out.descriptor = f.descriptor;
    out.window_length = f.window_length;
    out.values.resize(static_cast<long>(rows.size()), f.cols());
    out.labels.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<long>(i)) = f.values.row(rows[i]);
        out.labels.push_back(f.labels[static_cast<size_t>(rows[i])]);
    }
    return out;
}

}  // namespace detail

// Stratified CV of one grid cell: reducer fitted on training folds only, then
// the classifier on the reduced training features. folds < 2 means
// resubstitution (train = test = all rows), used for pipeline debugging.
inline CellResult cross_validate_cell(const FeatureMatrix& features, const ReducerSpec& reducer,
                                      const ClassifierSpec& classifier, int folds,
                                      std::uint64_t seed, bool keep_fold_detail = false) {
    using clock = std::chrono::steady_clock;
    const int c = class_count_of(features.labels);

    CellResult cell;
    cell.reducer = reducer.method;
    cell.r = reducer.r;
    cell.classifier = classifier.kind;
    cell.params = classifier.params.dump();
    cell.seed = seed;
    cell.pooled_confusion = ConfusionMatrix(c);

    std::vector<FoldSplit> splits;
    if (folds < 2) {
        FoldSplit all;
        all.train.resize(static_cast<size_t>(features.rows()));
        std::iota(all.train.begin(), all.train.end(), 0);
        all.test = all.train;
        splits.push_back(std::move(all));
    } else {
        splits = stratified_kfold(features.labels, folds, seed);
    }
    cell.fold_count = static_cast<int>(splits.size());

    double acc_sum = 0.0, f_sum = 0.0;
    for (size_t fold = 0; fold < splits.size(); ++fold) {
        const auto& split = splits[fold];
        FeatureMatrix train = detail::subset(features, split.train);
        FeatureMatrix test = detail::subset(features, split.test);

        auto t0 = clock::now();
        std::optional<Projection> proj;
        if (reducer.method != "none") {
            proj = detail::fit_reducer(reducer, train);
            train = project(*proj, train);
        }
        auto fc = detail::fit_classifier(classifier, train.values, train.labels,
                                         mix_seed(seed, fold));
        auto t1 = clock::now();
        if (proj) test = project(*proj, test);
        auto pred = fc.predict(test.values);
        auto t2 = clock::now();

        cell.fit_time_s += std::chrono::duration<double>(t1 - t0).count();
        cell.predict_time_s += std::chrono::duration<double>(t2 - t1).count();

        auto cm = confusion(test.labels, pred, c);
        acc_sum += accuracy(cm);
        f_sum += macro_f_score(cm);
        cell.pooled_confusion.add(cm);
        if (keep_fold_detail) {
            cell.fold_projections.push_back(proj);
            cell.fold_splits.push_back(split);
        }
    }
    cell.accuracy = acc_sum / static_cast<double>(splits.size());
    cell.macro_f = f_sum / static_cast<double>(splits.size());
    return cell;
}

inline LabeledSignalSet load_config_dataset(const std::string& dataset) {
    if (dataset.rfind("synth:", 0) == 0) {
        json spec = json::parse(dataset.substr(6));
        return synth_dataset(spec.value("classes", 3), spec.value("per_class", 10),
                             spec.value("length", 512), spec.value("seed", 0ULL));
    }
    return load_manifest(dataset);
}

// Full grid over descriptor x window x reducer x classifier. A failing cell
// records its error string and the grid proceeds.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    LabeledSignalSet data = load_config_dataset(config.dataset);
    ExperimentReport report;

    for (const auto& desc_name : config.descriptors) {
        for (int window_len : config.window_lengths) {
            DescriptorConfig dcfg;
            dcfg.kind = descriptor_from_name(desc_name);
            dcfg.rmsf_literal = config.rmsf_literal;
            dcfg.sscf_threshold = config.sscf_threshold;

            std::optional<FeatureMatrix> features;
            std::string extract_error;
            try {
                features = extract(data, dcfg, window_len);
            } catch (const std::exception& e) {
                extract_error = e.what();
            }

            for (const auto& reducer : config.reducers) {
                for (const auto& classifier : config.classifiers) {
                    CellResult cell;
                    if (features) {
                        try {
                            cell = cross_validate_cell(*features, reducer, classifier,
                                                       config.folds, config.seed);
                        } catch (const std::exception& e) {
                            cell.error = e.what();
                            cell.reducer = reducer.method;
                            cell.r = reducer.r;
                            cell.classifier = classifier.kind;
                            cell.params = classifier.params.dump();
                            cell.seed = config.seed;
                        }
                    } else {
                        cell.error = extract_error;
                        cell.reducer = reducer.method;
                        cell.r = reducer.r;
                        cell.classifier = classifier.kind;
                        cell.params = classifier.params.dump();
                        cell.seed = config.seed;
                    }
                    cell.descriptor = desc_name;
                    cell.window_length = window_len;
                    report.cells.push_back(std::move(cell));
                }
            }
        }
    }
    return report;
}

inline void to_json(json& j, const ConfusionMatrix& cm) { j = cm.counts; }
inline void from_json(const json& j, ConfusionMatrix& cm) {
    cm.counts = j.get<std::vector<std::vector<long>>>();
}

inline void to_json(json& j, const CellResult& c) {
    j = json{{"descriptor", c.descriptor},
             {"window_length", c.window_length},
             {"reducer", c.reducer},
             {"r", c.r},
             {"classifier", c.classifier},
             {"params", c.params},
             {"accuracy", c.accuracy},
             {"macro_f_score", c.macro_f},
             {"fit_time_s", c.fit_time_s},
             {"predict_time_s", c.predict_time_s},
             {"confusion", c.pooled_confusion},
             {"fold_count", c.fold_count},
             {"seed", c.seed},
             {"error", c.error}};
}

inline void from_json(const json& j, CellResult& c) {
    j.at("descriptor").get_to(c.descriptor);
    j.at("window_length").get_to(c.window_length);
    j.at("reducer").get_to(c.reducer);
    j.at("r").get_to(c.r);
    j.at("classifier").get_to(c.classifier);
    j.at("params").get_to(c.params);
    j.at("accuracy").get_to(c.accuracy);
    j.at("macro_f_score").get_to(c.macro_f);
    j.at("fit_time_s").get_to(c.fit_time_s);
    j.at("predict_time_s").get_to(c.predict_time_s);
    j.at("confusion").get_to(c.pooled_confusion);
    j.at("fold_count").get_to(c.fold_count);
    j.at("seed").get_to(c.seed);
    j.at("error").get_to(c.error);
}

inline void to_json(json& j, const ExperimentReport& r) { j = json{{"cells", r.cells}}; }
inline void from_json(const json& j, ExperimentReport& r) { j.at("cells").get_to(r.cells); }

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    cfg.dataset = j.at("dataset").get<std::string>();
    cfg.descriptors = j.at("descriptors").get<std::vector<std::string>>();
    cfg.window_lengths = j.at("window_lengths").get<std::vector<int>>();
    for (const auto& rj : j.at("reducers")) {
        ReducerSpec rs;
        rs.method = rj.value("method", "none");
        rs.r = rj.value("r", 0);
        rs.k = rj.value("k", 0);
        if (rj.contains("ridge")) rs.ridge = rj["ridge"].get<double>();
        cfg.reducers.push_back(rs);
    }
    for (const auto& cj : j.at("classifiers")) {
        ClassifierSpec cs;
        cs.kind = cj.value("kind", "bdt");
        cs.params = cj.value("params", json::object());
        cfg.classifiers.push_back(cs);
    }
    cfg.folds = j.value("folds", 10);
    cfg.seed = j.value("seed", 0ULL);
    cfg.rmsf_literal = j.value("rmsf_literal", false);
    if (j.contains("sscf_threshold")) cfg.sscf_threshold = j["sscf_threshold"].get<double>();
    return cfg;
}

// Flat metric table, one row per grid cell. Timing columns are fit_time_s and
// predict_time_s; everything else is deterministic for a fixed config + seed.
inline std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "descriptor,window_length,reducer,r,classifier,params,fold_count,seed,"
           "accuracy,macro_f_score,fit_time_s,predict_time_s,error\n";
    for (const auto& c : report.cells) {
        std::string params = c.params;
        for (auto& ch : params)
            if (ch == ',') ch = ';';
        out << c.descriptor << "," << c.window_length << "," << c.reducer << "," << c.r << ","
            << c.classifier << "," << params << "," << c.fold_count << "," << c.seed << ","
            << c.accuracy << "," << c.macro_f << "," << c.fit_time_s << "," << c.predict_time_s
            << "," << c.error << "\n";
    }
    return out.str();
}

inline void write_report(const ExperimentReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(std::filesystem::path(out_dir) / "report.json");
        out << json(report).dump(2) << "\n";
    }
    std::ofstream out(std::filesystem::path(out_dir) / "report.csv");
    out << report_csv(report);
}

}  // namespace loadid
