#pragma once

#include <fstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "loadid/classifier.hpp"
#include "loadid/common.hpp"

namespace loadid {

inline void to_json(nlohmann::json& j, const TreeNode& n) {
    j = nlohmann::json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                       {"right", n.right},     {"label", n.label},         {"histogram", n.histogram}};
}

inline void from_json(const nlohmann::json& j, TreeNode& n) {
    j.at("feature").get_to(n.feature);
    j.at("threshold").get_to(n.threshold);
    j.at("left").get_to(n.left);
    j.at("right").get_to(n.right);
    j.at("label").get_to(n.label);
    j.at("histogram").get_to(n.histogram);
}

inline void to_json(nlohmann::json& j, const DecisionTree& t) {
    j = nlohmann::json{{"nodes", t.nodes},
                       {"max_splits", t.max_splits},
                       {"class_count", t.class_count},
                       {"feature_count", t.feature_count}};
}

inline void from_json(const nlohmann::json& j, DecisionTree& t) {
    j.at("nodes").get_to(t.nodes);
    j.at("max_splits").get_to(t.max_splits);
    j.at("class_count").get_to(t.class_count);
    j.at("feature_count").get_to(t.feature_count);
}

using Model = std::variant<DecisionTree, BaggedEnsemble, KnnModel>;

inline std::vector<int> predict_model(const Model& m, const Matrix& x) {
    if (const auto* t = std::get_if<DecisionTree>(&m)) return predict_tree(*t, x);
    if (const auto* e = std::get_if<BaggedEnsemble>(&m)) return predict_bdt(*e, x);
    return predict_knn(std::get<KnnModel>(m), x);
}

inline nlohmann::json model_to_json(const Model& m) {
    nlohmann::json j;
    if (const auto* t = std::get_if<DecisionTree>(&m)) {
        j["kind"] = "dt";
        j["tree"] = *t;
        j["summary"] = {{"node_count", t->nodes.size()},
                        {"internal_node_count", t->internal_node_count()}};
    } else if (const auto* e = std::get_if<BaggedEnsemble>(&m)) {
        j["kind"] = "bdt";
        j["trees"] = e->trees;
        j["bootstrap_records"] = e->bootstrap_records;
        j["n_learners"] = e->n_learners;
        j["seed"] = e->seed;
        j["class_count"] = e->class_count;
        std::vector<size_t> node_counts;
        for (const auto& t : e->trees) node_counts.push_back(t.nodes.size());
        j["summary"] = {{"per_tree_node_counts", node_counts}};
    } else {
        const auto& k = std::get<KnnModel>(m);
        j["kind"] = "knn";
        j["k"] = k.k;
        j["weighting"] = k.weighting == KnnWeighting::Uniform ? "uniform" : "inverse-distance";
        j["class_count"] = k.class_count;
        j["train_y"] = k.train_y;
        std::vector<std::vector<double>> rows(static_cast<size_t>(k.train_x.rows()));
        for (long i = 0; i < k.train_x.rows(); ++i)
            for (long jc = 0; jc < k.train_x.cols(); ++jc)
                rows[static_cast<size_t>(i)].push_back(k.train_x(i, jc));
        j["train_x"] = rows;
    }
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dt") return j.at("tree").get<DecisionTree>();
    if (kind == "bdt") {
        BaggedEnsemble e;
        j.at("trees").get_to(e.trees);
        j.at("bootstrap_records").get_to(e.bootstrap_records);
        j.at("n_learners").get_to(e.n_learners);
        j.at("seed").get_to(e.seed);
        j.at("class_count").get_to(e.class_count);
        return e;
    }
    if (kind == "knn") {
        KnnModel k;
        j.at("k").get_to(k.k);
        k.weighting = j.at("weighting").get<std::string>() == "uniform"
                          ? KnnWeighting::Uniform
                          : KnnWeighting::InverseDistance;
        j.at("class_count").get_to(k.class_count);
        j.at("train_y").get_to(k.train_y);
        auto rows = j.at("train_x").get<std::vector<std::vector<double>>>();
        k.train_x.resize(static_cast<long>(rows.size()),
                         rows.empty() ? 0 : static_cast<long>(rows[0].size()));
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t c = 0; c < rows[i].size(); ++c)
                k.train_x(static_cast<long>(i), static_cast<long>(c)) = rows[i][c];
        return k;
    }
    throw DataError("unknown model kind: " + kind);
}

inline void write_model(const Model& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << model_to_json(m).dump(2) << "\n";
}

inline Model read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace loadid
