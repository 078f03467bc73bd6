// loadid: appliance identification from power-consumption signals.
// Subcommands: synth, extract, reduce, train, evaluate, run.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "loadid/dataset.hpp"
#include "loadid/evaluation.hpp"
#include "loadid/features.hpp"
#include "loadid/model_io.hpp"
#include "loadid/reduction.hpp"

using namespace loadid;
using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"loadid: appliance identification from power-consumption signals"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
    int classes = 3, per_class = 10, length = 512;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--classes", classes, "Number of appliance classes")->default_val(3);
    synth->add_option("--per-class", per_class, "Signals per class")->default_val(10);
    synth->add_option("--length", length, "Samples per signal")->default_val(512);
    synth->add_option("--seed", synth_seed, "RNG seed")->default_val(0);
    synth->add_option("--out", synth_out, "Output directory")->required();

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "Extract windowed descriptor features");
    std::string manifest, descriptor = "rmsf", features_out;
    int window_n = 128;
    double sscf_threshold = -1.0;
    bool rmsf_literal_flag = false;
    extract_cmd->add_option("--manifest", manifest, "Dataset manifest CSV")->required();
    extract_cmd->add_option("--descriptor", descriptor, "rmsf|madf|iamf|wlf|sscf")
        ->default_val("rmsf");
    extract_cmd->add_option("--window", window_n, "Window length N")->default_val(128);
    extract_cmd->add_option("--sscf-threshold", sscf_threshold,
                            "Absolute SSCF threshold (default: 1e-8 x window RMS)");
    extract_cmd->add_flag("--rmsf-literal", rmsf_literal_flag,
                          "Use the literal printed RMSF formula");
    extract_cmd->add_option("--out", features_out, "Output features CSV")->required();

    // reduce
    auto* reduce_cmd = app.add_subcommand("reduce", "Fit a dimensionality reduction");
    std::string red_features, red_method = "fnpa-qr", red_out, apply_out;
    int red_r = 0, red_k = 0;
    double red_ridge = -1.0;
    reduce_cmd->add_option("--features", red_features, "Input features CSV")->required();
    reduce_cmd->add_option("--method", red_method, "fnpa-qr|pca|lda|flda")->default_val("fnpa-qr");
    reduce_cmd->add_option("--r", red_r, "Reduced dimension (0 = min(C-1, d))")->default_val(0);
    reduce_cmd->add_option("--k", red_k, "Neighbor count (0 = auto)")->default_val(0);
    reduce_cmd->add_option("--ridge", red_ridge, "Ridge on within-scatter (negative = auto)");
    reduce_cmd->add_option("--out", red_out, "Output projection bundle CSV")->required();
    reduce_cmd->add_option("--apply", apply_out, "Also emit reduced features to this CSV");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on features");
    std::string train_features, model_kind = "bdt", model_out, knn_weighting = "uniform";
    int learners = kDefaultLearners, max_splits = kDefaultMaxSplits, knn_k = 1;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--features", train_features, "Training features CSV")->required();
    train_cmd->add_option("--model", model_kind, "bdt|dt|knn")->default_val("bdt");
    train_cmd->add_option("--learners", learners, "BDT learner count")->default_val(kDefaultLearners);
    train_cmd->add_option("--max-splits", max_splits, "Split cap per tree")
        ->default_val(kDefaultMaxSplits);
    train_cmd->add_option("--k", knn_k, "KNN neighbor count")->default_val(1);
    train_cmd->add_option("--weighting", knn_weighting, "uniform|inverse-distance")
        ->default_val("uniform");
    train_cmd->add_option("--seed", train_seed, "RNG seed")->default_val(0);
    train_cmd->add_option("--out", model_out, "Output model JSON")->required();

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a trained model on features");
    std::string eval_model, eval_features, metrics_out;
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
    eval_cmd->add_option("--features", eval_features, "Features CSV")->required();
    eval_cmd->add_option("--out", metrics_out, "Output metrics JSON")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "Run a full experiment grid from a config");
    std::string config_path, out_dir;
    run_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    run_cmd->add_option("--out-dir", out_dir, "Report output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto set = synth_dataset(classes, per_class, length, synth_seed);
            write_manifest_and_traces(set, synth_out);
            std::cout << "wrote " << set.signals.size() << " traces + manifest to " << synth_out
                      << "\n";
        } else if (extract_cmd->parsed()) {
            auto set = load_manifest(manifest);
            DescriptorConfig cfg;
            cfg.kind = descriptor_from_name(descriptor);
            cfg.rmsf_literal = rmsf_literal_flag;
            if (sscf_threshold >= 0.0) cfg.sscf_threshold = sscf_threshold;
            auto fm = extract(set, cfg, window_n);
            write_features_csv(fm, features_out);
            std::cout << "wrote " << fm.rows() << "x" << fm.cols() << " feature matrix to "
                      << features_out << "\n";
        } else if (reduce_cmd->parsed()) {
            auto fm = read_features_csv(red_features);
            ReducerSpec spec;
            spec.method = red_method;
            spec.r = red_r;
            spec.k = red_k;
            if (red_ridge >= 0.0) spec.ridge = red_ridge;
            auto proj = detail::fit_reducer(spec, fm);
            write_projection_csv(proj, red_out);
            std::cout << "wrote " << proj.input_dim() << "->" << proj.reduced_dim
                      << " projection to " << red_out << "\n";
            if (!apply_out.empty()) {
                write_features_csv(project(proj, fm), apply_out);
                std::cout << "wrote reduced features to " << apply_out << "\n";
            }
        } else if (train_cmd->parsed()) {
            auto fm = read_features_csv(train_features);
            Model model = [&]() -> Model {
                if (model_kind == "bdt")
                    return fit_bdt(fm.values, fm.labels, learners, max_splits, train_seed);
                if (model_kind == "dt") {
                    auto t = fit_tree(fm.values, fm.labels,
                                      std::max(1, std::min(max_splits,
                                                           static_cast<int>(fm.rows()) - 1)));
                    t.class_count = class_count_of(fm.labels);
                    return t;
                }
                if (model_kind == "knn")
                    return fit_knn(fm.values, fm.labels, knn_k,
                                   knn_weighting == "uniform" ? KnnWeighting::Uniform
                                                              : KnnWeighting::InverseDistance);
                throw DataError("unknown model kind: " + model_kind);
            }();
            if (const auto* e = std::get_if<BaggedEnsemble>(&model)) {
                json j = model_to_json(model);
                j["summary"]["oob_accuracy"] = oob_accuracy(*e, fm.values, fm.labels);
                std::ofstream out(model_out);
                if (!out) throw DataError("cannot write " + model_out);
                out << j.dump(2) << "\n";
            } else {
                write_model(model, model_out);
            }
            std::cout << "wrote model to " << model_out << "\n";
        } else if (eval_cmd->parsed()) {
            auto model = read_model(eval_model);
            auto fm = read_features_csv(eval_features);
            auto pred = predict_model(model, fm.values);
            int c = class_count_of(fm.labels);
            for (int p : pred) c = std::max(c, p + 1);
            auto cm = confusion(fm.labels, pred, c);
            json j = {{"accuracy", accuracy(cm)},
                      {"macro_f_score", macro_f_score(cm)},
                      {"confusion", cm},
                      {"n", cm.total()}};
            std::ofstream out(metrics_out);
            if (!out) throw DataError("cannot write " + metrics_out);
            out << j.dump(2) << "\n";
            std::cout << "accuracy " << accuracy(cm) << ", macro F " << macro_f_score(cm) << "\n";
        } else if (run_cmd->parsed()) {
            std::ifstream in(config_path);
            if (!in) throw DataError("cannot open config: " + config_path);
            json j;
            in >> j;
            auto cfg = parse_config(j);
            auto report = run_experiment(cfg);
            write_report(report, out_dir);
            std::cout << "wrote report.json and report.csv (" << report.cells.size()
                      << " cells) to " << out_dir << "\n";
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
