#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadid/common.hpp"
#include "loadid/csv.hpp"
#include "loadid/dataset.hpp"

namespace loadid {

enum class Descriptor { Rmsf, Madf, Iamf, Wlf, Sscf };

struct DescriptorConfig {
    Descriptor kind = Descriptor::Rmsf;
    // SSCF threshold; unset -> relative default 1e-8 * window RMS.
    std::optional<double> sscf_threshold;
    // Use the literal printed RMSF formula (sum of per-sample roots) instead
    // of the canonical root-mean-square.
    bool rmsf_literal = false;
};

struct FeatureMatrix {
    Matrix values;  // n_samples x d
    std::vector<int> labels;
    DescriptorConfig descriptor;
    int window_length = 0;

    long rows() const { return values.rows(); }
    long cols() const { return values.cols(); }
};

inline double rmsf(std::span<const double> w) {
    double sum_sq = 0.0;
    for (double y : w) sum_sq += y * y;
    return std::sqrt(sum_sq / static_cast<double>(w.size()));
}

// Literal reading with the sum outside the root: sum |y_i| / sqrt(N).
inline double rmsf_literal(std::span<const double> w) {
    double sum_abs = 0.0;
    for (double y : w) sum_abs += std::abs(y);
    return sum_abs / std::sqrt(static_cast<double>(w.size()));
}

inline double madf(std::span<const double> w) {
    const double n = static_cast<double>(w.size());
    double mu = 0.0;
    for (double y : w) mu += y;
    mu /= n;
    double dev = 0.0;
    for (double y : w) dev += std::abs(y - mu);
    return dev / n;
}

inline double iamf(std::span<const double> w) {
    const double n = static_cast<double>(w.size());
    double mu = 0.0, signed_sq = 0.0;
    for (double y : w) {
        mu += y;
        const double s = y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0);
        signed_sq += 0.5 * y * y * s;
    }
    return signed_sq / n + mu / n;
}

inline constexpr double kWlfFloor = 1e-12;

inline double wlf(std::span<const double> w) {
    double len = 0.0;
    for (size_t i = 0; i + 1 < w.size(); ++i) len += std::abs(w[i + 1] - w[i]);
    return std::log(std::max(len, kWlfFloor));
}

inline double sscf_default_threshold(std::span<const double> w) { return 1e-8 * rmsf(w); }

inline int sscf(std::span<const double> w, double threshold) {
    int count = 0;
    for (size_t i = 1; i + 1 < w.size(); ++i)
        if ((w[i] - w[i - 1]) * (w[i] - w[i + 1]) >= threshold) ++count;
    return count;
}

inline double apply_descriptor(const DescriptorConfig& cfg, std::span<const double> w) {
    switch (cfg.kind) {
        case Descriptor::Rmsf:
            return cfg.rmsf_literal ? rmsf_literal(w) : rmsf(w);
        case Descriptor::Madf:
            return madf(w);
        case Descriptor::Iamf:
            return iamf(w);
        case Descriptor::Wlf:
            return wlf(w);
        case Descriptor::Sscf: {
            double t = cfg.sscf_threshold ? *cfg.sscf_threshold : sscf_default_threshold(w);
            return static_cast<double>(sscf(w, t));
        }
    }
    throw std::logic_error("unknown descriptor");
}

inline Descriptor descriptor_from_name(const std::string& name) {
    if (name == "rmsf") return Descriptor::Rmsf;
    if (name == "madf") return Descriptor::Madf;
    if (name == "iamf") return Descriptor::Iamf;
    if (name == "wlf") return Descriptor::Wlf;
    if (name == "sscf") return Descriptor::Sscf;
    throw DataError("unknown descriptor: " + name);
}

inline std::string descriptor_name(Descriptor d) {
    switch (d) {
        case Descriptor::Rmsf: return "rmsf";
        case Descriptor::Madf: return "madf";
        case Descriptor::Iamf: return "iamf";
        case Descriptor::Wlf: return "wlf";
        case Descriptor::Sscf: return "sscf";
    }
    return "?";
}

// One row per signal, one column per window index. All signals must share the
// same window count K.
inline FeatureMatrix extract(const LabeledSignalSet& set, const DescriptorConfig& cfg, int n) {
    if (set.signals.empty()) throw DataError("extract: empty signal set");

    std::vector<WindowedSignal> windowed;
    windowed.reserve(set.signals.size());
    for (const auto& sig : set.signals) windowed.push_back(window(sig, n));

    const long k = windowed.front().windows.rows();
    std::string offenders;
    for (size_t i = 0; i < windowed.size(); ++i)
        if (windowed[i].windows.rows() != k)
            offenders += (offenders.empty() ? "" : ", ") + set.signals[i].source_id;
    if (!offenders.empty())
        throw DataError("signals with unequal window counts: " + offenders);

    FeatureMatrix fm;
    fm.descriptor = cfg;
    fm.window_length = n;
    fm.values.resize(static_cast<long>(set.signals.size()), k);
    fm.labels.reserve(set.signals.size());
    for (size_t i = 0; i < windowed.size(); ++i) {
        fm.labels.push_back(windowed[i].label);
        for (long j = 0; j < k; ++j) {
            Eigen::RowVectorXd row = windowed[i].windows.row(j);
            fm.values(static_cast<long>(i), j) =
                apply_descriptor(cfg, std::span<const double>(row.data(), row.size()));
        }
    }
    return fm;
}

inline void write_features_csv(const FeatureMatrix& fm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "label";
    for (long j = 0; j < fm.cols(); ++j) out << ",f" << (j + 1);
    out << "\n";
    out.precision(17);
    for (long i = 0; i < fm.rows(); ++i) {
        out << fm.labels[static_cast<size_t>(i)];
        for (long j = 0; j < fm.cols(); ++j) out << "," << fm.values(i, j);
        out << "\n";
    }
}

inline FeatureMatrix read_features_csv(const std::string& path) {
    auto lines = csv::read_lines(path);
    if (lines.size() < 2) throw DataError("feature file has no data rows: " + path);
    auto header = csv::split_row(lines[0]);
    if (header.empty() || header[0] != "label")
        throw DataError("feature file must start with 'label' column: " + path);
    const long d = static_cast<long>(header.size()) - 1;
    FeatureMatrix fm;
    fm.values.resize(static_cast<long>(lines.size()) - 1, d);
    for (size_t i = 1; i < lines.size(); ++i) {
        auto fields = csv::split_row(lines[i]);
        if (static_cast<long>(fields.size()) != d + 1)
            throw DataError("feature row " + std::to_string(i + 1) + " has wrong field count");
        fm.labels.push_back(static_cast<int>(
            csv::parse_double(fields[0], path + ":" + std::to_string(i + 1))));
        for (long j = 0; j < d; ++j)
            fm.values(static_cast<long>(i) - 1, j) =
                csv::parse_double(fields[static_cast<size_t>(j) + 1],
                                  path + ":" + std::to_string(i + 1));
    }
    return fm;
}

}  // namespace loadid
