#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "loadid/common.hpp"
#include "loadid/csv.hpp"

namespace loadid {

struct RawSignal {
    std::vector<double> samples;
    double sampling_rate_hz = 1.0;
    int label = 0;
    std::string source_id;
};

struct LabeledSignalSet {
    std::vector<RawSignal> signals;
    std::vector<std::string> class_names;

    int class_count() const { return static_cast<int>(class_names.size()); }
};

struct WindowedSignal {
    Matrix windows;  // K x N
    int window_length = 0;
    int label = 0;
};

// Non-overlapping segmentation; trailing partial window dropped.
inline WindowedSignal window(const RawSignal& signal, int n) {
    const auto m = static_cast<long>(signal.samples.size());
    if (n < 2) throw DataError("window length must be >= 2");
    if (n > m)
        throw DataError("signal shorter than window: " + signal.source_id + " has " +
                        std::to_string(m) + " samples, window is " + std::to_string(n));
    const long k = m / n;
    WindowedSignal out;
    out.window_length = n;
    out.label = signal.label;
    out.windows.resize(k, n);
    for (long w = 0; w < k; ++w)
        for (long i = 0; i < n; ++i) out.windows(w, i) = signal.samples[w * n + i];
    return out;
}

namespace detail {

// Trace files are one column (power) or two (timestamp,power); a header row is
// detected by failing to parse the first line numerically.
inline std::vector<double> read_trace(const std::string& path) {
    auto lines = csv::read_lines(path);
    if (lines.empty()) throw DataError("empty signal file: " + path);
    std::vector<double> samples;
    size_t start = 0;
    {
        auto fields = csv::split_row(lines[0]);
        double probe;
        if (!csv::try_parse_double(fields.back(), probe)) start = 1;  // header row
    }
    for (size_t i = start; i < lines.size(); ++i) {
        auto fields = csv::split_row(lines[i]);
        if (fields.empty() || fields.size() > 2)
            throw DataError("bad column count at " + path + ":" + std::to_string(i + 1));
        samples.push_back(csv::parse_double(fields.back(), path + ":" + std::to_string(i + 1)));
    }
    if (samples.empty()) throw DataError("empty signal file: " + path);
    return samples;
}

}  // namespace detail

// Manifest CSV: header `path,label,sampling_rate_hz`. Labels are mapped to
// dense integers in first-appearance order; original strings kept as names.
inline LabeledSignalSet load_manifest(const std::string& manifest_path) {
    auto lines = csv::read_lines(manifest_path);
    if (lines.empty()) throw DataError("empty manifest: " + manifest_path);
    auto header = csv::split_row(lines[0]);
    if (header.size() != 3 || header[0] != "path" || header[1] != "label" ||
        header[2] != "sampling_rate_hz")
        throw DataError("manifest header must be 'path,label,sampling_rate_hz': " + manifest_path);

    const auto base = std::filesystem::path(manifest_path).parent_path();
    LabeledSignalSet set;
    std::map<std::string, int> label_ids;
    for (size_t i = 1; i < lines.size(); ++i) {
        auto fields = csv::split_row(lines[i]);
        if (fields.size() != 3)
            throw DataError("manifest row " + std::to_string(i + 1) + " has " +
                            std::to_string(fields.size()) + " fields, expected 3");
        std::filesystem::path p(fields[0]);
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::exists(p))
            throw DataError("manifest references missing file: " + p.string());
        double rate = csv::parse_double(fields[2], "manifest row " + std::to_string(i + 1));
        if (rate <= 0.0)
            throw DataError("sampling_rate_hz must be positive at manifest row " +
                            std::to_string(i + 1));

        auto [it, inserted] =
            label_ids.try_emplace(fields[1], static_cast<int>(set.class_names.size()));
        if (inserted) set.class_names.push_back(fields[1]);

        RawSignal sig;
        sig.samples = detail::read_trace(p.string());
        sig.sampling_rate_hz = rate;
        sig.label = it->second;
        sig.source_id = fields[0];
        set.signals.push_back(std::move(sig));
    }
    return set;
}

// Synthetic appliance-like load shapes, one parametric family per class.
// Parameter table is documented in docs/synth_classes.md.
inline LabeledSignalSet synth_dataset(int n_classes, int signals_per_class, int signal_length,
                                      std::uint64_t seed) {
    if (n_classes < 2) throw DataError("synth_dataset needs at least 2 classes");
    if (signals_per_class < 1 || signal_length < 1)
        throw DataError("synth_dataset arguments must be positive");

    LabeledSignalSet set;
    for (int c = 0; c < n_classes; ++c)
        set.class_names.push_back("class_" + std::to_string(c));

    for (int c = 0; c < n_classes; ++c) {
        const double base = 50.0 + 80.0 * c;
        const int period = 20 + 7 * c;
        const double duty = 0.3 + 0.1 * (c % 3);
        const double noise_sd = 2.0 + 0.5 * c;
        for (int s = 0; s < signals_per_class; ++s) {
            auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(c) * 1000003u + s));
            std::normal_distribution<double> noise(0.0, noise_sd);
            RawSignal sig;
            sig.sampling_rate_hz = 1.0;
            sig.label = c;
            sig.source_id = "synth/c" + std::to_string(c) + "/s" + std::to_string(s);
            sig.samples.resize(signal_length);
            for (int i = 0; i < signal_length; ++i) {
                const int phase = i % period;
                const double frac = static_cast<double>(phase) / period;
                double v;
                switch (c % 4) {
                    case 0:  // square-wave duty cycle (resistive on/off load)
                        v = frac < duty ? base : 0.1 * base;
                        break;
                    case 1:  // sawtooth ramp
                        v = base * (0.2 + 0.8 * frac);
                        break;
                    case 2:  // compressor-like spike with exponential decay
                        v = base * (0.15 + std::exp(-6.0 * frac));
                        break;
                    default:  // rectified-sine cycling load
                        v = base * (0.3 + 0.7 * std::abs(std::sin(2.0 * M_PI * frac)));
                        break;
                }
                sig.samples[i] = v + noise(rng);
            }
            set.signals.push_back(std::move(sig));
        }
    }
    return set;
}

inline void write_manifest_and_traces(const LabeledSignalSet& set, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
    manifest << "path,label,sampling_rate_hz\n";
    for (size_t i = 0; i < set.signals.size(); ++i) {
        const auto& sig = set.signals[i];
        std::string name = "trace_" + std::to_string(i) + ".csv";
        std::ofstream trace(fs::path(out_dir) / name);
        trace << "power\n";
        trace.precision(17);
        for (double v : sig.samples) trace << v << "\n";
        manifest << name << "," << set.class_names[sig.label] << ",";
        manifest.precision(17);
        manifest << sig.sampling_rate_hz << "\n";
    }
}

}  // namespace loadid
