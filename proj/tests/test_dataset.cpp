#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "loadid/dataset.hpp"

using namespace loadid;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("loadid_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

}  // namespace

TEST_CASE("window partitions exactly when N divides M") {
    RawSignal sig;
    for (int i = 0; i < 10; ++i) sig.samples.push_back(i);
    auto ws = window(sig, 5);
    REQUIRE(ws.windows.rows() == 2);
    REQUIRE(ws.windows.cols() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(ws.windows(0, i) == i);
        CHECK(ws.windows(1, i) == i + 5);
    }
}

TEST_CASE("window drops trailing remainder") {
    RawSignal sig;
    for (int i = 0; i < 10; ++i) sig.samples.push_back(i);
    auto ws = window(sig, 3);
    CHECK(ws.windows.rows() == 3);
    CHECK(ws.windows(2, 2) == 8);  // sample 9 dropped
}

TEST_CASE("window rejects signals shorter than window") {
    RawSignal sig;
    sig.samples = {1, 2, 3, 4};
    CHECK_THROWS_AS(window(sig, 5), DataError);
}

TEST_CASE("flattening windows reproduces the signal when N divides M") {
    auto set = synth_dataset(2, 1, 120, 7);
    for (int n : {2, 3, 4, 5, 6, 8, 10}) {
        auto ws = window(set.signals[0], n);
        long pos = 0;
        for (long w = 0; w < ws.windows.rows(); ++w)
            for (long i = 0; i < ws.windows.cols(); ++i, ++pos)
                CHECK(ws.windows(w, i) == set.signals[0].samples[static_cast<size_t>(pos)]);
        CHECK(pos == 120);
    }
}

TEST_CASE("load_manifest builds signals in manifest order") {
    auto dir = temp_dir("manifest_basic");
    write_file(dir / "a.csv", "power\n1\n2\n3\n");
    write_file(dir / "b.csv", "5\n6\n");
    write_file(dir / "manifest.csv",
               "path,label,sampling_rate_hz\na.csv,kettle,10\nb.csv,fridge,10\n");
    auto set = load_manifest((dir / "manifest.csv").string());
    REQUIRE(set.signals.size() == 2);
    CHECK(set.signals[0].samples.size() == 3);
    CHECK(set.signals[1].samples.size() == 2);
    CHECK(set.class_names == std::vector<std::string>{"kettle", "fridge"});
    CHECK(set.signals[0].label == 0);
    CHECK(set.signals[1].label == 1);
}

TEST_CASE("load_manifest names the missing file") {
    auto dir = temp_dir("manifest_missing");
    write_file(dir / "manifest.csv", "path,label,sampling_rate_hz\nnope.csv,x,1\n");
    CHECK_THROWS_WITH_AS(load_manifest((dir / "manifest.csv").string()),
                         doctest::Contains("nope.csv"), DataError);
}

TEST_CASE("two-column trace reads the power column") {
    auto dir = temp_dir("manifest_twocol");
    write_file(dir / "t.csv", "timestamp,power\n0,1.5\n1,2.5\n2,3.5\n3,4.5\n4,5.5\n");
    write_file(dir / "manifest.csv", "path,label,sampling_rate_hz\nt.csv,a,1\nt.csv,b,1\n");
    auto set = load_manifest((dir / "manifest.csv").string());

    // independent line-by-line oracle
    std::ifstream in(dir / "t.csv");
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> expected;
    while (std::getline(in, line))
        expected.push_back(std::stod(line.substr(line.find(',') + 1)));

    REQUIRE(set.signals[0].samples.size() == 5);
    CHECK(set.signals[0].samples == expected);
}

TEST_CASE("non-numeric sample reports the row") {
    auto dir = temp_dir("manifest_nan");
    write_file(dir / "bad.csv", "power\n1\nnan\n3\n");
    write_file(dir / "manifest.csv", "path,label,sampling_rate_hz\nbad.csv,x,1\n");
    CHECK_THROWS_AS(load_manifest((dir / "manifest.csv").string()), DataError);
}

TEST_CASE("empty trace is rejected") {
    auto dir = temp_dir("manifest_empty");
    write_file(dir / "empty.csv", "power\n");
    write_file(dir / "manifest.csv", "path,label,sampling_rate_hz\nempty.csv,x,1\n");
    CHECK_THROWS_AS(load_manifest((dir / "manifest.csv").string()), DataError);
}

TEST_CASE("synth_dataset is deterministic per seed") {
    auto a = synth_dataset(3, 4, 64, 42);
    auto b = synth_dataset(3, 4, 64, 42);
    REQUIRE(a.signals.size() == 12);
    for (size_t i = 0; i < a.signals.size(); ++i)
        CHECK(a.signals[i].samples == b.signals[i].samples);
}

TEST_CASE("synth_dataset counts labels correctly") {
    auto set = synth_dataset(3, 4, 64, 1);
    std::vector<int> counts(3, 0);
    for (const auto& s : set.signals) ++counts[static_cast<size_t>(s.label)];
    CHECK(counts == std::vector<int>{4, 4, 4});
}

TEST_CASE("different seeds give different samples") {
    auto a = synth_dataset(2, 1, 10, 1);
    auto b = synth_dataset(2, 1, 10, 2);
    CHECK(a.signals[0].samples != b.signals[0].samples);
}

TEST_CASE("synth round-trips through manifest + traces") {
    auto dir = temp_dir("synth_roundtrip");
    auto set = synth_dataset(2, 2, 32, 9);
    write_manifest_and_traces(set, dir.string());
    auto loaded = load_manifest((dir / "manifest.csv").string());
    REQUIRE(loaded.signals.size() == set.signals.size());
    for (size_t i = 0; i < set.signals.size(); ++i) {
        CHECK(loaded.signals[i].label == set.signals[i].label);
        REQUIRE(loaded.signals[i].samples.size() == set.signals[i].samples.size());
        for (size_t j = 0; j < set.signals[i].samples.size(); ++j)
            CHECK(loaded.signals[i].samples[j] == doctest::Approx(set.signals[i].samples[j]));
    }
}
