#pragma once

#include <Eigen/Dense>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace loadid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad or malformed input data (missing files, NaNs, dimension mismatches).
// CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (degenerate scatter, rank deficiency, solver breakdown).
// CLI maps this to exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// 64-bit RNG used everywhere; seeded streams derived via splitmix-style mixing
// so per-item streams are independent of evaluation order.
inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// LOADID_THREADS caps worker threads; 0 or unset -> hardware concurrency.
inline unsigned thread_cap() {
    const char* env = std::getenv("LOADID_THREADS");
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (!env) return hw;
    long v = std::strtol(env, nullptr, 10);
    if (v <= 0) return hw;
    return static_cast<unsigned>(v);
}

}  // namespace loadid
