#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace agu {

/// Raised when an operation receives images or arguments that violate its
/// preconditions (dimension mismatch, empty plane, bad kernel size, ...).
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a model file or in-memory model is structurally unusable.
class InvalidModel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for bad training / runtime configuration values.
class InvalidConfig : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on file read/write failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kIntensityMax = 255.0;

inline float clamp_intensity(double v) {
    if (v < 0.0) return 0.0f;
    if (v > kIntensityMax) return static_cast<float>(kIntensityMax);
    return static_cast<float>(v);
}

/// Deterministic random source. All randomness in the library flows through
/// this class so that seeded runs reproduce bit-identically; the raw mt19937
/// stream is mapped to doubles with explicit arithmetic instead of the
/// distribution adaptors, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed)
        : engine_(static_cast<uint32_t>(seed ^ (seed >> 32)) ^ 0x9e3779b9u) {}

    uint32_t next_u32() { return engine_(); }

    /// Uniform draw in the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(engine_()) + 0.5) * (1.0 / 4294967296.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (cached spare).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

private:
    std::mt19937 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Number of worker threads: hardware concurrency capped by AGU_THREADS.
inline int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* s = std::getenv("AGU_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && v >= 1) hw = std::min(hw, static_cast<unsigned>(v));
    }
    return static_cast<int>(hw);
}

/// Runs fn(row_begin, row_end) over disjoint contiguous row blocks. Outputs
/// are bit-deterministic for any thread count because blocks never overlap
/// and no cross-thread reduction happens here; reductions stay with callers.
template <typename Fn>
inline void parallel_rows(int height, Fn&& fn) {
    const int threads = std::min(thread_budget(), height);
    if (threads <= 1 || height < 16) {
        fn(0, height);
        return;
    }
    const int chunk = (height + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) {
        const int y0 = t * chunk;
        const int y1 = std::min(height, y0 + chunk);
        if (y0 >= y1) break;
        pool.emplace_back([y0, y1, &fn] { fn(y0, y1); });
    }
    fn(0, std::min(chunk, height));
    for (auto& th : pool) th.join();
}

} // namespace agu
