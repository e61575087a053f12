#pragma once

#include <chrono>

#include "agu/agu.hpp"

namespace agu {

struct BenchPoint {
    double uf = 0.0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double stddev_ms = 0.0;
    int out_width = 0;
    int out_height = 0;
};

/// Least-squares fit of t(uf) = c1 * uf^2 + c2 over the measured points.
struct QuadraticFit {
    double c1 = 0.0;
    double c2 = 0.0;
    double r_squared = 0.0;
    double max_rel_error = 0.0;

    double predict(double uf) const { return c1 * uf * uf + c2; }
};

/// Times agu_apply from a fixed base-resolution input to uf-times larger
/// outputs. `base` acts as the low-resolution input; the guide is the base
/// image resized per factor. Three warmup runs precede the measurement.
inline std::vector<BenchPoint> run_bench(const ColorImage& base, const AguModel& model,
                                         const std::vector<double>& uf_list, int reps) {
    require_color(base, "run_bench");
    model.validate();
    if (reps < 1) throw InvalidInput("run_bench: reps must be >= 1");
    if (uf_list.empty()) throw InvalidInput("run_bench: uf list is empty");

    std::vector<BenchPoint> points;
    for (const double uf : uf_list) {
        if (!(uf >= 1.0) || uf > 4.0) throw InvalidInput("run_bench: uf must be in [1, 4]");
        const int ow = std::max(1, static_cast<int>(std::lround(base.width() * uf)));
        const int oh = std::max(1, static_cast<int>(std::lround(base.height() * uf)));
        const ColorImage guide = (ow == base.width() && oh == base.height())
                                     ? base
                                     : bilinear_resize(base, ow, oh);
        volatile float sink = 0.0f;
        for (int i = 0; i < 3; ++i) {
            const ColorImage out = agu_apply(guide, base, model, uf);
            sink = sink + out[0].data[0];
        }
        std::vector<double> times_ms;
        times_ms.reserve(static_cast<size_t>(reps));
        for (int i = 0; i < reps; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const ColorImage out = agu_apply(guide, base, model, uf);
            const auto t1 = std::chrono::steady_clock::now();
            sink = sink + out[0].data[0];
            times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        (void)sink;
        BenchPoint p;
        p.uf = uf;
        p.out_width = ow;
        p.out_height = oh;
        double sum = 0.0;
        for (const double t : times_ms) sum += t;
        p.mean_ms = sum / static_cast<double>(times_ms.size());
        double var = 0.0;
        for (const double t : times_ms) var += (t - p.mean_ms) * (t - p.mean_ms);
        p.stddev_ms = std::sqrt(var / static_cast<double>(times_ms.size()));
        std::vector<double> sorted = times_ms;
        std::sort(sorted.begin(), sorted.end());
        p.median_ms = sorted.size() % 2 == 1
                          ? sorted[sorted.size() / 2]
                          : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
        points.push_back(p);
    }
    return points;
}

/// Fits the quadratic-in-uf runtime model on the median times.
inline QuadraticFit fit_runtime_model(const std::vector<BenchPoint>& points) {
    if (points.size() < 2) throw InvalidInput("fit_runtime_model: need at least two points");
    // least squares on t = c1 * x + c2 with x = uf^2
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(points.size());
    for (const auto& p : points) {
        const double x = p.uf * p.uf;
        sx += x;
        sy += p.median_ms;
        sxx += x * x;
        sxy += x * p.median_ms;
    }
    QuadraticFit fit;
    const double denom = n * sxx - sx * sx;
    fit.c1 = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    fit.c2 = (sy - fit.c1 * sx) / n;
    const double mean = sy / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& p : points) {
        const double e = p.median_ms - fit.predict(p.uf);
        ss_res += e * e;
        ss_tot += (p.median_ms - mean) * (p.median_ms - mean);
        if (p.median_ms > 0.0)
            fit.max_rel_error = std::max(fit.max_rel_error, std::abs(e) / p.median_ms);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace agu
