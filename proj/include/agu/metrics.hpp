#pragma once

#include <limits>

#include "agu/kernels.hpp"

namespace agu {

/// The four evaluation metrics reported by the benchmark harness. Metrics of
/// color images are computed on the BT.601 luma.
struct MetricsReport {
    double sharpness = 0.0; // mean |LoG| over interior pixels
    double noise = 0.0;     // estimated Gaussian sigma
    double psnr = 0.0;      // dB, +inf for identical images
    double ssim = 0.0;
};

/// Immerkaer fast noise-variance estimate: mean absolute response of the
/// 3x3 Laplacian-difference operator over the interior, scaled to the
/// standard deviation of Gaussian noise.
inline double noise_estimate(const ImagePlane& img) {
    require_plane(img, "noise_estimate");
    if (img.width < 3 || img.height < 3)
        throw InvalidInput("noise_estimate: image must be at least 3x3");
    double acc = 0.0;
    for (int y = 1; y < img.height - 1; ++y) {
        const float* r0 = img.row(y - 1);
        const float* r1 = img.row(y);
        const float* r2 = img.row(y + 1);
        for (int x = 1; x < img.width - 1; ++x) {
            const double resp = r0[x - 1] - 2.0 * r0[x] + r0[x + 1] -
                                2.0 * r1[x - 1] + 4.0 * r1[x] - 2.0 * r1[x + 1] +
                                r2[x - 1] - 2.0 * r2[x] + r2[x + 1];
            acc += std::abs(resp);
        }
    }
    const double interior = static_cast<double>(img.width - 2) * (img.height - 2);
    return std::sqrt(3.14159265358979323846 / 2.0) * acc / (6.0 * interior);
}

inline double noise_estimate(const ColorImage& img) { return noise_estimate(rgb_to_gray(img)); }

/// Mean LoG magnitude over interior pixels (those whose kernel support does
/// not touch the replicated border).
inline double sharpness(const ImagePlane& img, const KernelConfig& kcfg = KernelConfig{}) {
    require_plane(img, "sharpness");
    const ImagePlane resp = log_response(img, kcfg);
    const int half = kcfg.log_size / 2;
    const int x0 = std::min(half, std::max(0, img.width - 1) / 2);
    const int y0 = std::min(half, std::max(0, img.height - 1) / 2);
    double acc = 0.0;
    int64_t count = 0;
    for (int y = y0; y < img.height - y0; ++y) {
        const float* r = resp.row(y);
        for (int x = x0; x < img.width - x0; ++x) {
            acc += std::abs(static_cast<double>(r[x]));
            ++count;
        }
    }
    return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

inline double sharpness(const ColorImage& img, const KernelConfig& kcfg = KernelConfig{}) {
    return sharpness(rgb_to_gray(img), kcfg);
}

/// 10 * log10(255^2 / MSE); +inf for identical images.
inline double psnr(const ImagePlane& a, const ImagePlane& b) {
    require_same_dims(a, b, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kIntensityMax * kIntensityMax / mse);
}

inline double psnr(const ColorImage& a, const ColorImage& b) {
    return psnr(rgb_to_gray(a), rgb_to_gray(b));
}

/// Mean local SSIM with the standard parameterization: 11x11 Gaussian window
/// (sigma 1.5), K1 = 0.01, K2 = 0.03, L = 255. Local statistics use edge
/// replication.
inline double ssim(const ImagePlane& a, const ImagePlane& b) {
    require_same_dims(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

    std::vector<double> kernel(static_cast<size_t>(kWin) * kWin);
    {
        const int half = kWin / 2;
        double sum = 0.0;
        for (int dy = -half; dy <= half; ++dy)
            for (int dx = -half; dx <= half; ++dx) {
                const double v = std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) /
                                          (2.0 * kSigma * kSigma));
                kernel[static_cast<size_t>(dy + half) * kWin + (dx + half)] = v;
                sum += v;
            }
        for (double& v : kernel) v /= sum;
    }

    ImagePlane aa(a.width, a.height), bb(a.width, a.height), ab(a.width, a.height);
    for (size_t i = 0; i < a.size(); ++i) {
        const double av = a.data[i], bv = b.data[i];
        aa.data[i] = static_cast<float>(av * av);
        bb.data[i] = static_cast<float>(bv * bv);
        ab.data[i] = static_cast<float>(av * bv);
    }
    const ImagePlane mu_a = convolve_replicate(a, kernel, kWin);
    const ImagePlane mu_b = convolve_replicate(b, kernel, kWin);
    const ImagePlane m_aa = convolve_replicate(aa, kernel, kWin);
    const ImagePlane m_bb = convolve_replicate(bb, kernel, kWin);
    const ImagePlane m_ab = convolve_replicate(ab, kernel, kWin);

    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double ma = mu_a.data[i], mb = mu_b.data[i];
        const double va = std::max(0.0, static_cast<double>(m_aa.data[i]) - ma * ma);
        const double vb = std::max(0.0, static_cast<double>(m_bb.data[i]) - mb * mb);
        const double cab = static_cast<double>(m_ab.data[i]) - ma * mb;
        acc += ((2.0 * ma * mb + kC1) * (2.0 * cab + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    return acc / static_cast<double>(a.size());
}

inline double ssim(const ColorImage& a, const ColorImage& b) {
    return ssim(rgb_to_gray(a), rgb_to_gray(b));
}

/// Sharpness and noise of img; PSNR/SSIM against the reference.
inline MetricsReport compute_metrics(const ImagePlane& img, const ImagePlane& reference,
                                     const KernelConfig& kcfg = KernelConfig{}) {
    MetricsReport r;
    r.sharpness = sharpness(img, kcfg);
    r.noise = noise_estimate(img);
    r.psnr = psnr(img, reference);
    r.ssim = ssim(img, reference);
    return r;
}

inline MetricsReport compute_metrics(const ColorImage& img, const ColorImage& reference,
                                     const KernelConfig& kcfg = KernelConfig{}) {
    return compute_metrics(rgb_to_gray(img), rgb_to_gray(reference), kcfg);
}

} // namespace agu
