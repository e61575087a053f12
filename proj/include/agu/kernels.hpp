#pragma once

#include <cmath>
#include <deque>

#include "agu/image.hpp"

namespace agu {

namespace detail {

/// Summed-area table with one extra row/column of zeros. Accumulates in
/// double; built serially so results do not depend on the thread budget.
inline std::vector<double> summed_area_table(const ImagePlane& img) {
    const int w = img.width, h = img.height;
    std::vector<double> sat(static_cast<size_t>(w + 1) * (h + 1), 0.0);
    const size_t stride = static_cast<size_t>(w) + 1;
    for (int y = 0; y < h; ++y) {
        const float* src = img.row(y);
        double rowsum = 0.0;
        const double* above = sat.data() + static_cast<size_t>(y) * stride;
        double* cur = sat.data() + static_cast<size_t>(y + 1) * stride;
        for (int x = 0; x < w; ++x) {
            rowsum += src[x];
            cur[x + 1] = above[x + 1] + rowsum;
        }
    }
    return sat;
}

inline double sat_window_sum(const std::vector<double>& sat, int w, int x0, int y0,
                             int x1, int y1) {
    // inclusive pixel box [x0,x1] x [y0,y1]
    const size_t stride = static_cast<size_t>(w) + 1;
    const double* top = sat.data() + static_cast<size_t>(y0) * stride;
    const double* bot = sat.data() + static_cast<size_t>(y1 + 1) * stride;
    return bot[x1 + 1] - bot[x0] - top[x1 + 1] + top[x0];
}

} // namespace detail

/// Pixel count of the truncated (2r+1)^2 window around each pixel.
inline ImagePlane window_counts(int width, int height, int radius) {
    ImagePlane out(width, height);
    for (int y = 0; y < height; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(height - 1, y + radius);
        float* dst = out.row(y);
        for (int x = 0; x < width; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(width - 1, x + radius);
            dst[x] = static_cast<float>((x1 - x0 + 1) * (y1 - y0 + 1));
        }
    }
    return out;
}

/// Windowed arithmetic mean over the (2r+1)^2 neighborhood, truncated and
/// renormalized at the borders. O(1) per pixel via a summed-area table.
inline ImagePlane box_mean(const ImagePlane& img, int radius) {
    require_plane(img, "box_mean");
    if (radius < 1) throw InvalidInput("box_mean: radius must be >= 1");
    const int w = img.width, h = img.height;
    const auto sat = detail::summed_area_table(img);
    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
            float* dst = out.row(y);
            for (int x = 0; x < w; ++x) {
                const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
                const double area = static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1);
                dst[x] = static_cast<float>(detail::sat_window_sum(sat, w, x0, y0, x1, y1) / area);
            }
        }
    });
    return out;
}

/// Plain windowed sum (no renormalization), same truncation as box_mean.
inline ImagePlane window_sum(const ImagePlane& img, int radius) {
    require_plane(img, "window_sum");
    if (radius < 1) throw InvalidInput("window_sum: radius must be >= 1");
    const int w = img.width, h = img.height;
    const auto sat = detail::summed_area_table(img);
    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
            float* dst = out.row(y);
            for (int x = 0; x < w; ++x) {
                const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
                dst[x] = static_cast<float>(detail::sat_window_sum(sat, w, x0, y0, x1, y1));
            }
        }
    });
    return out;
}

/// Adjoint of box_mean under the truncated-window convention:
/// out_k = sum_{p in w_k} in_p / |w_p|. Used by the training gradients.
inline ImagePlane box_mean_adjoint(const ImagePlane& img, int radius) {
    require_plane(img, "box_mean_adjoint");
    const ImagePlane counts = window_counts(img.width, img.height, radius);
    ImagePlane scaled(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i)
        scaled.data[i] = static_cast<float>(static_cast<double>(img.data[i]) / counts.data[i]);
    return window_sum(scaled, radius);
}

namespace detail {

/// 1-D sliding min/max with truncated windows, monotonic-deque scan.
template <bool kMax>
inline void sliding_extreme_1d(const float* src, float* dst, int n, int stride, int radius) {
    std::deque<int> q;
    auto worse = [](float a, float b) { return kMax ? a <= b : a >= b; };
    int filled = 0;
    for (int i = 0; i < n + radius; ++i) {
        if (i < n) {
            const float v = src[static_cast<size_t>(i) * stride];
            while (!q.empty() && worse(src[static_cast<size_t>(q.back()) * stride], v))
                q.pop_back();
            q.push_back(i);
        }
        const int center = i - radius;
        if (center >= 0) {
            while (q.front() < center - radius) q.pop_front();
            dst[static_cast<size_t>(center) * stride] = src[static_cast<size_t>(q.front()) * stride];
            ++filled;
            if (filled == n) break;
        }
    }
}

} // namespace detail

/// Sliding-window extrema over the (2r+1)^2 neighborhood (truncated at the
/// borders), separable rows-then-columns.
inline void window_min_max(const ImagePlane& img, int radius, ImagePlane& out_min,
                           ImagePlane& out_max) {
    require_plane(img, "window_min_max");
    if (radius < 1) throw InvalidInput("window_min_max: radius must be >= 1");
    const int w = img.width, h = img.height;
    ImagePlane row_min(w, h), row_max(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            detail::sliding_extreme_1d<false>(img.row(y), row_min.row(y), w, 1, radius);
            detail::sliding_extreme_1d<true>(img.row(y), row_max.row(y), w, 1, radius);
        }
    });
    out_min = ImagePlane(w, h);
    out_max = ImagePlane(w, h);
    parallel_rows(w, [&](int xb, int xe) {
        for (int x = xb; x < xe; ++x) {
            detail::sliding_extreme_1d<false>(row_min.data.data() + x, out_min.data.data() + x, h,
                                              w, radius);
            detail::sliding_extreme_1d<true>(row_max.data.data() + x, out_max.data.data() + x, h,
                                             w, radius);
        }
    });
}

/// Bilinear resize without output clamping; source coordinates follow the
/// align-corners-false convention src = (dst + 0.5) * scale - 0.5, clamped
/// at the borders. Safe for signed coefficient fields.
inline ImagePlane bilinear_resize_raw(const ImagePlane& img, int out_w, int out_h) {
    require_plane(img, "bilinear_resize");
    if (out_w < 1 || out_h < 1) throw InvalidInput("bilinear_resize: output dims must be >= 1");
    const int iw = img.width, ih = img.height;
    ImagePlane out(out_w, out_h);
    const double sx = static_cast<double>(iw) / out_w;
    const double sy = static_cast<double>(ih) / out_h;
    parallel_rows(out_h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            double fy = (y + 0.5) * sy - 0.5;
            fy = std::clamp(fy, 0.0, static_cast<double>(ih - 1));
            const int y0 = static_cast<int>(fy);
            const int y1 = std::min(y0 + 1, ih - 1);
            const double wy = fy - y0;
            const float* r0 = img.row(y0);
            const float* r1 = img.row(y1);
            float* dst = out.row(y);
            for (int x = 0; x < out_w; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                fx = std::clamp(fx, 0.0, static_cast<double>(iw - 1));
                const int x0 = static_cast<int>(fx);
                const int x1 = std::min(x0 + 1, iw - 1);
                const double wx = fx - x0;
                const double top = r0[x0] + (r0[x1] - r0[x0]) * wx;
                const double bot = r1[x0] + (r1[x1] - r1[x0]) * wx;
                dst[x] = static_cast<float>(top + (bot - top) * wy);
            }
        }
    });
    return out;
}

/// Bilinear resize of an intensity plane, clamped to [0, 255].
inline ImagePlane bilinear_resize(const ImagePlane& img, int out_w, int out_h) {
    ImagePlane out = bilinear_resize_raw(img, out_w, out_h);
    for (float& v : out.data) v = clamp_intensity(v);
    return out;
}

/// Nearest-neighbor resize (align-corners-false source mapping).
inline ImagePlane nearest_resize(const ImagePlane& img, int out_w, int out_h) {
    require_plane(img, "nearest_resize");
    if (out_w < 1 || out_h < 1) throw InvalidInput("nearest_resize: output dims must be >= 1");
    ImagePlane out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    parallel_rows(out_h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const int sy_i = std::min(img.height - 1, static_cast<int>((y + 0.5) * sy));
            const float* src = img.row(sy_i);
            float* dst = out.row(y);
            for (int x = 0; x < out_w; ++x) {
                const int sx_i = std::min(img.width - 1, static_cast<int>((x + 0.5) * sx));
                dst[x] = src[sx_i];
            }
        }
    });
    return out;
}

/// LoG kernel sampled at integer offsets and mean-subtracted so the
/// coefficients sum to zero; a constant input therefore yields zero response.
inline std::vector<double> log_kernel(double sigma, int size) {
    if (size < 3 || size % 2 == 0) throw InvalidInput("log_kernel: size must be odd and >= 3");
    if (!(sigma > 0.0)) throw InvalidInput("log_kernel: sigma must be > 0");
    std::vector<double> k(static_cast<size_t>(size) * size);
    const int half = size / 2;
    const double s2 = sigma * sigma;
    const double norm = -1.0 / (3.14159265358979323846 * s2 * s2);
    double sum = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            const double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            const double v = norm * (1.0 - r2 / (2.0 * s2)) * std::exp(-r2 / (2.0 * s2));
            k[static_cast<size_t>(dy + half) * size + (dx + half)] = v;
            sum += v;
        }
    }
    const double mean = sum / static_cast<double>(k.size());
    for (double& v : k) v -= mean;
    return k;
}

/// Dense convolution with an arbitrary square kernel, edge replication.
/// Output is signed and unclamped.
inline ImagePlane convolve_replicate(const ImagePlane& img, const std::vector<double>& kernel,
                                     int size) {
    require_plane(img, "convolve_replicate");
    const int half = size / 2;
    const int w = img.width, h = img.height;
    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            float* dst = out.row(y);
            const bool y_interior = (y >= half && y < h - half);
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                if (y_interior && x >= half && x < w - half) {
                    const double* kp = kernel.data();
                    for (int dy = -half; dy <= half; ++dy) {
                        const float* src = img.row(y + dy) + (x - half);
                        for (int dx = 0; dx < size; ++dx) acc += kp[dx] * src[dx];
                        kp += size;
                    }
                } else {
                    const double* kp = kernel.data();
                    for (int dy = -half; dy <= half; ++dy)
                        for (int dx = -half; dx <= half; ++dx)
                            acc += *kp++ * img.at_clamped(x + dx, y + dy);
                }
                dst[x] = static_cast<float>(acc);
            }
        }
    });
    return out;
}

/// Signed LoG response raster (not clamped to [0, 255]).
inline ImagePlane log_response(const ImagePlane& img, const KernelConfig& cfg) {
    cfg.validate();
    return convolve_replicate(img, log_kernel(cfg.log_sigma, cfg.log_size), cfg.log_size);
}

/// Edge-preserving bilateral filter: spatial Gaussian over a radius of
/// ceil(3 * sigma_spatial), range Gaussian over intensity differences,
/// per-pixel weight renormalization. Range weights come from a fine lookup
/// table so runs stay deterministic and fast.
inline ImagePlane bilateral_filter(const ImagePlane& img, const KernelConfig& cfg) {
    require_plane(img, "bilateral_filter");
    cfg.validate();
    const int radius = static_cast<int>(std::ceil(3.0 * cfg.bilateral_sigma_spatial));
    const int w = img.width, h = img.height;
    const int side = 2 * radius + 1;

    std::vector<double> spatial(static_cast<size_t>(side) * side);
    const double ss2 = 2.0 * cfg.bilateral_sigma_spatial * cfg.bilateral_sigma_spatial;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            spatial[static_cast<size_t>(dy + radius) * side + (dx + radius)] =
                std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) / ss2);

    // |difference| quantized at 1/8 intensity steps; covers [0, 256].
    constexpr int kRangeBins = 2049;
    std::vector<double> range_lut(kRangeBins);
    const double sr2 = 2.0 * cfg.bilateral_sigma_range * cfg.bilateral_sigma_range;
    for (int i = 0; i < kRangeBins; ++i) {
        const double d = i / 8.0;
        range_lut[static_cast<size_t>(i)] = std::exp(-d * d / sr2);
    }

    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            float* dst = out.row(y);
            for (int x = 0; x < w; ++x) {
                const double center = img.at(x, y);
                double acc = 0.0, wsum = 0.0;
                const double* sp = spatial.data();
                for (int dy = -radius; dy <= radius; ++dy) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    const float* src = img.row(yy);
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        const double v = src[xx];
                        const int bin = std::min(kRangeBins - 1,
                                                 static_cast<int>(std::abs(v - center) * 8.0));
                        const double wt = *sp++ * range_lut[static_cast<size_t>(bin)];
                        acc += wt * v;
                        wsum += wt;
                    }
                }
                dst[x] = clamp_intensity(acc / wsum);
            }
        }
    });
    return out;
}

/// BT.601 luma.
inline ImagePlane rgb_to_gray(const ColorImage& img) {
    require_color(img, "rgb_to_gray");
    const int w = img.width(), h = img.height();
    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const float* r = img[0].row(y);
            const float* g = img[1].row(y);
            const float* b = img[2].row(y);
            float* dst = out.row(y);
            for (int x = 0; x < w; ++x)
                dst[x] = clamp_intensity(0.299 * r[x] + 0.587 * g[x] + 0.114 * b[x]);
        }
    });
    return out;
}

/// Deterministic gamma + gain brightness lift standing in for a neural
/// low-light enhancer: out = 255 * (gain * in / 255)^(1/gamma), clamped.
inline ImagePlane stub_enhance_plane(const ImagePlane& img, double gain, double gamma) {
    require_plane(img, "stub_enhancer");
    if (!(gain > 0.0) || !(gamma > 0.0))
        throw InvalidInput("stub_enhancer: gain and gamma must be > 0");
    ImagePlane out(img.width, img.height);
    const double inv_gamma = 1.0 / gamma;
    parallel_rows(img.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const float* src = img.row(y);
            float* dst = out.row(y);
            for (int x = 0; x < img.width; ++x) {
                const double t = std::max(0.0, gain * src[x] / kIntensityMax);
                dst[x] = clamp_intensity(kIntensityMax * std::pow(t, inv_gamma));
            }
        }
    });
    return out;
}

inline ColorImage stub_enhancer(const ColorImage& img, double gain, double gamma) {
    require_color(img, "stub_enhancer");
    return ColorImage(stub_enhance_plane(img[0], gain, gamma),
                      stub_enhance_plane(img[1], gain, gamma),
                      stub_enhance_plane(img[2], gain, gamma));
}

/// Exact inverse of the stub enhancer (before clamping); turns a bright
/// image into its synthetic low-light counterpart.
inline ImagePlane stub_darken_plane(const ImagePlane& img, double gain, double gamma) {
    require_plane(img, "stub_darken");
    if (!(gain > 0.0) || !(gamma > 0.0)) throw InvalidInput("stub_darken: gain and gamma must be > 0");
    ImagePlane out(img.width, img.height);
    parallel_rows(img.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const float* src = img.row(y);
            float* dst = out.row(y);
            for (int x = 0; x < img.width; ++x) {
                const double t = std::max(0.0, static_cast<double>(src[x]) / kIntensityMax);
                dst[x] = clamp_intensity(kIntensityMax / gain * std::pow(t, gamma));
            }
        }
    });
    return out;
}

inline ColorImage stub_darken(const ColorImage& img, double gain, double gamma) {
    require_color(img, "stub_darken");
    return ColorImage(stub_darken_plane(img[0], gain, gamma),
                      stub_darken_plane(img[1], gain, gamma),
                      stub_darken_plane(img[2], gain, gamma));
}

/// Downscale used when bringing the guide to the input resolution; a 3x3 box
/// prefilter suppresses the worst aliasing for reductions beyond 2x while
/// leaving the sensor noise high-frequency enough that it does not read as
/// correlated structure at the lower resolution.
inline ImagePlane downscale_guide(const ImagePlane& img, int out_w, int out_h) {
    require_plane(img, "downscale_guide");
    const double factor = 0.5 * (static_cast<double>(img.width) / out_w +
                                 static_cast<double>(img.height) / out_h);
    if (factor > 2.0) return bilinear_resize(box_mean(img, 1), out_w, out_h);
    return bilinear_resize(img, out_w, out_h);
}

inline ColorImage downscale_guide(const ColorImage& img, int out_w, int out_h) {
    require_color(img, "downscale_guide");
    return ColorImage(downscale_guide(img[0], out_w, out_h), downscale_guide(img[1], out_w, out_h),
                      downscale_guide(img[2], out_w, out_h));
}

inline ColorImage bilinear_resize(const ColorImage& img, int out_w, int out_h) {
    require_color(img, "bilinear_resize");
    return ColorImage(bilinear_resize(img[0], out_w, out_h), bilinear_resize(img[1], out_w, out_h),
                      bilinear_resize(img[2], out_w, out_h));
}

} // namespace agu
