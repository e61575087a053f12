// Naive reference implementations used as oracles: the same formulas as the
// library contracts, realized with direct per-window loops instead of
// integral images, sliding deques, or separable passes. Kept independent of
// the library's optimized code paths; only the basic containers are shared.
#pragma once

#include <cmath>
#include <vector>

#include "agu/image.hpp"
#include "agu/classify.hpp"
#include "agu/model.hpp"

namespace ref {

using agu::ColorImage;
using agu::ImagePlane;

inline ImagePlane box_mean(const ImagePlane& img, int radius) {
    ImagePlane out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            int count = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= img.height) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= img.width) continue;
                    acc += img.at(xx, yy);
                    ++count;
                }
            }
            out.at(x, y) = static_cast<float>(acc / count);
        }
    }
    return out;
}

inline void window_min_max(const ImagePlane& img, int radius, ImagePlane& out_min,
                           ImagePlane& out_max) {
    out_min = ImagePlane(img.width, img.height);
    out_max = ImagePlane(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            float mn = img.at(x, y), mx = img.at(x, y);
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= img.height) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= img.width) continue;
                    mn = std::min(mn, img.at(xx, yy));
                    mx = std::max(mx, img.at(xx, yy));
                }
            }
            out_min.at(x, y) = mn;
            out_max.at(x, y) = mx;
        }
    }
}

inline ImagePlane bilinear_resize_raw(const ImagePlane& img, int ow, int oh) {
    ImagePlane out(ow, oh);
    const double sx = static_cast<double>(img.width) / ow;
    const double sy = static_cast<double>(img.height) / oh;
    for (int y = 0; y < oh; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < ow; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            const double top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * wx;
            const double bot = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * wx;
            out.at(x, y) = static_cast<float>(top + (bot - top) * wy);
        }
    }
    return out;
}

inline ImagePlane bilinear_resize(const ImagePlane& img, int ow, int oh) {
    ImagePlane out = ref::bilinear_resize_raw(img, ow, oh);
    for (float& v : out.data) v = agu::clamp_intensity(v);
    return out;
}

inline ImagePlane nearest_resize(const ImagePlane& img, int ow, int oh) {
    ImagePlane out(ow, oh);
    const double sx = static_cast<double>(img.width) / ow;
    const double sy = static_cast<double>(img.height) / oh;
    for (int y = 0; y < oh; ++y) {
        const int yy = std::min(img.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < ow; ++x) {
            const int xx = std::min(img.width - 1, static_cast<int>((x + 0.5) * sx));
            out.at(x, y) = img.at(xx, yy);
        }
    }
    return out;
}

inline std::vector<double> log_kernel(double sigma, int size) {
    std::vector<double> k(static_cast<size_t>(size) * size);
    const int half = size / 2;
    const double s2 = sigma * sigma;
    double sum = 0.0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            const double v = -1.0 / (3.14159265358979323846 * s2 * s2) *
                             (1.0 - r2 / (2.0 * s2)) * std::exp(-r2 / (2.0 * s2));
            k[static_cast<size_t>(dy + half) * size + (dx + half)] = v;
            sum += v;
        }
    const double mean = sum / static_cast<double>(k.size());
    for (double& v : k) v -= mean;
    return k;
}

inline ImagePlane convolve_replicate(const ImagePlane& img, const std::vector<double>& kernel,
                                     int size) {
    const int half = size / 2;
    ImagePlane out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            const double* kp = kernel.data();
            for (int dy = -half; dy <= half; ++dy)
                for (int dx = -half; dx <= half; ++dx)
                    acc += *kp++ * img.at_clamped(x + dx, y + dy);
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

inline ImagePlane log_response(const ImagePlane& img, const agu::KernelConfig& cfg) {
    return ref::convolve_replicate(img, ref::log_kernel(cfg.log_sigma, cfg.log_size), cfg.log_size);
}

inline ImagePlane bilateral_filter(const ImagePlane& img, const agu::KernelConfig& cfg) {
    const int radius = static_cast<int>(std::ceil(3.0 * cfg.bilateral_sigma_spatial));
    const double ss2 = 2.0 * cfg.bilateral_sigma_spatial * cfg.bilateral_sigma_spatial;
    const double sr2 = 2.0 * cfg.bilateral_sigma_range * cfg.bilateral_sigma_range;
    ImagePlane out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double center = img.at(x, y);
            double acc = 0.0, wsum = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double v = img.at_clamped(x + dx, y + dy);
                    const double sw =
                        std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) / ss2);
                    // same 1/8-step range quantization as the production filter
                    const int bin = std::min(2048, static_cast<int>(std::abs(v - center) * 8.0));
                    const double rw = std::exp(-(bin / 8.0) * (bin / 8.0) / sr2);
                    acc += sw * rw * v;
                    wsum += sw * rw;
                }
            out.at(x, y) = agu::clamp_intensity(acc / wsum);
        }
    return out;
}

inline ImagePlane rgb_to_gray(const ColorImage& img) {
    ImagePlane out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(x, y) = agu::clamp_intensity(0.299 * img[0].at(x, y) + 0.587 * img[1].at(x, y) +
                                                0.114 * img[2].at(x, y));
    return out;
}

inline int32_t bin_signed(double value, double bound, int n_classes) {
    const double v = std::clamp(value, -bound, bound);
    const int idx = static_cast<int>(std::floor((v + bound) / (2.0 * bound / n_classes)));
    return static_cast<int32_t>(std::clamp(idx, 0, n_classes - 1));
}

inline agu::ClassMap edge_classes(const ImagePlane& gray, const agu::KernelConfig& kcfg,
                                  const agu::ClassConfig& ccfg) {
    const ImagePlane resp = ref::log_response(ref::bilateral_filter(gray, kcfg), kcfg);
    agu::ClassMap out(gray.width, gray.height, ccfg.n_classes);
    for (size_t i = 0; i < resp.size(); ++i)
        out.labels[i] = ref::bin_signed(resp.data[i], ccfg.clamp_log, ccfg.n_classes);
    return out;
}

inline agu::ClassMap brightness_classes(const ImagePlane& enhanced, const ImagePlane& guide,
                                        const agu::ClassConfig& ccfg) {
    agu::ClassMap out(enhanced.width, enhanced.height, ccfg.n_classes);
    for (size_t i = 0; i < enhanced.size(); ++i)
        out.labels[i] = ref::bin_signed(static_cast<double>(enhanced.data[i]) - guide.data[i], 255.0,
                                   ccfg.n_classes);
    return out;
}

struct CoeffPair {
    ImagePlane a;
    ImagePlane b;
};

inline CoeffPair compute_ab_raw(const ImagePlane& input, const ImagePlane& guide, int radius,
                                const ImagePlane& eps) {
    const int w = guide.width, h = guide.height;
    const ImagePlane mg = ref::box_mean(guide, radius);
    const ImagePlane mi = ref::box_mean(input, radius);
    ImagePlane gg(w, h), gi(w, h), ii(w, h);
    for (size_t i = 0; i < gg.size(); ++i) {
        const double g = guide.data[i];
        const double v = input.data[i];
        gg.data[i] = static_cast<float>(g * g);
        gi.data[i] = static_cast<float>(g * v);
        ii.data[i] = static_cast<float>(v * v);
    }
    const ImagePlane mgg = ref::box_mean(gg, radius);
    const ImagePlane mgi = ref::box_mean(gi, radius);
    const ImagePlane mii = ref::box_mean(ii, radius);
    CoeffPair out{ImagePlane(w, h), ImagePlane(w, h)};
    for (size_t i = 0; i < gg.size(); ++i) {
        const double var = std::max(0.0, static_cast<double>(mgg.data[i]) -
                                             static_cast<double>(mg.data[i]) * mg.data[i]);
        const double var_i = std::max(0.0, static_cast<double>(mii.data[i]) -
                                               static_cast<double>(mi.data[i]) * mi.data[i]);
        const double bound = std::sqrt(var * var_i);
        const double cov = std::clamp(static_cast<double>(mgi.data[i]) -
                                          static_cast<double>(mg.data[i]) * mi.data[i],
                                      -bound, bound);
        const double a = cov / (var + eps.data[i] + 1e-3);
        out.a.data[i] = static_cast<float>(a);
        out.b.data[i] =
            static_cast<float>(mi.data[i] - a * static_cast<double>(mg.data[i]));
    }
    return out;
}

inline CoeffPair compute_ab(const ImagePlane& input, const ImagePlane& guide, int radius,
                            const ImagePlane& eps) {
    CoeffPair f = ref::compute_ab_raw(input, guide, radius, eps);
    f.a = ref::box_mean(f.a, radius);
    f.b = ref::box_mean(f.b, radius);
    return f;
}

inline ImagePlane clamp_xi(const ImagePlane& guide, const ImagePlane& xi, int radius) {
    ImagePlane wmin, wmax;
    ref::window_min_max(guide, radius, wmin, wmax);
    ImagePlane out(guide.width, guide.height);
    for (size_t i = 0; i < out.size(); ++i) {
        const double g = guide.data[i];
        out.data[i] = static_cast<float>(std::clamp(static_cast<double>(xi.data[i]),
                                                    static_cast<double>(wmin.data[i]) - g,
                                                    static_cast<double>(wmax.data[i]) - g));
    }
    return out;
}

inline ImagePlane downscale_guide(const ImagePlane& img, int ow, int oh) {
    const double factor = 0.5 * (static_cast<double>(img.width) / ow +
                                 static_cast<double>(img.height) / oh);
    if (factor > 2.0) return ref::bilinear_resize(ref::box_mean(img, 1), ow, oh);
    return ref::bilinear_resize(img, ow, oh);
}

inline ImagePlane eps_field(const agu::Lut& lut_sigma, const agu::ClassMap& classes,
                            double lambda) {
    ImagePlane out(classes.width, classes.height);
    for (size_t i = 0; i < classes.size(); ++i) {
        const double s = lut_sigma[static_cast<size_t>(classes.labels[i])];
        out.data[i] = static_cast<float>(lambda * s * s);
    }
    return out;
}

/// Straightforward rendering of the full upsampling pipeline using the
/// naive primitives above.
inline ColorImage agu_apply(const ColorImage& guide_hr, const ColorImage& input_lr,
                            const agu::AguModel& model, double uf) {
    const int hw = guide_hr.width(), hh = guide_hr.height();
    const int lw = input_lr.width(), lh = input_lr.height();
    const agu::ClassConfig ccfg{model.n_classes, model.clamp_log};
    const bool same = (lw == hw && lh == hh);

    ColorImage guide_lr;
    for (int c = 0; c < 3; ++c) guide_lr[c] = same ? guide_hr[c] : ref::downscale_guide(guide_hr[c], lw, lh);

    const agu::ClassMap c_hr = ref::edge_classes(ref::rgb_to_gray(guide_hr), model.kernel_cfg, ccfg);
    const agu::ClassMap c_lr = same ? c_hr : ref::edge_classes(ref::rgb_to_gray(guide_lr), model.kernel_cfg, ccfg);
    const ImagePlane eps = ref::eps_field(model.lut_sigma, c_lr, model.lambda);

    ColorImage out(hw, hh);
    for (int c = 0; c < 3; ++c) {
        // brightness classification runs on mean-prefiltered planes
        const agu::ClassMap cb = ref::brightness_classes(ref::box_mean(input_lr[c], 1),
                                                         ref::box_mean(guide_lr[c], 1), ccfg);
        CoeffPair coeff = ref::compute_ab(input_lr[c], guide_lr[c], model.radius, eps);

        ImagePlane a_up = ref::bilinear_resize_raw(coeff.a, hw, hh);
        ImagePlane b_up = ref::bilinear_resize_raw(coeff.b, hw, hh);
        for (size_t i = 0; i < a_up.size(); ++i) {
            const auto cls = static_cast<size_t>(c_hr.labels[i]);
            a_up.data[i] = static_cast<float>(a_up.data[i] + model.lut_ecb_a[cls]);
            b_up.data[i] = static_cast<float>(b_up.data[i] + model.lut_ecb_b[cls]);
        }

        ImagePlane tau_lr(lw, lh);
        for (size_t i = 0; i < tau_lr.size(); ++i)
            tau_lr.data[i] = static_cast<float>(model.lut_tau[static_cast<size_t>(cb.labels[i])]);
        const ImagePlane tau_hr = ref::nearest_resize(tau_lr, hw, hh);

        ImagePlane xi(hw, hh);
        for (size_t i = 0; i < xi.size(); ++i)
            xi.data[i] = static_cast<float>(model.lut_xi[static_cast<size_t>(c_hr.labels[i])]);
        const ImagePlane xi_c = ref::clamp_xi(guide_hr[c], xi, model.radius);

        for (size_t i = 0; i < out[c].size(); ++i)
            out[c].data[i] = agu::clamp_intensity(
                static_cast<double>(a_up.data[i]) * (guide_hr[c].data[i] + xi_c.data[i]) +
                b_up.data[i] + tau_hr.data[i]);
        (void)uf;
    }
    return out;
}

} // namespace ref
