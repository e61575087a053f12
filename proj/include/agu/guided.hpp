#pragma once

#include "agu/model.hpp"

namespace agu {

/// Paired per-pixel linear-transform coefficients O = a * G + b.
struct CoeffField {
    ImagePlane a;
    ImagePlane b;
};

/// Per-pixel regularizer eps = lambda * sigma^2 damping the coefficient A.
struct EpsilonField {
    ImagePlane eps;
    double lambda = 0.0;
};

inline EpsilonField uniform_epsilon(int width, int height, double eps_value) {
    if (eps_value < 0.0) throw InvalidInput("epsilon must be >= 0");
    return EpsilonField{ImagePlane(width, height, static_cast<float>(eps_value)), 0.0};
}

/// eps_p = lambda * sigma[class_p]^2.
inline EpsilonField make_epsilon_field(const Lut& lut_sigma, const ClassMap& classes,
                                       double lambda) {
    if (lambda < 0.0) throw InvalidInput("make_epsilon_field: lambda must be >= 0");
    EpsilonField f;
    f.lambda = lambda;
    f.eps = ImagePlane(classes.width, classes.height);
    for (size_t i = 0; i < classes.size(); ++i) {
        const int32_t c = classes.labels[i];
        if (c < 0 || c >= static_cast<int32_t>(lut_sigma.size()))
            throw InvalidModel("make_epsilon_field: class index outside sigma LUT");
        const double s = lut_sigma[static_cast<size_t>(c)];
        f.eps.data[i] = static_cast<float>(lambda * s * s);
    }
    return f;
}

// Guards the A division when a window is flat and eps == 0. Float moment
// cancellation leaves noise well below this at the [0,255] intensity scale,
// while genuine window variances sit orders of magnitude above it.
constexpr double kVarianceFloor = 1e-3;

/// Windowed first+second order statistics of (guide, input) as used by the
/// closed-form coefficients. The covariance is clamped to the
/// Cauchy-Schwarz bound sqrt(var_g * var_i), which true window statistics
/// always satisfy; only cancellation noise on flat windows violates it.
struct AbStats {
    ImagePlane mean_g;
    ImagePlane mean_i;
    ImagePlane var_g;   // clamped at >= 0
    ImagePlane cov_gi;
};

inline AbStats compute_ab_stats(const ImagePlane& input, const ImagePlane& guide, int radius) {
    require_same_dims(input, guide, "compute_ab");
    const int w = guide.width, h = guide.height;
    AbStats s;
    s.mean_g = box_mean(guide, radius);
    s.mean_i = box_mean(input, radius);
    ImagePlane gg(w, h), gi(w, h), ii(w, h);
    for (size_t i = 0; i < guide.size(); ++i) {
        const double g = guide.data[i];
        const double v = input.data[i];
        gg.data[i] = static_cast<float>(g * g);
        gi.data[i] = static_cast<float>(g * v);
        ii.data[i] = static_cast<float>(v * v);
    }
    s.var_g = box_mean(gg, radius);
    s.cov_gi = box_mean(gi, radius);
    const ImagePlane mean_ii = box_mean(ii, radius);
    for (size_t i = 0; i < guide.size(); ++i) {
        const double mg = s.mean_g.data[i];
        const double mi = s.mean_i.data[i];
        const double var_g = std::max(0.0, s.var_g.data[i] - mg * mg);
        const double var_i = std::max(0.0, static_cast<double>(mean_ii.data[i]) - mi * mi);
        const double bound = std::sqrt(var_g * var_i);
        const double cov = static_cast<double>(s.cov_gi.data[i]) - mg * mi;
        s.var_g.data[i] = static_cast<float>(var_g);
        s.cov_gi.data[i] = static_cast<float>(std::clamp(cov, -bound, bound));
    }
    return s;
}

/// Closed-form per-window coefficients A = cov(G,I) / (var(G) + eps),
/// B = mean(I) - A * mean(G), before the smoothing pass.
inline CoeffField compute_ab_raw(const AbStats& stats, const EpsilonField& eps) {
    require_same_dims(stats.mean_g, eps.eps, "compute_ab");
    const int w = stats.mean_g.width, h = stats.mean_g.height;
    CoeffField f{ImagePlane(w, h), ImagePlane(w, h)};
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const size_t off = static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                const size_t i = off + x;
                const double a = stats.cov_gi.data[i] /
                                 (static_cast<double>(stats.var_g.data[i]) + eps.eps.data[i] +
                                  kVarianceFloor);
                f.a.data[i] = static_cast<float>(a);
                f.b.data[i] = static_cast<float>(stats.mean_i.data[i] -
                                                 a * static_cast<double>(stats.mean_g.data[i]));
            }
        }
    });
    return f;
}

/// Full coefficient computation including the trailing box-mean smoothing of
/// A and B.
inline CoeffField compute_ab(const ImagePlane& input, const ImagePlane& guide, int radius,
                             const EpsilonField& eps) {
    const AbStats stats = compute_ab_stats(input, guide, radius);
    CoeffField f = compute_ab_raw(stats, eps);
    f.a = box_mean(f.a, radius);
    f.b = box_mean(f.b, radius);
    return f;
}

/// Limits the sharpening offset so G + xi stays inside the windowed
/// [min, max] of the guide at every pixel.
inline ImagePlane clamp_xi(const ImagePlane& guide, const ImagePlane& xi, int radius) {
    require_same_dims(guide, xi, "clamp_xi");
    ImagePlane wmin, wmax;
    window_min_max(guide, radius, wmin, wmax);
    ImagePlane out(guide.width, guide.height);
    parallel_rows(guide.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const size_t off = static_cast<size_t>(y) * guide.width;
            for (int x = 0; x < guide.width; ++x) {
                const size_t i = off + x;
                const double g = guide.data[i];
                const double lo = static_cast<double>(wmin.data[i]) - g;
                const double hi = static_cast<double>(wmax.data[i]) - g;
                out.data[i] = static_cast<float>(
                    std::clamp(static_cast<double>(xi.data[i]), lo, hi));
            }
        }
    });
    return out;
}

/// Adaptive Guided Filter baseline with a caller-supplied edge class map
/// (classes are always derived from the grayscale guide).
inline ImagePlane agf_apply_with_classes(const ImagePlane& input, const ImagePlane& guide,
                                         const AguModel& model, const ClassMap& classes) {
    require_same_dims(input, guide, "agf_apply");
    model.validate();
    if (classes.n_classes != model.n_classes)
        throw InvalidModel("agf_apply: class map does not match model class count");
    if (classes.width != guide.width || classes.height != guide.height)
        throw InvalidInput("agf_apply: class map dimensions differ from the guide");

    const EpsilonField eps = make_epsilon_field(model.lut_sigma, classes, model.lambda);
    const CoeffField coeff = compute_ab(input, guide, model.radius, eps);

    ImagePlane xi(guide.width, guide.height);
    for (size_t i = 0; i < xi.size(); ++i)
        xi.data[i] = static_cast<float>(model.lut_xi[static_cast<size_t>(classes.labels[i])]);
    const ImagePlane xi_c = clamp_xi(guide, xi, model.radius);

    ImagePlane out(guide.width, guide.height);
    parallel_rows(guide.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const size_t off = static_cast<size_t>(y) * guide.width;
            for (int x = 0; x < guide.width; ++x) {
                const size_t i = off + x;
                out.data[i] = clamp_intensity(
                    static_cast<double>(coeff.a.data[i]) * (guide.data[i] + xi_c.data[i]) +
                    coeff.b.data[i]);
            }
        }
    });
    return out;
}

/// AGF on a single plane; edge classes computed from the guide itself.
inline ImagePlane agf_apply(const ImagePlane& input, const ImagePlane& guide,
                            const AguModel& model) {
    const ClassMap classes = edge_classes(guide, model.kernel_cfg, model.class_cfg());
    return agf_apply_with_classes(input, guide, model, classes);
}

/// Color AGF wrapper: shared edge classes from the grayscale guide, channels
/// filtered independently.
inline ColorImage agf_apply(const ColorImage& input, const ColorImage& guide,
                            const AguModel& model) {
    require_color(input, "agf_apply");
    require_color(guide, "agf_apply");
    const ClassMap classes = edge_classes(rgb_to_gray(guide), model.kernel_cfg, model.class_cfg());
    ColorImage out;
    for (int c = 0; c < 3; ++c)
        out[c] = agf_apply_with_classes(input[c], guide[c], model, classes);
    return out;
}

/// Fast Guided Filter baseline: coefficients computed at 1/subsample
/// resolution with a uniform regularizer, box-smoothed, bilinearly
/// upsampled, applied to the full-resolution guide.
inline ImagePlane fgf_apply(const ImagePlane& input, const ImagePlane& guide, int radius,
                            double eps_const, int subsample) {
    require_same_dims(input, guide, "fgf_apply");
    if (subsample < 1) throw InvalidInput("fgf_apply: subsample must be >= 1");
    if (eps_const < 0.0) throw InvalidInput("fgf_apply: eps must be >= 0");
    const int w = guide.width, h = guide.height;
    const int lw = std::max(1, (w + subsample / 2) / subsample);
    const int lh = std::max(1, (h + subsample / 2) / subsample);
    const ImagePlane g_lr = subsample == 1 ? guide : bilinear_resize(guide, lw, lh);
    const ImagePlane i_lr = subsample == 1 ? input : bilinear_resize(input, lw, lh);
    const int r_lr = std::max(1, static_cast<int>(std::lround(static_cast<double>(radius) / subsample)));
    CoeffField coeff = compute_ab(i_lr, g_lr, r_lr, uniform_epsilon(lw, lh, eps_const));
    const ImagePlane a_hr = subsample == 1 ? coeff.a : bilinear_resize_raw(coeff.a, w, h);
    const ImagePlane b_hr = subsample == 1 ? coeff.b : bilinear_resize_raw(coeff.b, w, h);
    ImagePlane out(w, h);
    parallel_rows(h, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const size_t off = static_cast<size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                const size_t i = off + x;
                out.data[i] = clamp_intensity(static_cast<double>(a_hr.data[i]) * guide.data[i] +
                                              b_hr.data[i]);
            }
        }
    });
    return out;
}

inline ColorImage fgf_apply(const ColorImage& input, const ColorImage& guide, int radius,
                            double eps_const, int subsample) {
    require_color(input, "fgf_apply");
    require_color(guide, "fgf_apply");
    ColorImage out;
    for (int c = 0; c < 3; ++c)
        out[c] = fgf_apply(input[c], guide[c], radius, eps_const, subsample);
    return out;
}

} // namespace agu
