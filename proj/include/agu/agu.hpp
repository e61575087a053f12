#pragma once

#include "agu/guided.hpp"

namespace agu {

/// Bilinearly upsamples the coefficient planes to the class-map resolution
/// and adds the class-based correction: A' = bilinear(A) + ecb_a[class],
/// likewise for B. The sign split of the correction comes from the class
/// index itself (classes above the center carry the positive-gradient
/// corrections, classes below the negative ones, as trained).
inline CoeffField upsample_coeffs(const CoeffField& coeff, const Lut& ecb_a, const Lut& ecb_b,
                                  const ClassMap& hr_classes, double uf) {
    require_same_dims(coeff.a, coeff.b, "upsample_coeffs");
    if (!(uf >= 1.0)) throw InvalidInput("upsample_coeffs: uf must be >= 1");
    if (static_cast<int>(ecb_a.size()) != hr_classes.n_classes ||
        static_cast<int>(ecb_b.size()) != hr_classes.n_classes)
        throw InvalidModel("upsample_coeffs: ecb LUT size does not match class map");
    const int ow = hr_classes.width, oh = hr_classes.height;
    if (std::abs(ow - static_cast<int>(std::lround(coeff.a.width * uf))) > 1 ||
        std::abs(oh - static_cast<int>(std::lround(coeff.a.height * uf))) > 1)
        throw InvalidInput("upsample_coeffs: class map dims inconsistent with uf");

    CoeffField out;
    out.a = bilinear_resize_raw(coeff.a, ow, oh);
    out.b = bilinear_resize_raw(coeff.b, ow, oh);
    parallel_rows(oh, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const size_t off = static_cast<size_t>(y) * ow;
            for (int x = 0; x < ow; ++x) {
                const size_t i = off + x;
                const auto c = static_cast<size_t>(hr_classes.labels[i]);
                out.a.data[i] = static_cast<float>(out.a.data[i] + ecb_a[c]);
                out.b.data[i] = static_cast<float>(out.b.data[i] + ecb_b[c]);
            }
        }
    });
    return out;
}

namespace detail {

/// Everything agu_apply derives from (guide, input, model) before the final
/// per-channel combine. Shared with the training code, which re-renders
/// outputs many times while only the LUT contents change.
struct AguPlanes {
    ColorImage guide_lr;           // guide at input resolution
    ClassMap classes_hr;           // edge classes on the high-res luma
    ClassMap classes_lr;           // edge classes on the low-res luma
    std::array<ClassMap, 3> cb;    // per-channel brightness classes (low-res)
};

inline AguPlanes prepare_agu_planes(const ColorImage& guide_hr, const ColorImage& input_lr,
                                    const AguModel& model) {
    AguPlanes p;
    const int lw = input_lr.width(), lh = input_lr.height();
    p.guide_lr = (lw == guide_hr.width() && lh == guide_hr.height())
                     ? guide_hr
                     : downscale_guide(guide_hr, lw, lh);
    const ClassConfig ccfg = model.class_cfg();
    p.classes_hr = edge_classes(rgb_to_gray(guide_hr), model.kernel_cfg, ccfg);
    p.classes_lr = (lw == guide_hr.width() && lh == guide_hr.height())
                       ? p.classes_hr
                       : edge_classes(rgb_to_gray(p.guide_lr), model.kernel_cfg, ccfg);
    for (int c = 0; c < 3; ++c)
        p.cb[static_cast<size_t>(c)] = brightness_classes_prefiltered(input_lr[c], p.guide_lr[c], ccfg);
    return p;
}

} // namespace detail

/// Adaptive Guided Upsampling. Produces the enhanced image at the guide
/// resolution: per channel, closed-form coefficients are computed at the
/// input resolution against the downscaled guide, corrected per class while
/// being upsampled, and applied to the high-resolution guide together with
/// the sharpening (xi) correction; the brightness correction (tau) is added
/// outside the linear term so it survives the smoothing limit A -> 0.
inline ColorImage agu_apply(const ColorImage& guide_hr, const ColorImage& input_lr,
                            const AguModel& model, double uf) {
    require_color(guide_hr, "agu_apply");
    require_color(input_lr, "agu_apply");
    model.validate();
    if (!(uf >= 1.0)) throw InvalidInput("agu_apply: uf must be >= 1");
    if (std::abs(guide_hr.width() - static_cast<int>(std::lround(input_lr.width() * uf))) > 1 ||
        std::abs(guide_hr.height() - static_cast<int>(std::lround(input_lr.height() * uf))) > 1)
        throw InvalidInput("agu_apply: guide dims must equal input dims x uf (within rounding)");

    const detail::AguPlanes planes = detail::prepare_agu_planes(guide_hr, input_lr, model);
    const int hw = guide_hr.width(), hh = guide_hr.height();
    const EpsilonField eps = make_epsilon_field(model.lut_sigma, planes.classes_lr, model.lambda);

    ColorImage out(hw, hh);
    for (int c = 0; c < 3; ++c) {
        const CoeffField coeff =
            compute_ab(input_lr[c], planes.guide_lr[c], model.radius, eps);
        const CoeffField up =
            upsample_coeffs(coeff, model.lut_ecb_a, model.lut_ecb_b, planes.classes_hr, uf);

        ImagePlane tau_lr(planes.cb[static_cast<size_t>(c)].width,
                          planes.cb[static_cast<size_t>(c)].height);
        for (size_t i = 0; i < tau_lr.size(); ++i)
            tau_lr.data[i] = static_cast<float>(
                model.lut_tau[static_cast<size_t>(planes.cb[static_cast<size_t>(c)].labels[i])]);
        const ImagePlane tau_hr = nearest_resize(tau_lr, hw, hh);

        ImagePlane xi(hw, hh);
        for (size_t i = 0; i < xi.size(); ++i)
            xi.data[i] =
                static_cast<float>(model.lut_xi[static_cast<size_t>(planes.classes_hr.labels[i])]);
        const ImagePlane xi_c = clamp_xi(guide_hr[c], xi, model.radius);

        ImagePlane& dst = out[c];
        const ImagePlane& g = guide_hr[c];
        parallel_rows(hh, [&](int yb, int ye) {
            for (int y = yb; y < ye; ++y) {
                const size_t off = static_cast<size_t>(y) * hw;
                for (int x = 0; x < hw; ++x) {
                    const size_t i = off + x;
                    dst.data[i] = clamp_intensity(
                        static_cast<double>(up.a.data[i]) * (g.data[i] + xi_c.data[i]) +
                        up.b.data[i] + tau_hr.data[i]);
                }
            }
        });
    }
    return out;
}

/// Same-resolution AGU (uf = 1); deliberately oversharpens since no
/// interpolation damps the trained corrections.
inline ColorImage agu_apply_same_res(const ColorImage& guide, const ColorImage& input,
                                     const AguModel& model) {
    require_color(guide, "agu_apply_same_res");
    require_color(input, "agu_apply_same_res");
    if (guide.width() != input.width() || guide.height() != input.height())
        throw InvalidInput("agu_apply_same_res: guide and input dims must match");
    return agu_apply(guide, input, model, 1.0);
}

} // namespace agu
