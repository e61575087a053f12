#pragma once

#include "agu/kernels.hpp"

namespace agu {

/// Per-pixel class labels indexing the trainable lookup tables.
struct ClassMap {
    int width = 0;
    int height = 0;
    int n_classes = 0;
    std::vector<int32_t> labels;

    ClassMap() = default;

    ClassMap(int w, int h, int n) : width(w), height(h), n_classes(n) {
        if (w < 1 || h < 1) throw InvalidInput("ClassMap: dimensions must be >= 1");
        labels.assign(static_cast<size_t>(w) * h, 0);
    }

    int32_t& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
    int32_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return labels.size(); }
};

/// Binning configuration. n_classes is odd so the center class corresponds
/// to zero LoG response / zero brightness delta; responses are clamped to a
/// fixed range before binning so trained LUT indices transfer across images.
/// The default response range is matched to low-light guides, whose LoG
/// responses rarely leave a few dozen intensity units; a wider range would
/// collapse all content into a handful of center classes.
struct ClassConfig {
    int n_classes = 121;
    double clamp_log = 128.0;

    int center_class() const { return (n_classes - 1) / 2; }

    void validate() const {
        if (n_classes < 3 || n_classes % 2 == 0)
            throw InvalidConfig("ClassConfig: n_classes must be odd and >= 3");
        if (!(clamp_log > 0.0)) throw InvalidConfig("ClassConfig: clamp_log must be > 0");
    }
};

namespace detail {

inline int32_t bin_signed(double value, double bound, int n_classes) {
    const double v = std::clamp(value, -bound, bound);
    const int idx = static_cast<int>(std::floor((v + bound) / (2.0 * bound / n_classes)));
    return static_cast<int32_t>(std::clamp(idx, 0, n_classes - 1));
}

} // namespace detail

/// Edge classes from the guidance image: bilateral prefilter (extracts the
/// meaningful edges), LoG response, then linear binning of the clamped
/// response with the center class at zero.
inline ClassMap edge_classes(const ImagePlane& guide_gray, const KernelConfig& kcfg,
                             const ClassConfig& ccfg) {
    require_plane(guide_gray, "edge_classes");
    ccfg.validate();
    const ImagePlane smoothed = bilateral_filter(guide_gray, kcfg);
    const ImagePlane resp = log_response(smoothed, kcfg);
    ClassMap out(guide_gray.width, guide_gray.height, ccfg.n_classes);
    parallel_rows(out.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const float* src = resp.row(y);
            int32_t* dst = out.labels.data() + static_cast<size_t>(y) * out.width;
            for (int x = 0; x < out.width; ++x)
                dst[x] = detail::bin_signed(src[x], ccfg.clamp_log, ccfg.n_classes);
        }
    });
    return out;
}

/// Brightness classes from the per-pixel difference enhanced - guide, binned
/// over the fixed range [-255, 255].
inline ClassMap brightness_classes(const ImagePlane& enhanced, const ImagePlane& guide,
                                   const ClassConfig& ccfg) {
    require_same_dims(enhanced, guide, "brightness_classes");
    ccfg.validate();
    ClassMap out(enhanced.width, enhanced.height, ccfg.n_classes);
    parallel_rows(out.height, [&](int yb, int ye) {
        for (int y = yb; y < ye; ++y) {
            const float* e = enhanced.row(y);
            const float* g = guide.row(y);
            int32_t* dst = out.labels.data() + static_cast<size_t>(y) * out.width;
            for (int x = 0; x < out.width; ++x)
                dst[x] = detail::bin_signed(static_cast<double>(e[x]) - g[x], kIntensityMax,
                                            ccfg.n_classes);
        }
    });
    return out;
}

/// Brightness classification as used by the processing pipeline: both planes
/// pass a small mean prefilter first, so the class field is driven by the
/// local brightness difference rather than per-pixel noise (the counterpart
/// of the bilateral prefilter on the edge-classification path). Without it
/// the looked-up correction field inherits the noise of the difference
/// image.
inline ClassMap brightness_classes_prefiltered(const ImagePlane& enhanced,
                                               const ImagePlane& guide, const ClassConfig& ccfg) {
    require_same_dims(enhanced, guide, "brightness_classes");
    return brightness_classes(box_mean(enhanced, 1), box_mean(guide, 1), ccfg);
}

/// Nearest-neighbor class map resize (labels are not interpolated).
inline ClassMap nearest_resize(const ClassMap& map, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw InvalidInput("nearest_resize: output dims must be >= 1");
    ClassMap out(out_w, out_h, map.n_classes);
    const double sx = static_cast<double>(map.width) / out_w;
    const double sy = static_cast<double>(map.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const int sy_i = std::min(map.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < out_w; ++x) {
            const int sx_i = std::min(map.width - 1, static_cast<int>((x + 0.5) * sx));
            out.at(x, y) = map.at(sx_i, sy_i);
        }
    }
    return out;
}

/// False-color rendering of a class map for debug dumps: class index mapped
/// onto a blue->green->red ramp with the center class in mid gray.
inline ColorImage class_map_false_color(const ClassMap& map) {
    ColorImage out(map.width, map.height);
    const double denom = std::max(1, map.n_classes - 1);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const double t = map.at(x, y) / denom; // 0..1
            const double r = std::clamp(2.0 * t - 1.0, 0.0, 1.0);
            const double b = std::clamp(1.0 - 2.0 * t, 0.0, 1.0);
            const double g = 1.0 - r - b;
            out[0].at(x, y) = clamp_intensity(255.0 * r + 128.0 * g);
            out[1].at(x, y) = clamp_intensity(255.0 * g + 64.0 * (r + b));
            out[2].at(x, y) = clamp_intensity(255.0 * b + 128.0 * g);
        }
    }
    return out;
}

} // namespace agu
