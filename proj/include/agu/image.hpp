#pragma once

#include <array>
#include <cmath>

#include "agu/common.hpp"

namespace agu {

/// Single-channel raster of floating-point intensities in [0, 255],
/// row-major. The universal pixel container of the library; coefficient
/// fields and filter responses reuse the same layout but may hold signed,
/// unbounded values.
struct ImagePlane {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ImagePlane() = default;

    ImagePlane(int w, int h, float fill = 0.0f) : width(w), height(h) {
        if (w < 1 || h < 1) throw InvalidInput("ImagePlane: dimensions must be >= 1");
        data.assign(static_cast<size_t>(w) * static_cast<size_t>(h), fill);
    }

    bool empty() const { return width < 1 || height < 1; }
    size_t size() const { return data.size(); }
    bool same_dims(const ImagePlane& o) const { return width == o.width && height == o.height; }

    float& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    /// Border-replicating access.
    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }

    float* row(int y) { return data.data() + static_cast<size_t>(y) * width; }
    const float* row(int y) const { return data.data() + static_cast<size_t>(y) * width; }

    double mean() const {
        double s = 0.0;
        for (const float v : data) s += v;
        return data.empty() ? 0.0 : s / static_cast<double>(data.size());
    }
};

inline void require_plane(const ImagePlane& p, const char* op) {
    if (p.empty() || p.data.size() != static_cast<size_t>(p.width) * p.height)
        throw InvalidInput(std::string(op) + ": empty or malformed image plane");
}

inline void require_same_dims(const ImagePlane& a, const ImagePlane& b, const char* op) {
    require_plane(a, op);
    require_plane(b, op);
    if (!a.same_dims(b)) throw InvalidInput(std::string(op) + ": dimension mismatch");
}

/// Three same-sized planes in RGB order.
struct ColorImage {
    std::array<ImagePlane, 3> planes;

    ColorImage() = default;

    ColorImage(int w, int h, float fill = 0.0f)
        : planes{ImagePlane(w, h, fill), ImagePlane(w, h, fill), ImagePlane(w, h, fill)} {}

    explicit ColorImage(const ImagePlane& gray) : planes{gray, gray, gray} {}

    ColorImage(ImagePlane r, ImagePlane g, ImagePlane b)
        : planes{std::move(r), std::move(g), std::move(b)} {
        if (!planes[0].same_dims(planes[1]) || !planes[0].same_dims(planes[2]))
            throw InvalidInput("ColorImage: channel dimensions differ");
    }

    int width() const { return planes[0].width; }
    int height() const { return planes[0].height; }
    bool empty() const { return planes[0].empty(); }

    ImagePlane& operator[](int c) { return planes[static_cast<size_t>(c)]; }
    const ImagePlane& operator[](int c) const { return planes[static_cast<size_t>(c)]; }
};

inline void require_color(const ColorImage& img, const char* op) {
    for (const auto& p : img.planes) require_plane(p, op);
    if (!img[0].same_dims(img[1]) || !img[0].same_dims(img[2]))
        throw InvalidInput(std::string(op) + ": channel dimensions differ");
}

/// Kernel configuration shared by the low-level filters. The LoG defaults
/// (sigma 1.0, size 7) are recorded in trained model files so results stay
/// reproducible.
struct KernelConfig {
    int radius = 2;                      // guided-filter window radius k
    double log_sigma = 1.0;              // sigma of the LoG kernel
    int log_size = 7;                    // LoG kernel side length, odd
    double bilateral_sigma_spatial = 1.0;
    double bilateral_sigma_range = 25.0;

    void validate() const {
        if (radius < 1) throw InvalidConfig("KernelConfig: radius must be >= 1");
        if (log_size < 3 || log_size % 2 == 0)
            throw InvalidConfig("KernelConfig: log_size must be odd and >= 3");
        if (!(log_sigma > 0.0) || !(bilateral_sigma_spatial > 0.0) ||
            !(bilateral_sigma_range > 0.0))
            throw InvalidConfig("KernelConfig: sigmas must be > 0");
    }
};

} // namespace agu
