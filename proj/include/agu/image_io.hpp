#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>

#include "agu/image.hpp"

namespace agu {

namespace detail {

inline uint8_t to_byte(float v) {
    // round half up, clamp to [0, 255]
    const double r = std::floor(static_cast<double>(v) + 0.5);
    return static_cast<uint8_t>(std::clamp(r, 0.0, 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline bool has_suffix(const std::string& s, const char* suffix) {
    const std::string suf(suffix);
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    for (auto& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suf;
}

} // namespace detail

/// Decoded raster: 1 or 3 channels of 8-bit data widened to float planes.
struct LoadedImage {
    ColorImage color;
    bool is_gray = false;

    ImagePlane gray() const { return is_gray ? color[0] : rgb_to_gray_copy(); }

private:
    ImagePlane rgb_to_gray_copy() const {
        ImagePlane out(color.width(), color.height());
        for (size_t i = 0; i < out.size(); ++i)
            out.data[i] = clamp_intensity(0.299 * color[0].data[i] + 0.587 * color[1].data[i] +
                                          0.114 * color[2].data[i]);
        return out;
    }
};

inline LoadedImage read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    const bool gray = (channels == 1);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: unsupported channel count in " + path);
    }

    std::vector<uint8_t> rowbuf(static_cast<size_t>(width) * channels);
    LoadedImage out;
    out.is_gray = gray;
    out.color = ColorImage(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, rowbuf.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            if (gray) {
                const float v = static_cast<float>(rowbuf[x]);
                out.color[0].at(static_cast<int>(x), static_cast<int>(y)) = v;
                out.color[1].at(static_cast<int>(x), static_cast<int>(y)) = v;
                out.color[2].at(static_cast<int>(x), static_cast<int>(y)) = v;
            } else {
                for (int c = 0; c < 3; ++c)
                    out.color[c].at(static_cast<int>(x), static_cast<int>(y)) =
                        static_cast<float>(rowbuf[static_cast<size_t>(x) * 3 + c]);
            }
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline void write_png(const std::string& path, const ColorImage& img) {
    require_color(img, "write_png");
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open image for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> rowbuf(static_cast<size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c)
                rowbuf[static_cast<size_t>(x) * 3 + c] = detail::to_byte(img[c].at(x, y));
        png_write_row(png, rowbuf.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void write_png(const std::string& path, const ImagePlane& img) {
    require_plane(img, "write_png");
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open image for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: allocation failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: allocation failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> rowbuf(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) rowbuf[static_cast<size_t>(x)] = detail::to_byte(img.at(x, y));
        png_write_row(png, rowbuf.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// --- binary PPM (P6) / PGM (P5) ---

inline void write_pnm(const std::string& path, const ColorImage& img) {
    require_color(img, "write_pnm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open image for writing: " + path);
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<uint8_t> rowbuf(static_cast<size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c)
                rowbuf[static_cast<size_t>(x) * 3 + c] = detail::to_byte(img[c].at(x, y));
        out.write(reinterpret_cast<const char*>(rowbuf.data()),
                  static_cast<std::streamsize>(rowbuf.size()));
    }
    if (!out) throw IoError("failed writing image: " + path);
}

inline void write_pnm(const std::string& path, const ImagePlane& img) {
    require_plane(img, "write_pnm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open image for writing: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> rowbuf(static_cast<size_t>(img.width));
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) rowbuf[static_cast<size_t>(x)] = detail::to_byte(img.at(x, y));
        out.write(reinterpret_cast<const char*>(rowbuf.data()),
                  static_cast<std::streamsize>(rowbuf.size()));
    }
    if (!out) throw IoError("failed writing image: " + path);
}

inline LoadedImage read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("pnm: unsupported format in " + path);
    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IoError("pnm: truncated header in " + path);
    };
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w < 1 || h < 1 || maxval != 255) throw IoError("pnm: unsupported header in " + path);
    in.get(); // single whitespace after maxval

    const bool gray = (magic == "P5");
    const size_t stride = static_cast<size_t>(w) * (gray ? 1 : 3);
    std::vector<uint8_t> rowbuf(stride);
    LoadedImage out;
    out.is_gray = gray;
    out.color = ColorImage(w, h);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(rowbuf.data()), static_cast<std::streamsize>(stride));
        if (!in) throw IoError("pnm: truncated pixel data in " + path);
        for (int x = 0; x < w; ++x) {
            if (gray) {
                const float v = static_cast<float>(rowbuf[static_cast<size_t>(x)]);
                out.color[0].at(x, y) = v;
                out.color[1].at(x, y) = v;
                out.color[2].at(x, y) = v;
            } else {
                for (int c = 0; c < 3; ++c)
                    out.color[c].at(x, y) = static_cast<float>(rowbuf[static_cast<size_t>(x) * 3 + c]);
            }
        }
    }
    return out;
}

/// Reads PNG or binary PPM/PGM, dispatching on the file suffix.
inline LoadedImage read_image(const std::string& path) {
    if (detail::has_suffix(path, ".png")) return read_png(path);
    if (detail::has_suffix(path, ".ppm") || detail::has_suffix(path, ".pgm")) return read_pnm(path);
    throw IoError("unsupported image format (expect .png/.ppm/.pgm): " + path);
}

inline void write_image(const std::string& path, const ColorImage& img) {
    if (detail::has_suffix(path, ".png")) return write_png(path, img);
    if (detail::has_suffix(path, ".ppm")) return write_pnm(path, img);
    throw IoError("unsupported image format (expect .png/.ppm): " + path);
}

inline void write_image(const std::string& path, const ImagePlane& img) {
    if (detail::has_suffix(path, ".png")) return write_png(path, img);
    if (detail::has_suffix(path, ".pgm")) return write_pnm(path, img);
    throw IoError("unsupported image format (expect .png/.pgm): " + path);
}

} // namespace agu
