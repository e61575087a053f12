#pragma once

#include <cctype>
#include <filesystem>

#include "agu/image_io.hpp"
#include "agu/train.hpp"

namespace agu {

/// Train-pair directory layout (LOL convention):
///   <dir>/low/NAME.png   low-light camera image (the guide)
///   <dir>/high/NAME.png  bright reference of the same scene
/// Files are matched by name; an optional <dir>/input/NAME.png supplies the
/// enhanced low-resolution input, otherwise it is generated from the guide
/// with the stub enhancer.
struct Dataset {
    std::vector<TrainPair> pairs;
    std::vector<std::string> names; // sorted, one per pair
};

namespace detail {

inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace detail

/// Loads a pair directory. Unmatched files on either side are an error and
/// the diagnostic lists them. uf fixes the input resolution (guide / uf) for
/// generated inputs; supplied inputs are validated against it.
inline Dataset load_pair_dir(const std::string& dir, double uf,
                             double enhancer_gain = 2.0, double enhancer_gamma = 1.6) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw InvalidInput("dataset: not a directory: " + dir);
    const auto lows = detail::list_images(root / "low");
    const auto highs = detail::list_images(root / "high");
    if (lows.empty() && highs.empty())
        throw InvalidInput("dataset: no image pairs found under " + dir +
                           " (expected low/*.png and high/*.png)");

    auto stem_set = [](const std::vector<fs::path>& files) {
        std::vector<std::string> s;
        for (const auto& f : files) s.push_back(f.stem().string());
        return s;
    };
    const auto low_names = stem_set(lows);
    const auto high_names = stem_set(highs);
    std::string unmatched;
    for (size_t i = 0; i < low_names.size(); ++i)
        if (std::find(high_names.begin(), high_names.end(), low_names[i]) == high_names.end())
            unmatched += " low/" + lows[i].filename().string();
    for (size_t i = 0; i < high_names.size(); ++i)
        if (std::find(low_names.begin(), low_names.end(), high_names[i]) == low_names.end())
            unmatched += " high/" + highs[i].filename().string();
    if (!unmatched.empty()) throw InvalidInput("dataset: unmatched files:" + unmatched);

    Dataset ds;
    for (size_t i = 0; i < lows.size(); ++i) {
        TrainPair p;
        p.guide_hr = read_image(lows[i].string()).color;
        p.target = read_image((root / "high" / highs[i].filename()).string()).color;
        const fs::path input_path = root / "input" / lows[i].filename();
        const int lw = std::max(1, static_cast<int>(std::lround(p.guide_hr.width() / uf)));
        const int lh = std::max(1, static_cast<int>(std::lround(p.guide_hr.height() / uf)));
        if (fs::exists(input_path)) {
            p.input_lr = read_image(input_path.string()).color;
        } else {
            const ColorImage guide_lr = (lw == p.guide_hr.width() && lh == p.guide_hr.height())
                                            ? p.guide_hr
                                            : downscale_guide(p.guide_hr, lw, lh);
            p.input_lr = stub_enhancer(guide_lr, enhancer_gain, enhancer_gamma);
        }
        p.validate();
        ds.pairs.push_back(std::move(p));
        ds.names.push_back(lows[i].stem().string());
    }
    return ds;
}

} // namespace agu
