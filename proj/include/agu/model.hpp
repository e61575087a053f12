#pragma once

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "agu/classify.hpp"

namespace agu {

/// Class-indexed table of scalar corrections.
using Lut = std::vector<double>;

inline Lut zero_lut(int n_classes) { return Lut(static_cast<size_t>(n_classes), 0.0); }

constexpr const char* kModelFormatVersion = "agu-model/1";

/// The trained artifact: four class-indexed correction tables (the ecb
/// correction is split per coefficient, giving five arrays) plus the filter
/// configuration they were trained under. Serialized as human-diffable JSON.
struct AguModel {
    std::string version = kModelFormatVersion;
    int n_classes = 121;
    int radius = 2;
    double lambda = 0.01;
    double clamp_log = 128.0;
    KernelConfig kernel_cfg{};

    Lut lut_sigma;  // optimal smoothing variance per edge class
    Lut lut_xi;     // sharpening offset per edge class
    Lut lut_tau;    // brightness correction per brightness class
    Lut lut_ecb_a;  // coefficient-upsampling correction per edge class (A)
    Lut lut_ecb_b;  // coefficient-upsampling correction per edge class (B)

    /// Training settings recorded for reproducibility.
    std::map<std::string, double> provenance;

    static AguModel zeros(int n_classes = 121, int radius = 2, double lambda = 0.01,
                          const KernelConfig& kcfg = KernelConfig{}, double clamp_log = 128.0) {
        AguModel m;
        m.n_classes = n_classes;
        m.radius = radius;
        m.lambda = lambda;
        m.clamp_log = clamp_log;
        m.kernel_cfg = kcfg;
        m.lut_sigma = zero_lut(n_classes);
        m.lut_xi = zero_lut(n_classes);
        m.lut_tau = zero_lut(n_classes);
        m.lut_ecb_a = zero_lut(n_classes);
        m.lut_ecb_b = zero_lut(n_classes);
        m.validate();
        return m;
    }

    ClassConfig class_cfg() const { return ClassConfig{n_classes, clamp_log}; }

    void validate() const {
        if (n_classes < 3 || n_classes % 2 == 0)
            throw InvalidModel("model: n_classes must be odd and >= 3");
        if (radius < 1) throw InvalidModel("model: radius must be >= 1");
        if (lambda < 0.0) throw InvalidModel("model: lambda must be >= 0");
        if (!(clamp_log > 0.0)) throw InvalidModel("model: clamp_log must be > 0");
        kernel_cfg.validate();
        auto check = [&](const Lut& lut, const char* name, bool nonneg) {
            if (static_cast<int>(lut.size()) != n_classes)
                throw InvalidModel(std::string("model: ") + name + " must have n_classes entries");
            for (const double v : lut) {
                if (!std::isfinite(v)) throw InvalidModel(std::string("model: ") + name + " has non-finite entry");
                if (nonneg && v < 0.0)
                    throw InvalidModel(std::string("model: ") + name + " entries must be >= 0");
            }
        };
        check(lut_sigma, "lut_sigma", true);
        check(lut_xi, "lut_xi", false);
        check(lut_tau, "lut_tau", false);
        check(lut_ecb_a, "lut_ecb_a", false);
        check(lut_ecb_b, "lut_ecb_b", false);
    }

    bool operator==(const AguModel& o) const {
        return version == o.version && n_classes == o.n_classes && radius == o.radius &&
               lambda == o.lambda && clamp_log == o.clamp_log &&
               kernel_cfg.radius == o.kernel_cfg.radius &&
               kernel_cfg.log_sigma == o.kernel_cfg.log_sigma &&
               kernel_cfg.log_size == o.kernel_cfg.log_size &&
               kernel_cfg.bilateral_sigma_spatial == o.kernel_cfg.bilateral_sigma_spatial &&
               kernel_cfg.bilateral_sigma_range == o.kernel_cfg.bilateral_sigma_range &&
               lut_sigma == o.lut_sigma && lut_xi == o.lut_xi && lut_tau == o.lut_tau &&
               lut_ecb_a == o.lut_ecb_a && lut_ecb_b == o.lut_ecb_b && provenance == o.provenance;
    }
};

inline nlohmann::ordered_json model_to_json(const AguModel& m) {
    m.validate();
    nlohmann::ordered_json j;
    j["version"] = m.version;
    j["n_classes"] = m.n_classes;
    j["radius"] = m.radius;
    j["lambda"] = m.lambda;
    j["clamp_log"] = m.clamp_log;
    j["kernel_cfg"] = {{"radius", m.kernel_cfg.radius},
                       {"log_sigma", m.kernel_cfg.log_sigma},
                       {"log_size", m.kernel_cfg.log_size},
                       {"bilateral_sigma_spatial", m.kernel_cfg.bilateral_sigma_spatial},
                       {"bilateral_sigma_range", m.kernel_cfg.bilateral_sigma_range}};
    j["lut_sigma"] = m.lut_sigma;
    j["lut_xi"] = m.lut_xi;
    j["lut_tau"] = m.lut_tau;
    j["lut_ecb_a"] = m.lut_ecb_a;
    j["lut_ecb_b"] = m.lut_ecb_b;
    if (!m.provenance.empty()) j["provenance"] = m.provenance;
    return j;
}

inline AguModel model_from_json(const nlohmann::json& j) {
    AguModel m;
    try {
        m.version = j.at("version").get<std::string>();
        m.n_classes = j.at("n_classes").get<int>();
        m.radius = j.at("radius").get<int>();
        m.lambda = j.at("lambda").get<double>();
        m.clamp_log = j.value("clamp_log", 128.0);
        const auto& k = j.at("kernel_cfg");
        m.kernel_cfg.radius = k.at("radius").get<int>();
        m.kernel_cfg.log_sigma = k.at("log_sigma").get<double>();
        m.kernel_cfg.log_size = k.at("log_size").get<int>();
        m.kernel_cfg.bilateral_sigma_spatial = k.at("bilateral_sigma_spatial").get<double>();
        m.kernel_cfg.bilateral_sigma_range = k.at("bilateral_sigma_range").get<double>();
        m.lut_sigma = j.at("lut_sigma").get<Lut>();
        m.lut_xi = j.at("lut_xi").get<Lut>();
        m.lut_tau = j.at("lut_tau").get<Lut>();
        m.lut_ecb_a = j.at("lut_ecb_a").get<Lut>();
        m.lut_ecb_b = j.at("lut_ecb_b").get<Lut>();
        if (j.contains("provenance"))
            m.provenance = j.at("provenance").get<std::map<std::string, double>>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidModel(std::string("model: malformed JSON: ") + e.what());
    }
    if (m.version != kModelFormatVersion)
        throw InvalidModel("model: unsupported format version '" + m.version + "'");
    m.validate();
    return m;
}

inline std::string model_to_string(const AguModel& m) { return model_to_json(m).dump(2) + "\n"; }

inline void save_model(const AguModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing: " + path);
    out << model_to_string(m);
    if (!out) throw IoError("failed writing model file: " + path);
}

inline AguModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidModel(std::string("model: parse error in ") + path + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace agu
