// agu: train, apply, and benchmark Adaptive Guided Upsampling models.
//
// Subcommands: train | apply | compare | bench | synth | metrics
// Exit codes: 0 ok, 1 processing error, 2 usage error.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "agu/bench.hpp"
#include "agu/dataset.hpp"
#include "agu/image_io.hpp"
#include "agu/metrics.hpp"
#include "agu/train.hpp"

namespace fs = std::filesystem;

namespace {

std::string fmt_metric(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw agu::IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw agu::IoError("failed writing: " + path);
}

struct DisableFlags {
    bool tau = false;
    bool ecb = false;
};

DisableFlags parse_disable(const std::vector<std::string>& items) {
    DisableFlags f;
    for (const auto& s : items) {
        if (s == "tau") f.tau = true;
        else if (s == "ecb") f.ecb = true;
        else throw agu::InvalidInput("--disable expects 'tau' or 'ecb', got '" + s + "'");
    }
    return f;
}

agu::AguModel with_disabled(const agu::AguModel& model, const DisableFlags& f) {
    agu::AguModel m = model;
    if (f.tau) m.lut_tau = agu::zero_lut(m.n_classes);
    if (f.ecb) {
        m.lut_ecb_a = agu::zero_lut(m.n_classes);
        m.lut_ecb_b = agu::zero_lut(m.n_classes);
    }
    return m;
}

std::string report_csv(const agu::TrainReport& report) {
    std::ostringstream os;
    os << "stage,epoch,loss\n";
    for (const auto& s : report.stages)
        for (size_t i = 0; i < s.losses.size(); ++i)
            os << s.stage << "," << i << "," << std::setprecision(12) << s.losses[i] << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string pair_dir;
    std::string model_out;
    std::string report_out;
    agu::TrainConfig cfg;
    double enhancer_gain = 2.0;
    double enhancer_gamma = 1.6;
    std::vector<std::string> disable;
};

int cmd_train(const TrainArgs& a) {
    agu::TrainConfig cfg = a.cfg;
    cfg.enable_tau = !parse_disable(a.disable).tau;
    const agu::Dataset ds = agu::load_pair_dir(a.pair_dir, cfg.uf, a.enhancer_gain, a.enhancer_gamma);
    std::cout << "training on " << ds.pairs.size() << " pair(s) from " << a.pair_dir << "\n";
    const agu::TrainResult res = agu::train_full(ds.pairs, cfg);
    for (const auto& w : res.report.warnings) std::cerr << "warning: " << w << "\n";
    agu::save_model(res.model, a.model_out);
    std::cout << "model written to " << a.model_out << "\n";
    if (!a.report_out.empty()) {
        write_text_file(a.report_out, report_csv(res.report));
        std::cout << "report written to " << a.report_out << "\n";
    }
    for (const auto& s : res.report.stages)
        std::cout << "  stage " << s.stage << ": loss " << s.initial_loss() << " -> "
                  << s.final_loss() << " (" << s.losses.size() - 1 << " accepted epochs)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// apply
// ---------------------------------------------------------------------------

struct ApplyArgs {
    std::string guide_path;
    std::string input_path;
    std::string model_path;
    std::string out_path;
    std::string dump_classes_dir;
    double uf = 2.0;
    double enhancer_gain = 2.0;
    double enhancer_gamma = 1.6;
    std::vector<std::string> disable;
};

int cmd_apply(const ApplyArgs& a) {
    const agu::AguModel model = with_disabled(agu::load_model(a.model_path), parse_disable(a.disable));
    const agu::ColorImage guide = agu::read_image(a.guide_path).color;

    agu::ColorImage input;
    double uf = a.uf;
    if (!a.input_path.empty()) {
        input = agu::read_image(a.input_path).color;
        uf = 0.5 * (static_cast<double>(guide.width()) / input.width() +
                    static_cast<double>(guide.height()) / input.height());
    } else {
        // Fig.-1 path: resize the camera frame down, then brighten it.
        const int lw = std::max(1, static_cast<int>(std::lround(guide.width() / uf)));
        const int lh = std::max(1, static_cast<int>(std::lround(guide.height() / uf)));
        const agu::ColorImage guide_lr = (lw == guide.width() && lh == guide.height())
                                             ? guide
                                             : agu::downscale_guide(guide, lw, lh);
        input = agu::stub_enhancer(guide_lr, a.enhancer_gain, a.enhancer_gamma);
    }

    const agu::ColorImage out = agu::agu_apply(guide, input, model, uf);
    agu::write_image(a.out_path, out);

    if (!a.dump_classes_dir.empty()) {
        fs::create_directories(a.dump_classes_dir);
        const agu::ClassMap edge =
            agu::edge_classes(agu::rgb_to_gray(guide), model.kernel_cfg, model.class_cfg());
        const int lw = input.width(), lh = input.height();
        const agu::ColorImage guide_lr = (lw == guide.width() && lh == guide.height())
                                             ? guide
                                             : agu::downscale_guide(guide, lw, lh);
        const agu::ClassMap bright =
            agu::brightness_classes_prefiltered(input[1], guide_lr[1], model.class_cfg());
        agu::write_image((fs::path(a.dump_classes_dir) / "edge_classes.png").string(),
                         agu::class_map_false_color(edge));
        agu::write_image((fs::path(a.dump_classes_dir) / "brightness_classes.png").string(),
                         agu::class_map_false_color(bright));
    }

    // PSNR/SSIM between I and O (output brought back to the input resolution)
    const agu::ColorImage out_back =
        (out.width() == input.width() && out.height() == input.height())
            ? out
            : agu::bilinear_resize(out, input.width(), input.height());
    const agu::KernelConfig kcfg = model.kernel_cfg;
    std::cout << "image,sharpness,noise,psnr,ssim\n";
    std::cout << "input," << fmt_metric(agu::sharpness(input, kcfg)) << ","
              << fmt_metric(agu::noise_estimate(input)) << ",n/a,n/a\n";
    std::cout << "output," << fmt_metric(agu::sharpness(out, kcfg)) << ","
              << fmt_metric(agu::noise_estimate(out)) << ","
              << fmt_metric(agu::psnr(out_back, input)) << ","
              << fmt_metric(agu::ssim(out_back, input)) << "\n";
    std::cout << "output written to " << a.out_path << " (" << out.width() << "x" << out.height()
              << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string pair_dir;
    std::string out_csv;
    std::string model_path;
    std::vector<std::string> methods;
    bool same_res = false;
    double uf = 2.0;
    agu::TrainConfig cfg;
    double enhancer_gain = 2.0;
    double enhancer_gamma = 1.6;
    double bf_eps = 64.0; // uniform eps of the FGF baseline
    int fgf_subsample = 2;
    std::vector<std::string> disable;
};

int cmd_compare(const CompareArgs& a) {
    if (a.methods.empty()) throw agu::InvalidInput("compare: methods list is empty");
    static const std::vector<std::string> kKnown = {"agu", "agf", "fgf", "bf", "bilinear"};
    for (const auto& m : a.methods)
        if (std::find(kKnown.begin(), kKnown.end(), m) == kKnown.end())
            throw agu::InvalidInput("compare: unknown method '" + m +
                                    "' (valid: agu agf fgf bf bilinear)");
    const DisableFlags disable = parse_disable(a.disable);

    agu::TrainConfig cfg = a.cfg;
    cfg.uf = a.same_res ? 1.0 : a.uf;
    const agu::Dataset ds = agu::load_pair_dir(a.pair_dir, a.same_res ? a.uf : cfg.uf,
                                               a.enhancer_gain, a.enhancer_gamma);

    const bool needs_model =
        std::find(a.methods.begin(), a.methods.end(), "agu") != a.methods.end() ||
        std::find(a.methods.begin(), a.methods.end(), "agf") != a.methods.end();
    agu::AguModel model = agu::AguModel::zeros(cfg.n_classes, cfg.radius, cfg.lambda,
                                               cfg.kernel_cfg, cfg.clamp_log);
    if (needs_model) {
        if (!a.model_path.empty()) {
            model = agu::load_model(a.model_path);
        } else {
            agu::TrainConfig tcfg = cfg;
            tcfg.enable_tau = !disable.tau;
            tcfg.uf = a.uf; // ecb trains at the comparison factor even for --same-res
            std::cerr << "compare: training model on " << ds.pairs.size() << " pair(s)\n";
            model = agu::train_full(ds.pairs, tcfg).model;
        }
        model = with_disabled(model, disable);
    }

    struct Row {
        double sharp = 0.0, noise = 0.0, psnr = 0.0, ssim = 0.0;
        int64_t n = 0;
    };
    std::map<std::string, Row> rows;
    const agu::KernelConfig kcfg = cfg.kernel_cfg;

    for (const agu::TrainPair& p : ds.pairs) {
        const int lw = p.input_lr.width(), lh = p.input_lr.height();
        const agu::ColorImage guide_lr = (lw == p.guide_hr.width() && lh == p.guide_hr.height())
                                             ? p.guide_hr
                                             : agu::downscale_guide(p.guide_hr, lw, lh);
        const int ow = a.same_res ? lw : p.guide_hr.width();
        const int oh = a.same_res ? lh : p.guide_hr.height();

        // PSNR/SSIM follow the convention "between I and O": the output is
        // brought back to the input resolution and compared against the
        // enhanced input (smaller PSNR = the method changed the image more)
        auto add = [&](const std::string& name, const agu::ColorImage& img) {
            Row& r = rows[name];
            r.sharp += agu::sharpness(img, kcfg);
            r.noise += agu::noise_estimate(img);
            const agu::ColorImage back = (img.width() == lw && img.height() == lh)
                                             ? img
                                             : agu::bilinear_resize(img, lw, lh);
            r.psnr += agu::psnr(back, p.input_lr);
            r.ssim += agu::ssim(back, p.input_lr);
            r.n++;
        };

        add("input", p.input_lr);
        for (const auto& m : a.methods) {
            if (m == "bilinear") {
                add(m, agu::bilinear_resize(p.input_lr, ow, oh));
            } else if (m == "bf") {
                agu::ColorImage out;
                for (int c = 0; c < 3; ++c) out[c] = agu::bilateral_filter(p.input_lr[c], kcfg);
                if (ow != lw || oh != lh) out = agu::bilinear_resize(out, ow, oh);
                add(m, out);
            } else if (m == "fgf") {
                agu::ColorImage out =
                    agu::fgf_apply(p.input_lr, guide_lr, cfg.radius, a.bf_eps, a.fgf_subsample);
                if (ow != lw || oh != lh) out = agu::bilinear_resize(out, ow, oh);
                add(m, out);
            } else if (m == "agf") {
                agu::ColorImage out = agu::agf_apply(p.input_lr, guide_lr, model);
                if (ow != lw || oh != lh) out = agu::bilinear_resize(out, ow, oh);
                add(m, out);
            } else { // agu
                if (a.same_res) {
                    add(m, agu::agu_apply_same_res(guide_lr, p.input_lr, model));
                } else {
                    add(m, agu::agu_apply(p.guide_hr, p.input_lr, model, a.uf));
                }
            }
        }
    }

    std::ostringstream csv;
    csv << "method,sharpness,noise,psnr,ssim\n";
    auto emit = [&](const std::string& name) {
        const Row& r = rows.at(name);
        const double n = static_cast<double>(r.n);
        csv << name << "," << fmt_metric(r.sharp / n) << "," << fmt_metric(r.noise / n) << ","
            << fmt_metric(r.psnr / n) << "," << fmt_metric(r.ssim / n) << "\n";
    };
    emit("input");
    for (const auto& m : a.methods)
        if (rows.count(m)) emit(m);

    if (a.out_csv.empty()) {
        std::cout << csv.str();
    } else {
        write_text_file(a.out_csv, csv.str());
        std::cout << csv.str();
        std::cout << "table written to " << a.out_csv << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string guide_path;
    std::string model_path;
    std::string out_csv;
    std::vector<double> uf_list = {1.5, 2.0, 3.0, 4.0};
    int reps = 15;
};

int cmd_bench(const BenchArgs& a) {
    if (a.reps < 10) throw agu::InvalidInput("bench: reps must be >= 10");
    const agu::ColorImage base = agu::read_image(a.guide_path).color;
    const agu::AguModel model =
        a.model_path.empty() ? agu::AguModel::zeros() : agu::load_model(a.model_path);
    const auto points = agu::run_bench(base, model, a.uf_list, a.reps);

    std::ostringstream csv;
    csv << "uf,out_width,out_height,mean_ms,median_ms,stddev_ms\n";
    for (const auto& p : points)
        csv << p.uf << "," << p.out_width << "," << p.out_height << "," << fmt_metric(p.mean_ms)
            << "," << fmt_metric(p.median_ms) << "," << fmt_metric(p.stddev_ms) << "\n";
    if (points.size() >= 2) {
        const agu::QuadraticFit fit = agu::fit_runtime_model(points);
        csv << "# fit: t(uf) = " << fit.c1 << " * uf^2 + " << fit.c2 << "  (R^2 = "
            << fit.r_squared << ", max rel err = " << fit.max_rel_error << ")\n";
    }
    std::cout << csv.str();
    if (!a.out_csv.empty()) {
        write_text_file(a.out_csv, csv.str());
        std::cout << "timings written to " << a.out_csv << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string bright_dir;
    std::string out_dir;
    double noise_sigma = 6.0;
    double gain = 3.0;
    double gamma = 2.2;
    uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
    const auto files = agu::detail::list_images(a.bright_dir);
    if (files.empty())
        throw agu::InvalidInput("synth: no images found in " + a.bright_dir);
    fs::create_directories(fs::path(a.out_dir) / "low");
    fs::create_directories(fs::path(a.out_dir) / "high");
    agu::SynthParams sp;
    sp.darken_gain = a.gain;
    sp.darken_gamma = a.gamma;
    sp.noise_sigma = a.noise_sigma;
    for (size_t i = 0; i < files.size(); ++i) {
        const agu::ColorImage bright = agu::read_image(files[i].string()).color;
        agu::Rng rng(a.seed + i);
        const agu::ColorImage low = agu::synth_darken(bright, sp, rng);
        const std::string name = files[i].stem().string() + ".png";
        agu::write_image((fs::path(a.out_dir) / "high" / name).string(), bright);
        agu::write_image((fs::path(a.out_dir) / "low" / name).string(), low);
    }
    std::cout << "wrote " << files.size() << " pair(s) to " << a.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricsArgs {
    std::string image_path;
    std::string ref_path;
    std::string out_csv;
};

int cmd_metrics(const MetricsArgs& a) {
    const agu::ColorImage img = agu::read_image(a.image_path).color;
    const agu::KernelConfig kcfg;
    std::ostringstream csv;
    csv << "image,sharpness,noise,psnr,ssim\n";
    if (!a.ref_path.empty()) {
        const agu::ColorImage ref = agu::read_image(a.ref_path).color;
        const agu::MetricsReport r = agu::compute_metrics(img, ref, kcfg);
        csv << a.image_path << "," << fmt_metric(r.sharpness) << "," << fmt_metric(r.noise) << ","
            << fmt_metric(r.psnr) << "," << fmt_metric(r.ssim) << "\n";
    } else {
        csv << a.image_path << "," << fmt_metric(agu::sharpness(img, kcfg)) << ","
            << fmt_metric(agu::noise_estimate(img)) << ",n/a,n/a\n";
    }
    std::cout << csv.str();
    if (!a.out_csv.empty()) write_text_file(a.out_csv, csv.str());
    return 0;
}

void add_train_options(CLI::App* app, agu::TrainConfig& cfg) {
    app->add_option("--seed", cfg.seed, "deterministic seed");
    app->add_option("--lr", cfg.learning_rate, "gradient-descent learning rate");
    app->add_option("--epochs", cfg.max_epochs, "max epochs per stage");
    app->add_option("--tol", cfg.tol, "relative improvement stop threshold");
    app->add_option("--ecb-step", cfg.ecb_step, "ecb search step size");
    app->add_option("--ecb-iters", cfg.ecb_max_iters, "max ecb sweeps");
    app->add_option("--radius", cfg.radius, "guided-filter window radius");
    app->add_option("--lambda", cfg.lambda, "regularizer weight");
    app->add_option("--classes", cfg.n_classes, "number of LUT classes (odd)");
    app->add_option("--log-sigma", cfg.kernel_cfg.log_sigma, "LoG sigma");
    app->add_option("--log-size", cfg.kernel_cfg.log_size, "LoG kernel size (odd)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive Guided Upsampling: joint denoising, sharpening and upsampling of "
                 "low-light images"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train a model from a pair directory");
    train->add_option("--pairs", train_args.pair_dir, "directory with low/ and high/ images")
        ->required();
    train->add_option("--out", train_args.model_out, "output model JSON")->required();
    train->add_option("--report", train_args.report_out, "per-stage loss CSV");
    train->add_option("--uf", train_args.cfg.uf, "upsampling factor")->check(CLI::Range(1.0, 4.0));
    add_train_options(train, train_args.cfg);
    train->add_option("--enhancer-gain", train_args.enhancer_gain, "stub enhancer gain");
    train->add_option("--enhancer-gamma", train_args.enhancer_gamma, "stub enhancer gamma");
    train->add_option("--disable", train_args.disable, "skip a training stage (tau)");

    ApplyArgs apply_args;
    auto* apply = app.add_subcommand("apply", "enhance and upsample one image");
    apply->add_option("--guide", apply_args.guide_path, "high-res low-light guide image")
        ->required();
    apply->add_option("--input", apply_args.input_path,
                      "low-res enhanced input (generated from the guide when omitted)");
    apply->add_option("--model", apply_args.model_path, "model JSON")->required();
    apply->add_option("--out", apply_args.out_path, "output image path")->required();
    apply->add_option("--uf", apply_args.uf, "upsampling factor")->check(CLI::Range(1.0, 4.0));
    apply->add_option("--enhancer-gain", apply_args.enhancer_gain, "stub enhancer gain");
    apply->add_option("--enhancer-gamma", apply_args.enhancer_gamma, "stub enhancer gamma");
    apply->add_option("--disable", apply_args.disable, "zero a correction at apply time (tau|ecb)");
    apply->add_option("--dump-classes", apply_args.dump_classes_dir,
                      "write false-color class maps to this directory");

    CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "per-method metrics table over a pair directory");
    cmp->add_option("--pairs", cmp_args.pair_dir, "directory with low/ and high/ images")
        ->required();
    cmp->add_option("--methods", cmp_args.methods, "methods: agu agf fgf bf bilinear")
        ->required()
        ->delimiter(',');
    cmp->add_option("--out", cmp_args.out_csv, "output CSV path");
    cmp->add_option("--model", cmp_args.model_path, "model JSON (trained in place when omitted)");
    cmp->add_flag("--same-res", cmp_args.same_res, "same-resolution comparison");
    add_train_options(cmp, cmp_args.cfg);
    cmp->add_option("--uf", cmp_args.uf, "upsampling factor")->check(CLI::Range(1.0, 4.0));
    cmp->add_option("--enhancer-gain", cmp_args.enhancer_gain, "stub enhancer gain");
    cmp->add_option("--enhancer-gamma", cmp_args.enhancer_gamma, "stub enhancer gamma");
    cmp->add_option("--fgf-eps", cmp_args.bf_eps, "uniform eps of the FGF baseline");
    cmp->add_option("--fgf-subsample", cmp_args.fgf_subsample, "FGF subsampling factor");
    cmp->add_option("--disable", cmp_args.disable, "ablation: tau (retrain without) or ecb (zero)");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "runtime benchmark across upsampling factors");
    bench->add_option("--guide", bench_args.guide_path, "base-resolution image")->required();
    bench->add_option("--model", bench_args.model_path, "model JSON (zero model when omitted)");
    bench->add_option("--uf-list", bench_args.uf_list, "factors to time")->delimiter(',');
    bench->add_option("--reps", bench_args.reps, "repetitions per factor (>= 10)");
    bench->add_option("--out", bench_args.out_csv, "output CSV path");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic low/high pair corpus");
    synth->add_option("--bright", synth_args.bright_dir, "directory of bright images")->required();
    synth->add_option("--out", synth_args.out_dir, "output pair directory")->required();
    synth->add_option("--noise-sigma", synth_args.noise_sigma, "Gaussian noise sigma");
    synth->add_option("--gain", synth_args.gain, "darkening gain");
    synth->add_option("--gamma", synth_args.gamma, "darkening gamma");
    synth->add_option("--seed", synth_args.seed, "deterministic seed");

    MetricsArgs metrics_args;
    auto* metrics = app.add_subcommand("metrics", "print metrics for an image");
    metrics->add_option("--image", metrics_args.image_path, "image to measure")->required();
    metrics->add_option("--ref", metrics_args.ref_path, "reference image for PSNR/SSIM");
    metrics->add_option("--out", metrics_args.out_csv, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(train_args);
        if (apply->parsed()) return cmd_apply(apply_args);
        if (cmp->parsed()) return cmd_compare(cmp_args);
        if (bench->parsed()) return cmd_bench(bench_args);
        if (synth->parsed()) return cmd_synth(synth_args);
        if (metrics->parsed()) return cmd_metrics(metrics_args);
    } catch (const agu::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const agu::InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
