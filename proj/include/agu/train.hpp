#pragma once

#include "agu/agu.hpp"
#include "agu/metrics.hpp"

namespace agu {

/// One training sample: low-light camera image (the guide), bright reference
/// at the same resolution, and the enhanced low-resolution input.
struct TrainPair {
    ColorImage guide_hr;
    ColorImage target;
    ColorImage input_lr;

    void validate() const {
        require_color(guide_hr, "TrainPair");
        require_color(target, "TrainPair");
        require_color(input_lr, "TrainPair");
        if (guide_hr.width() != target.width() || guide_hr.height() != target.height())
            throw InvalidInput("TrainPair: guide and target dims must match");
        if (input_lr.width() > guide_hr.width() || input_lr.height() > guide_hr.height())
            throw InvalidInput("TrainPair: input must not exceed guide resolution");
    }
};

/// Optimizer settings plus the filter configuration of the model being
/// trained. The hyperparameters (rate, epochs, step sizes) are recorded in
/// the trained model's provenance block.
struct TrainConfig {
    double learning_rate = 0.1;
    int max_epochs = 200;
    double tol = 1e-5;     // relative loss-improvement stop threshold
    double ecb_step = 0.05;
    int ecb_max_iters = 100;
    double uf = 2.0;
    uint64_t seed = 0;

    int n_classes = 121;
    double clamp_log = 128.0;
    int radius = 2;
    double lambda = 0.01;
    KernelConfig kernel_cfg{};

    bool enable_tau = true; // ablation switch: skip the tau stage entirely

    /// Sharpness reference for the ecb stage: the bright target (default) or
    /// the literal low-light guide.
    enum class EcbReference { BrightTarget, Guide };
    EcbReference ecb_reference = EcbReference::BrightTarget;

    ClassConfig class_cfg() const { return ClassConfig{n_classes, clamp_log}; }

    void validate() const {
        if (!(learning_rate > 0.0)) throw InvalidConfig("TrainConfig: learning_rate must be > 0");
        if (max_epochs < 1) throw InvalidConfig("TrainConfig: max_epochs must be >= 1");
        if (tol < 0.0) throw InvalidConfig("TrainConfig: tol must be >= 0");
        if (!(ecb_step > 0.0)) throw InvalidConfig("TrainConfig: ecb_step must be > 0");
        if (ecb_max_iters < 1) throw InvalidConfig("TrainConfig: ecb_max_iters must be >= 1");
        if (!(uf >= 1.0)) throw InvalidConfig("TrainConfig: uf must be >= 1");
        if (lambda < 0.0) throw InvalidConfig("TrainConfig: lambda must be >= 0");
        if (radius < 1) throw InvalidConfig("TrainConfig: radius must be >= 1");
        class_cfg().validate();
        kernel_cfg.validate();
    }
};

struct StageTrace {
    std::string stage;
    std::vector<double> losses; // loss before training plus one entry per accepted epoch
    double initial_loss() const { return losses.empty() ? 0.0 : losses.front(); }
    double final_loss() const { return losses.empty() ? 0.0 : losses.back(); }
};

struct TrainReport {
    std::vector<StageTrace> stages;
    std::vector<int64_t> edge_class_support;       // low-res pixels per edge class
    std::vector<int64_t> brightness_class_support; // low-res pixels per brightness class (x3 channels)
    std::vector<double> ecb_j_initial;             // per-class |LoG gap| before the ecb stage
    std::vector<double> ecb_j_final;
    double ecb_j_slack = 0.0; // cross-class degradation bound of the ecb search
    std::vector<std::string> warnings;

    const StageTrace* find(const std::string& name) const {
        for (const auto& s : stages)
            if (s.stage == name) return &s;
        return nullptr;
    }
};

namespace detail_train {

struct ChannelCache {
    ImagePlane guide;  // low-res guide channel
    ImagePlane target; // low-res target channel
    AbStats stats;     // window statistics of (guide, input)
    ImagePlane xi_lo;  // window_min(guide) - guide
    ImagePlane xi_hi;  // window_max(guide) - guide
    ClassMap cb;       // brightness classes of (input, guide)
};

struct PairCache {
    std::array<ChannelCache, 3> ch;
    ClassMap classes_lr;
};

struct Corpus {
    std::vector<PairCache> pairs;
    std::vector<int64_t> edge_support;   // per edge class, one count per low-res pixel
    std::vector<int64_t> bright_support; // per brightness class, over the three channels
    int n_classes = 0;
};

inline Corpus build_corpus(const std::vector<TrainPair>& pairs, const TrainConfig& cfg) {
    if (pairs.empty()) throw InvalidInput("training: pair list is empty");
    cfg.validate();
    Corpus corpus;
    corpus.n_classes = cfg.n_classes;
    corpus.edge_support.assign(static_cast<size_t>(cfg.n_classes), 0);
    corpus.bright_support.assign(static_cast<size_t>(cfg.n_classes), 0);
    const ClassConfig ccfg = cfg.class_cfg();
    for (const TrainPair& p : pairs) {
        p.validate();
        PairCache pc;
        const int lw = p.input_lr.width(), lh = p.input_lr.height();
        const bool same = (lw == p.guide_hr.width() && lh == p.guide_hr.height());
        const ColorImage guide_lr = same ? p.guide_hr : downscale_guide(p.guide_hr, lw, lh);
        const ColorImage target_lr = same ? p.target : downscale_guide(p.target, lw, lh);
        pc.classes_lr = edge_classes(rgb_to_gray(guide_lr), cfg.kernel_cfg, ccfg);
        for (const int32_t c : pc.classes_lr.labels) corpus.edge_support[static_cast<size_t>(c)]++;
        for (int c = 0; c < 3; ++c) {
            ChannelCache& ch = pc.ch[static_cast<size_t>(c)];
            ch.guide = guide_lr[c];
            ch.target = target_lr[c];
            ch.stats = compute_ab_stats(p.input_lr[c], guide_lr[c], cfg.radius);
            ImagePlane wmin, wmax;
            window_min_max(guide_lr[c], cfg.radius, wmin, wmax);
            ch.xi_lo = ImagePlane(lw, lh);
            ch.xi_hi = ImagePlane(lw, lh);
            for (size_t i = 0; i < ch.guide.size(); ++i) {
                ch.xi_lo.data[i] = static_cast<float>(wmin.data[i] - static_cast<double>(ch.guide.data[i]));
                ch.xi_hi.data[i] = static_cast<float>(wmax.data[i] - static_cast<double>(ch.guide.data[i]));
            }
            ch.cb = brightness_classes_prefiltered(p.input_lr[c], guide_lr[c], ccfg);
            for (const int32_t b : ch.cb.labels) corpus.bright_support[static_cast<size_t>(b)]++;
        }
        corpus.pairs.push_back(std::move(pc));
    }
    return corpus;
}

/// Intermediate fields of one forward evaluation (training form, no final
/// output clamp; the windowed xi clamp is applied).
struct Forward {
    ImagePlane eps;    // per-pixel regularizer
    ImagePlane a_raw;  // pre-smoothing coefficients
    ImagePlane a_m;    // smoothed coefficients
    ImagePlane b_m;
    ImagePlane f;      // guide + xi'
    ImagePlane resid;  // output - target
    std::vector<uint8_t> xi_active; // 1 where the xi clamp did not bind
    double loss = 0.0;
};

// The brightness correction is applied outside the linear term,
// O = A * (G + xi') + B + tau: an additive tau survives the A -> 0 smoothing
// limit, so flat regions can be denoised without losing the brightness
// alignment (with tau under A, smoothing silently cancels the correction).
inline Forward forward_channel(const ChannelCache& ch, const ClassMap& classes_lr,
                               const std::vector<double>& eps_by_class, const Lut& tau,
                               const Lut& xi, int radius) {
    const int w = ch.guide.width, h = ch.guide.height;
    Forward f;
    f.eps = ImagePlane(w, h);
    f.f = ImagePlane(w, h);
    f.xi_active.assign(ch.guide.size(), 1);
    for (size_t i = 0; i < ch.guide.size(); ++i) {
        f.eps.data[i] = static_cast<float>(eps_by_class[static_cast<size_t>(classes_lr.labels[i])]);
        const double x_raw = xi[static_cast<size_t>(classes_lr.labels[i])];
        const double lo = ch.xi_lo.data[i], hi = ch.xi_hi.data[i];
        const double x_c = std::clamp(x_raw, lo, hi);
        if (x_c != x_raw) f.xi_active[i] = 0;
        f.f.data[i] = static_cast<float>(ch.guide.data[i] + x_c);
    }
    f.a_raw = ImagePlane(w, h);
    ImagePlane b_raw(w, h);
    for (size_t i = 0; i < ch.guide.size(); ++i) {
        const double a = ch.stats.cov_gi.data[i] /
                         (static_cast<double>(ch.stats.var_g.data[i]) + f.eps.data[i] + kVarianceFloor);
        f.a_raw.data[i] = static_cast<float>(a);
        b_raw.data[i] = static_cast<float>(ch.stats.mean_i.data[i] -
                                           a * static_cast<double>(ch.stats.mean_g.data[i]));
    }
    f.a_m = box_mean(f.a_raw, radius);
    f.b_m = box_mean(b_raw, radius);
    f.resid = ImagePlane(w, h);
    // Outer training objective: the squared reconstruction error against the
    // reference. The eps * A^2 penalty stays inside the ridge closed form
    // that defines A and B; carrying it into the outer objective biases the
    // smoothing stage toward zero whenever A is large, which is exactly the
    // brightness-amplifying low-light case.
    double sq = 0.0;
    for (size_t i = 0; i < ch.guide.size(); ++i) {
        const double t = tau[static_cast<size_t>(ch.cb.labels[i])];
        const double o = static_cast<double>(f.a_m.data[i]) * f.f.data[i] + f.b_m.data[i] + t;
        const double r = o - ch.target.data[i];
        f.resid.data[i] = static_cast<float>(r);
        sq += r * r;
    }
    f.loss = sq;
    return f;
}

inline double corpus_loss(const Corpus& corpus, const std::vector<double>& eps_by_class,
                          const Lut& tau, const Lut& xi, int radius) {
    double loss = 0.0;
    for (const PairCache& pc : corpus.pairs)
        for (const ChannelCache& ch : pc.ch)
            loss += forward_channel(ch, pc.classes_lr, eps_by_class, tau, xi, radius).loss;
    return loss;
}

/// Gradient descent with halving backtracking; the loss trace is monotone by
/// construction. The step starts at the configured learning rate and grows
/// when full steps keep being accepted: the smoothing stage's gradient has a
/// vanishing tail in eps, and a fixed rate alone stalls far from the
/// optimum. `grad` must fill the per-class mean gradient at the supplied
/// iterate; `project` clamps the trial (may be a no-op).
template <typename LossFn, typename GradFn, typename ProjectFn>
inline StageTrace descend(std::vector<double>& params, const char* stage_name, LossFn&& eval,
                          GradFn&& grad, ProjectFn&& project, const TrainConfig& cfg) {
    StageTrace trace;
    trace.stage = stage_name;
    double loss = eval(params);
    trace.losses.push_back(loss);
    std::vector<double> g(params.size(), 0.0), trial(params.size(), 0.0);
    double scale = 1.0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        grad(params, g);
        double gmax = 0.0;
        for (const double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax == 0.0) break;
        double step = cfg.learning_rate * scale;
        bool accepted = false;
        int halvings = 0;
        double trial_loss = loss;
        for (; halvings < 60; ++halvings) {
            for (size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - step * g[i];
            project(trial);
            trial_loss = eval(trial);
            if (trial_loss <= loss) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        scale = std::clamp(halvings == 0 ? scale * 2.0 : scale * std::ldexp(1.0, -halvings), 1.0,
                           1048576.0);
        params = trial;
        const double prev = loss;
        loss = trial_loss;
        trace.losses.push_back(loss);
        if (prev - loss <= cfg.tol * std::max(prev, 1e-12)) break;
    }
    return trace;
}

inline std::vector<double> eps_from_sigma(const Lut& sigma, double lambda) {
    std::vector<double> eps(sigma.size());
    for (size_t i = 0; i < sigma.size(); ++i) eps[i] = lambda * sigma[i] * sigma[i];
    return eps;
}

inline Lut train_tau_stage(const Corpus& corpus, const TrainConfig& cfg, StageTrace& trace) {
    const std::vector<double> eps0(static_cast<size_t>(corpus.n_classes), 0.0);
    const Lut xi0 = zero_lut(corpus.n_classes);
    Lut tau = zero_lut(corpus.n_classes);
    auto eval = [&](const std::vector<double>& t) {
        return corpus_loss(corpus, eps0, t, xi0, cfg.radius);
    };
    auto grad = [&](const std::vector<double>& t, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        std::vector<int64_t> count(g.size(), 0);
        for (const PairCache& pc : corpus.pairs)
            for (const ChannelCache& ch : pc.ch) {
                const Forward f = forward_channel(ch, pc.classes_lr, eps0, t, xi0, cfg.radius);
                for (size_t i = 0; i < f.resid.size(); ++i) {
                    const auto cls = static_cast<size_t>(ch.cb.labels[i]);
                    g[cls] += 2.0 * static_cast<double>(f.resid.data[i]);
                    count[cls]++;
                }
            }
        for (size_t i = 0; i < g.size(); ++i)
            if (count[i] > 0) g[i] /= static_cast<double>(count[i]);
    };
    trace = descend(tau, "tau", eval, grad, [](std::vector<double>&) {}, cfg);
    return tau;
}

inline Lut train_sigma_stage(const Corpus& corpus, const TrainConfig& cfg, const Lut& tau,
                             StageTrace& trace, std::vector<std::string>* warnings) {
    const Lut xi0 = zero_lut(corpus.n_classes);
    if (cfg.lambda == 0.0) {
        // eps = lambda * sigma^2 is identically zero; nothing to optimize.
        trace.stage = "sigma";
        const std::vector<double> eps0(static_cast<size_t>(corpus.n_classes), 0.0);
        trace.losses.push_back(corpus_loss(corpus, eps0, tau, xi0, cfg.radius));
        if (warnings) warnings->push_back("sigma stage skipped: lambda is 0");
        return zero_lut(corpus.n_classes);
    }
    // The loss is stationary in sigma at the zero initialization (d eps /
    // d sigma = 2*lambda*sigma), so the stage descends on the per-class eps
    // values and maps back to sigma = sqrt(eps / lambda) afterwards.
    std::vector<double> eps(static_cast<size_t>(corpus.n_classes), 0.0);
    auto eval = [&](const std::vector<double>& e) {
        return corpus_loss(corpus, e, tau, xi0, cfg.radius);
    };
    auto grad = [&](const std::vector<double>& e, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        std::vector<int64_t> count(g.size(), 0);
        for (const PairCache& pc : corpus.pairs)
            for (const ChannelCache& ch : pc.ch) {
                const Forward f = forward_channel(ch, pc.classes_lr, e, tau, xi0, cfg.radius);
                ImagePlane sf(f.resid.width, f.resid.height);
                ImagePlane s(f.resid.width, f.resid.height);
                for (size_t i = 0; i < f.resid.size(); ++i) {
                    const double sv = 2.0 * f.resid.data[i];
                    s.data[i] = static_cast<float>(sv);
                    sf.data[i] = static_cast<float>(sv * f.f.data[i]);
                }
                const ImagePlane adj_sf = box_mean_adjoint(sf, cfg.radius);
                const ImagePlane adj_s = box_mean_adjoint(s, cfg.radius);
                for (size_t i = 0; i < f.resid.size(); ++i) {
                    const auto cls = static_cast<size_t>(pc.classes_lr.labels[i]);
                    const double a = f.a_raw.data[i];
                    const double denom = static_cast<double>(ch.stats.var_g.data[i]) +
                                         f.eps.data[i] + kVarianceFloor;
                    const double dade = -a / denom;
                    const double dbde = -dade * ch.stats.mean_g.data[i];
                    g[cls] += dade * adj_sf.data[i] + dbde * adj_s.data[i];
                    count[cls]++;
                }
            }
        for (size_t i = 0; i < g.size(); ++i)
            if (count[i] > 0) g[i] /= static_cast<double>(count[i]);
    };
    auto project = [](std::vector<double>& e) {
        for (double& v : e) v = std::max(0.0, v);
    };
    trace = descend(eps, "sigma", eval, grad, project, cfg);
    Lut sigma = zero_lut(corpus.n_classes);
    for (size_t i = 0; i < eps.size(); ++i) sigma[i] = std::sqrt(eps[i] / cfg.lambda);
    return sigma;
}

inline Lut train_xi_stage(const Corpus& corpus, const TrainConfig& cfg, const Lut& tau,
                          const Lut& sigma, StageTrace& trace) {
    const std::vector<double> eps = eps_from_sigma(sigma, cfg.lambda);
    Lut xi = zero_lut(corpus.n_classes);
    auto eval = [&](const std::vector<double>& x) {
        return corpus_loss(corpus, eps, tau, x, cfg.radius);
    };
    auto grad = [&](const std::vector<double>& x, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        std::vector<int64_t> count(g.size(), 0);
        for (const PairCache& pc : corpus.pairs)
            for (const ChannelCache& ch : pc.ch) {
                const Forward f = forward_channel(ch, pc.classes_lr, eps, tau, x, cfg.radius);
                for (size_t i = 0; i < f.resid.size(); ++i) {
                    const auto cls = static_cast<size_t>(pc.classes_lr.labels[i]);
                    if (f.xi_active[i])
                        g[cls] += 2.0 * static_cast<double>(f.resid.data[i]) * f.a_m.data[i];
                    count[cls]++;
                }
            }
        for (size_t i = 0; i < g.size(); ++i)
            if (count[i] > 0) g[i] /= static_cast<double>(count[i]);
    };
    trace = descend(xi, "xi", eval, grad, [](std::vector<double>&) {}, cfg);
    return xi;
}

/// Working state for the ecb search. With the earlier parameters frozen the
/// rendered output is affine in the ecb entries, so the LoG response of the
/// output is the cached base response plus per-class response planes scaled
/// by the entries; those planes are sparse (a class only influences pixels
/// within the kernel radius of its members) and cached as index lists. The
/// per-class statistic being matched is the mean LoG magnitude: the search
/// minimizes, per class, the difference between the response magnitudes of
/// the output and of the sharpness reference.
struct EcbSystem {
    struct ClassResponse {
        std::vector<int32_t> idx; // affected pixels, ascending
        std::vector<float> ra;    // response change per unit of ecb_a[class]
        std::vector<float> rb;    // likewise for ecb_b[class]
    };
    struct PairState {
        std::vector<int32_t> cls; // hi-res class per pixel
        ImagePlane l_cur;         // LoG response of the current output
        std::vector<ClassResponse> resp; // indexed by class, empty when absent
    };

    int n = 0;
    std::vector<double> n_pix;      // hi-res pixels per class over the corpus
    std::vector<double> s_ref_abs;  // per-class sums of |LoG| of the reference
    std::vector<double> s_out_abs;  // per-class sums of |LoG| of the current output
    std::vector<PairState> pairs;
};

inline EcbSystem build_ecb_system(const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                                  const AguModel& model) {
    EcbSystem sys;
    sys.n = cfg.n_classes;
    sys.n_pix.assign(static_cast<size_t>(sys.n), 0.0);
    sys.s_ref_abs.assign(static_cast<size_t>(sys.n), 0.0);
    sys.s_out_abs.assign(static_cast<size_t>(sys.n), 0.0);
    constexpr double kW[3] = {0.299, 0.587, 0.114};

    for (const TrainPair& p : pairs) {
        p.validate();
        const int hw = p.guide_hr.width(), hh = p.guide_hr.height();
        const detail::AguPlanes planes = detail::prepare_agu_planes(p.guide_hr, p.input_lr, model);
        const EpsilonField eps = make_epsilon_field(model.lut_sigma, planes.classes_lr, model.lambda);

        ImagePlane f_gray(hw, hh, 0.0f), base_gray(hw, hh, 0.0f);
        for (int c = 0; c < 3; ++c) {
            const CoeffField coeff = compute_ab(p.input_lr[c], planes.guide_lr[c], model.radius, eps);
            const ImagePlane a_bl = bilinear_resize_raw(coeff.a, hw, hh);
            const ImagePlane b_bl = bilinear_resize_raw(coeff.b, hw, hh);

            ImagePlane tau_lr(planes.cb[static_cast<size_t>(c)].width,
                              planes.cb[static_cast<size_t>(c)].height);
            for (size_t i = 0; i < tau_lr.size(); ++i)
                tau_lr.data[i] = static_cast<float>(
                    model.lut_tau[static_cast<size_t>(planes.cb[static_cast<size_t>(c)].labels[i])]);
            const ImagePlane tau_hr = nearest_resize(tau_lr, hw, hh);

            ImagePlane xi(hw, hh);
            for (size_t i = 0; i < xi.size(); ++i)
                xi.data[i] = static_cast<float>(
                    model.lut_xi[static_cast<size_t>(planes.classes_hr.labels[i])]);
            const ImagePlane xi_c = clamp_xi(p.guide_hr[c], xi, model.radius);

            for (size_t i = 0; i < f_gray.size(); ++i) {
                const double fv = static_cast<double>(p.guide_hr[c].data[i]) + xi_c.data[i];
                f_gray.data[i] = static_cast<float>(f_gray.data[i] + kW[c] * fv);
                base_gray.data[i] = static_cast<float>(
                    base_gray.data[i] +
                    kW[c] * (static_cast<double>(a_bl.data[i]) * fv + b_bl.data[i] +
                             tau_hr.data[i]));
            }
        }

        const ImagePlane ref_gray = cfg.ecb_reference == TrainConfig::EcbReference::Guide
                                        ? rgb_to_gray(p.guide_hr)
                                        : rgb_to_gray(p.target);
        const ImagePlane l_ref = log_response(ref_gray, cfg.kernel_cfg);

        EcbSystem::PairState state;
        state.cls.assign(planes.classes_hr.labels.begin(), planes.classes_hr.labels.end());
        state.l_cur = log_response(base_gray, cfg.kernel_cfg);
        state.resp.resize(static_cast<size_t>(sys.n));

        std::vector<uint8_t> present(static_cast<size_t>(sys.n), 0);
        for (size_t i = 0; i < state.cls.size(); ++i) {
            const auto cls = static_cast<size_t>(state.cls[i]);
            sys.n_pix[cls] += 1.0;
            sys.s_ref_abs[cls] += std::abs(static_cast<double>(l_ref.data[i]));
            sys.s_out_abs[cls] += std::abs(static_cast<double>(state.l_cur.data[i]));
            present[cls] = 1;
        }

        ImagePlane mask(hw, hh), fmask(hw, hh);
        for (int j = 0; j < sys.n; ++j) {
            if (!present[static_cast<size_t>(j)]) continue;
            for (size_t i = 0; i < mask.size(); ++i) {
                const bool in_class = (state.cls[i] == j);
                mask.data[i] = in_class ? 1.0f : 0.0f;
                fmask.data[i] = in_class ? f_gray.data[i] : 0.0f;
            }
            const ImagePlane la = log_response(fmask, cfg.kernel_cfg);
            const ImagePlane lb = log_response(mask, cfg.kernel_cfg);
            EcbSystem::ClassResponse& r = state.resp[static_cast<size_t>(j)];
            for (size_t i = 0; i < la.size(); ++i) {
                if (la.data[i] != 0.0f || lb.data[i] != 0.0f) {
                    r.idx.push_back(static_cast<int32_t>(i));
                    r.ra.push_back(la.data[i]);
                    r.rb.push_back(lb.data[i]);
                }
            }
        }
        sys.pairs.push_back(std::move(state));
    }
    return sys;
}

/// Step-wise coordinate search over the per-class corrections: each class
/// steps by +/- ecb_step, keeping a step only when its own magnitude gap
/// decreases, the support-weighted total gap does not grow, and no class is
/// pushed above its starting gap by more than a small scale-aware slack
/// (classes couple through the kernel support, so exact per-class
/// monotonicity would deadlock the search at zero). The sign picked first
/// follows the response comparison; the opposite sign is tried when that
/// step is rejected. Sweeps alternate between the A and B tables.
inline std::pair<Lut, Lut> ecb_coordinate_search(EcbSystem& sys, const TrainConfig& cfg,
                                                 std::vector<double>* j_initial,
                                                 std::vector<double>* j_final,
                                                 double* j_slack = nullptr) {
    const int n = sys.n;
    Lut ecb_a = zero_lut(n), ecb_b = zero_lut(n);
    auto mean_gap = [&](int i) {
        return (sys.s_ref_abs[static_cast<size_t>(i)] - sys.s_out_abs[static_cast<size_t>(i)]) /
               sys.n_pix[static_cast<size_t>(i)];
    };
    std::vector<double> j0(static_cast<size_t>(n), 0.0);
    double total = 0.0, total_pix = 0.0, total_ref = 0.0;
    for (int i = 0; i < n; ++i)
        if (sys.n_pix[static_cast<size_t>(i)] > 0.0) {
            j0[static_cast<size_t>(i)] = std::abs(mean_gap(i));
            total += sys.n_pix[static_cast<size_t>(i)] * j0[static_cast<size_t>(i)];
            total_pix += sys.n_pix[static_cast<size_t>(i)];
            total_ref += sys.s_ref_abs[static_cast<size_t>(i)];
        }
    if (j_initial) *j_initial = j0;
    const double slack = total_pix > 0.0 ? 0.10 * total_ref / total_pix : 0.0;
    if (j_slack) *j_slack = slack;

    std::vector<double> delta(static_cast<size_t>(n), 0.0);
    std::vector<int32_t> touched;
    // evaluates one candidate step: per-class |LoG| sum changes
    auto evaluate = [&](int cj, double dir, bool on_a) {
        std::fill(delta.begin(), delta.end(), 0.0);
        touched.clear();
        for (const EcbSystem::PairState& ps : sys.pairs) {
            const EcbSystem::ClassResponse& r = ps.resp[static_cast<size_t>(cj)];
            const std::vector<float>& rx = on_a ? r.ra : r.rb;
            for (size_t k = 0; k < r.idx.size(); ++k) {
                const auto pix = static_cast<size_t>(r.idx[k]);
                const double cur = ps.l_cur.data[pix];
                const double d = std::abs(cur + dir * rx[k]) - std::abs(cur);
                const auto cls = static_cast<size_t>(ps.cls[pix]);
                if (delta[cls] == 0.0) touched.push_back(static_cast<int32_t>(cls));
                delta[cls] += d;
            }
        }
    };
    auto try_step = [&](int cj, double dir, bool on_a) {
        evaluate(cj, dir, on_a);
        const double own_before = std::abs(mean_gap(cj));
        const double own_after =
            std::abs((sys.s_ref_abs[static_cast<size_t>(cj)] -
                      (sys.s_out_abs[static_cast<size_t>(cj)] + delta[static_cast<size_t>(cj)])) /
                     sys.n_pix[static_cast<size_t>(cj)]);
        if (own_after >= own_before - 1e-15) return false;
        double total_after = total;
        for (const int32_t i : touched) {
            const double np = sys.n_pix[static_cast<size_t>(i)];
            if (np <= 0.0) continue;
            const double before = std::abs(sys.s_ref_abs[static_cast<size_t>(i)] -
                                           sys.s_out_abs[static_cast<size_t>(i)]) / np;
            const double after = std::abs(sys.s_ref_abs[static_cast<size_t>(i)] -
                                          (sys.s_out_abs[static_cast<size_t>(i)] +
                                           delta[static_cast<size_t>(i)])) / np;
            if (after > j0[static_cast<size_t>(i)] + slack) return false;
            total_after += np * (after - before);
        }
        if (total_after > total + 1e-9) return false;
        // commit
        for (EcbSystem::PairState& ps : sys.pairs) {
            EcbSystem::ClassResponse& r = ps.resp[static_cast<size_t>(cj)];
            const std::vector<float>& rx = on_a ? r.ra : r.rb;
            for (size_t k = 0; k < r.idx.size(); ++k) {
                const auto pix = static_cast<size_t>(r.idx[k]);
                ps.l_cur.data[pix] = static_cast<float>(ps.l_cur.data[pix] + dir * rx[k]);
            }
        }
        for (const int32_t i : touched) sys.s_out_abs[static_cast<size_t>(i)] += delta[static_cast<size_t>(i)];
        total = total_after;
        return true;
    };

    bool prev_sweep_accepted = true;
    for (int sweep = 0; sweep < 2 * cfg.ecb_max_iters; ++sweep) {
        const bool on_a = (sweep % 2 == 0);
        Lut& lut = on_a ? ecb_a : ecb_b;
        bool any = false;
        for (int cj = 0; cj < n; ++cj) {
            if (sys.n_pix[static_cast<size_t>(cj)] <= 0.0) continue;
            const double preferred = mean_gap(cj) < 0.0 ? cfg.ecb_step : -cfg.ecb_step;
            if (try_step(cj, preferred, on_a)) {
                lut[static_cast<size_t>(cj)] += preferred;
                any = true;
            } else if (try_step(cj, -preferred, on_a)) {
                lut[static_cast<size_t>(cj)] -= preferred;
                any = true;
            }
        }
        if (!any && !prev_sweep_accepted) break;
        prev_sweep_accepted = any;
    }
    if (j_final) {
        j_final->assign(static_cast<size_t>(n), 0.0);
        for (int i = 0; i < n; ++i)
            if (sys.n_pix[static_cast<size_t>(i)] > 0.0)
                (*j_final)[static_cast<size_t>(i)] = std::abs(mean_gap(i));
    }
    return {ecb_a, ecb_b};
}

} // namespace detail_train

/// Stage 1: per-brightness-class correction tau, trained by gradient descent
/// with sigma and xi held at zero.
inline Lut train_tau(const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                     TrainReport* report = nullptr) {
    const detail_train::Corpus corpus = detail_train::build_corpus(pairs, cfg);
    StageTrace trace;
    Lut tau = detail_train::train_tau_stage(corpus, cfg, trace);
    if (report) report->stages.push_back(trace);
    return tau;
}

/// Stage 2: per-edge-class optimal smoothing variance, trained with the
/// effect of tau.
inline Lut train_sigma(const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                       const Lut& lut_tau, TrainReport* report = nullptr) {
    const detail_train::Corpus corpus = detail_train::build_corpus(pairs, cfg);
    StageTrace trace;
    Lut sigma = detail_train::train_sigma_stage(corpus, cfg, lut_tau, trace,
                                                report ? &report->warnings : nullptr);
    if (report) report->stages.push_back(trace);
    return sigma;
}

/// Stage 3: per-edge-class sharpening offset xi, with tau and sigma frozen
/// and the windowed clamp active in the forward pass.
inline Lut train_xi(const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                    const Lut& lut_tau, const Lut& lut_sigma, TrainReport* report = nullptr) {
    const detail_train::Corpus corpus = detail_train::build_corpus(pairs, cfg);
    StageTrace trace;
    Lut xi = detail_train::train_xi_stage(corpus, cfg, lut_tau, lut_sigma, trace);
    if (report) report->stages.push_back(trace);
    return xi;
}

/// Stage 4: coefficient-upsampling corrections, step-wise search matching
/// the per-class LoG statistics of the upsampled output to the sharpness
/// reference.
inline std::pair<Lut, Lut> train_ecb(const std::vector<TrainPair>& pairs, const TrainConfig& cfg,
                                     const AguModel& model_so_far, TrainReport* report = nullptr) {
    if (!(cfg.uf > 1.0)) throw InvalidConfig("train_ecb: uf must be > 1");
    cfg.validate();
    if (pairs.empty()) throw InvalidInput("training: pair list is empty");
    detail_train::EcbSystem sys = detail_train::build_ecb_system(pairs, cfg, model_so_far);
    std::vector<double> j0, j1;
    double slack = 0.0;
    auto luts = detail_train::ecb_coordinate_search(sys, cfg, &j0, &j1, &slack);
    if (report) {
        report->ecb_j_initial = j0;
        report->ecb_j_final = j1;
        report->ecb_j_slack = slack;
        StageTrace trace;
        trace.stage = "ecb";
        double t0 = 0.0, t1 = 0.0;
        for (int i = 0; i < sys.n; ++i) {
            t0 += j0[static_cast<size_t>(i)];
            t1 += j1[static_cast<size_t>(i)];
        }
        trace.losses = {t0, t1};
        report->stages.push_back(trace);
    }
    return luts;
}

struct TrainResult {
    AguModel model;
    TrainReport report;
};

/// Runs the four stages in sequence (tau, sigma, xi, ecb), each consuming
/// the previous outputs. Deterministic for a fixed config and thread count
/// independent.
inline TrainResult train_full(const std::vector<TrainPair>& pairs, const TrainConfig& cfg) {
    cfg.validate();
    const detail_train::Corpus corpus = detail_train::build_corpus(pairs, cfg);

    TrainResult res;
    res.report.edge_class_support = corpus.edge_support;
    res.report.brightness_class_support = corpus.bright_support;

    // Outlier check: a pair whose guide is much noisier than the corpus
    // median biases the per-class corrections.
    {
        std::vector<double> noises;
        noises.reserve(pairs.size());
        for (const TrainPair& p : pairs) noises.push_back(noise_estimate(rgb_to_gray(p.guide_hr)));
        std::vector<double> sorted = noises;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        for (size_t i = 0; i < noises.size(); ++i)
            if (median > 0.0 && noises[i] > 2.0 * median)
                res.report.warnings.push_back("pair " + std::to_string(i) +
                                              ": guide noise " + std::to_string(noises[i]) +
                                              " exceeds 2x corpus median " + std::to_string(median));
    }

    AguModel model = AguModel::zeros(cfg.n_classes, cfg.radius, cfg.lambda, cfg.kernel_cfg,
                                     cfg.clamp_log);

    if (cfg.enable_tau) {
        StageTrace trace;
        model.lut_tau = detail_train::train_tau_stage(corpus, cfg, trace);
        res.report.stages.push_back(trace);
    } else {
        res.report.warnings.push_back("tau stage disabled by configuration");
    }

    {
        StageTrace trace;
        model.lut_sigma = detail_train::train_sigma_stage(corpus, cfg, model.lut_tau, trace,
                                                          &res.report.warnings);
        res.report.stages.push_back(trace);
    }
    {
        StageTrace trace;
        model.lut_xi = detail_train::train_xi_stage(corpus, cfg, model.lut_tau, model.lut_sigma,
                                                    trace);
        res.report.stages.push_back(trace);
    }

    if (cfg.uf > 1.0) {
        auto luts = train_ecb(pairs, cfg, model, &res.report);
        model.lut_ecb_a = luts.first;
        model.lut_ecb_b = luts.second;
    } else {
        res.report.warnings.push_back("ecb stage skipped: uf <= 1");
    }

    model.provenance = {{"learning_rate", cfg.learning_rate},
                        {"max_epochs", static_cast<double>(cfg.max_epochs)},
                        {"tol", cfg.tol},
                        {"ecb_step", cfg.ecb_step},
                        {"ecb_max_iters", static_cast<double>(cfg.ecb_max_iters)},
                        {"uf", cfg.uf},
                        {"seed", static_cast<double>(cfg.seed)},
                        {"enable_tau", cfg.enable_tau ? 1.0 : 0.0},
                        {"ecb_reference_guide",
                         cfg.ecb_reference == TrainConfig::EcbReference::Guide ? 1.0 : 0.0}};
    model.validate();
    res.model = model;
    return res;
}

/// Synthetic degradation parameters. The darkening is the exact inverse of
/// the enhancer transfer curve with its own gain/gamma; the defaults leave a
/// deliberate mismatch between the two so that the generated corpus carries
/// a brightness error for tau to learn, the way an imperfect real enhancer
/// would. The enhanced input is additionally box-blurred and re-noised:
/// neural enhancer outputs are soft (the sharpness deficit the upsampling
/// correction is trained to recover) while still carrying emphasized sensor
/// noise.
struct SynthParams {
    double darken_gain = 3.0;
    double darken_gamma = 2.2;
    double noise_sigma = 6.0;
    double enhancer_gain = 2.0;
    double enhancer_gamma = 1.6;
    int input_blur_radius = 2;
    double input_noise_sigma = 5.0;
};

/// Adds seeded Gaussian noise per channel, clamped to the intensity range.
inline ColorImage add_gaussian_noise(const ColorImage& img, double sigma, Rng& rng) {
    require_color(img, "add_gaussian_noise");
    if (sigma < 0.0) throw InvalidInput("add_gaussian_noise: sigma must be >= 0");
    ColorImage out = img;
    if (sigma == 0.0) return out;
    for (int c = 0; c < 3; ++c)
        for (float& v : out[c].data) v = clamp_intensity(v + sigma * rng.gaussian());
    return out;
}

/// Synthetic low-light camera frame for a bright reference image.
inline ColorImage synth_darken(const ColorImage& bright, const SynthParams& sp, Rng& rng) {
    return add_gaussian_noise(stub_darken(bright, sp.darken_gain, sp.darken_gamma), sp.noise_sigma,
                              rng);
}

/// Full training sample from one bright image: darkened+noised guide, the
/// bright image as target, and the enhanced low-resolution input produced by
/// the stub enhancer.
inline TrainPair make_synthetic_pair(const ColorImage& bright, double uf, const SynthParams& sp,
                                     Rng& rng) {
    require_color(bright, "make_synthetic_pair");
    if (!(uf >= 1.0)) throw InvalidInput("make_synthetic_pair: uf must be >= 1");
    TrainPair p;
    p.target = bright;
    p.guide_hr = synth_darken(bright, sp, rng);
    const int lw = std::max(1, static_cast<int>(std::lround(bright.width() / uf)));
    const int lh = std::max(1, static_cast<int>(std::lround(bright.height() / uf)));
    const ColorImage guide_lr =
        (lw == bright.width() && lh == bright.height()) ? p.guide_hr
                                                        : downscale_guide(p.guide_hr, lw, lh);
    p.input_lr = stub_enhancer(guide_lr, sp.enhancer_gain, sp.enhancer_gamma);
    if (sp.input_blur_radius > 0)
        for (int c = 0; c < 3; ++c) p.input_lr[c] = box_mean(p.input_lr[c], sp.input_blur_radius);
    p.input_lr = add_gaussian_noise(p.input_lr, sp.input_noise_sigma, rng);
    p.validate();
    return p;
}

} // namespace agu
