// ttd: command-line front end. Reports are JSON; exit codes 1 usage, 2 I/O, 3 numerical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ttd/ttd.hpp"

using json = nlohmann::ordered_json;
using namespace ttd;

namespace {

constexpr int schema_version = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- small parsing helpers ---

std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

std::vector<index_t> parse_index_list(const std::string& s, const char* what) {
    std::vector<index_t> out;
    for (const auto& t : split(s)) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || v <= 0) throw UsageError(std::string("invalid ") + what + ": " + s);
        out.push_back(static_cast<index_t>(v));
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what);
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& t : split(s)) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size()) throw UsageError(std::string("invalid ") + what + ": " + s);
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string("empty ") + what);
    return out;
}

/// A single rank is broadcast to every bond.
std::vector<index_t> expand_ranks(std::vector<index_t> r, index_t bonds) {
    if (r.size() == 1) r.assign(bonds, r[0]);
    if (r.size() != bonds)
        throw UsageError("expected " + std::to_string(bonds) + " ranks, got " + std::to_string(r.size()));
    return r;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json num_array(const std::vector<double>& v) {
    json a = json::array();
    for (double d : v) a.push_back(num(d));
    return a;
}

json index_array(const std::vector<index_t>& v) {
    json a = json::array();
    for (index_t d : v) a.push_back(d);
    return a;
}

double sq_err(std::span<const double> a, std::span<const double> b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] - b[i]) * (a[i] - b[i]);
    return e;
}

void require_finite(std::span<const double> v, const char* what) {
    for (double d : v)
        if (!std::isfinite(d)) throw NumericalError(std::string("non-finite value in ") + what);
}

// --- common option groups ---

struct CritOpts {
    std::string ranks;
    std::optional<double> eps_rel;
    std::string eps_abs; ///< number or "auto"

    void add(CLI::App* app) {
        auto* r = app->add_option("--ranks", ranks, "fixed TT-ranks r1,r2,... (one value is broadcast)");
        auto* e = app->add_option("--eps-rel", eps_rel, "relative accuracy ε");
        auto* a = app->add_option("--eps-abs", eps_abs, "squared-error budget ε², or 'auto' for σ²K");
        r->excludes(e)->excludes(a);
        e->excludes(a);
    }
    bool any() const { return !ranks.empty() || eps_rel || !eps_abs.empty(); }

    /// `auto_eps2` is used for --eps-abs auto; absent when no noise level is known.
    TruncationCriterion get(index_t bonds, std::optional<double> auto_eps2 = std::nullopt) const {
        if (!ranks.empty()) return FixedRanks{expand_ranks(parse_index_list(ranks, "ranks"), bonds)};
        if (eps_rel) {
            if (*eps_rel < 0 || !std::isfinite(*eps_rel)) throw UsageError("--eps-rel must be >= 0");
            return RelativeAccuracy{*eps_rel};
        }
        if (eps_abs == "auto") {
            if (!auto_eps2) throw UsageError("--eps-abs auto needs a known or estimated noise level");
            return AccuracyBudget{*auto_eps2};
        }
        if (!eps_abs.empty()) {
            const auto v = parse_double_list(eps_abs, "eps-abs");
            if (v.size() != 1 || v[0] < 0 || !std::isfinite(v[0])) throw UsageError("--eps-abs must be >= 0 or auto");
            return AccuracyBudget{v[0]};
        }
        throw UsageError("one of --ranks, --eps-rel, --eps-abs is required");
    }
};

json criterion_json(const TruncationCriterion& c) {
    json j;
    if (const auto* f = std::get_if<FixedRanks>(&c)) {
        j["kind"] = "fixed_ranks";
        j["ranks"] = index_array(f->ranks);
    } else if (const auto* a = std::get_if<AccuracyBudget>(&c)) {
        j["kind"] = "accuracy_budget";
        j["eps2"] = num(a->eps2);
    } else {
        j["kind"] = "relative_accuracy";
        j["eps"] = num(std::get<RelativeAccuracy>(c).eps);
    }
    return j;
}

struct SweepOpts {
    std::string algo = "ascu1";
    index_t overlap = 0;
    bool overlap_set = false;
    index_t block = 2, stride = 1;
    index_t max_sweeps = 100;
    double tol = 1e-6;

    void add(CLI::App* app, const char* algos) {
        app->add_option("--algo", algo, std::string("algorithm: ") + algos)->capture_default_str();
        app->add_option_function<index_t>("--overlap", [this](index_t v) { overlap = v, overlap_set = true; },
                                          "core overlap for adcu (0,1) and atcu (0,1,2)");
        app->add_option("--block", block, "cores per block for amcu")->capture_default_str();
        app->add_option("--stride", stride, "block stride for amcu")->capture_default_str();
        app->add_option("--max-sweeps", max_sweeps, "sweep limit")->capture_default_str();
        app->add_option("--tol", tol, "relative change of the error between sweeps")->capture_default_str();
    }

    /// Block size and stride of the chosen algorithm.
    std::pair<index_t, index_t> schedule() const {
        if (algo == "ttsvd") return {0, 0};
        if (algo == "ascu1" || algo == "ascu2") return {1, 1};
        if (algo == "adcu") {
            const index_t o = overlap_set ? overlap : 1;
            if (o > 1) throw UsageError("adcu overlap must be 0 or 1");
            return {2, 2 - o};
        }
        if (algo == "atcu") {
            const index_t o = overlap_set ? overlap : 2;
            if (o > 2) throw UsageError("atcu overlap must be 0, 1 or 2");
            return {3, 3 - o};
        }
        if (algo == "amcu") {
            if (block < 1 || block > 3) throw UsageError("amcu block size must be 1, 2 or 3");
            return {block, stride};
        }
        throw UsageError("unknown algorithm: " + algo);
    }
};

struct DecompResult {
    TTTensor tt;
    json log;
    std::vector<double> sweep_errors;
    bool budget_met = true;
    bool negative_budget = false;
};

DecompResult run_decomposition(const DenseTensor& y, const TruncationCriterion& crit, const SweepOpts& so) {
    DecompResult r;
    if (so.algo == "ttsvd") {
        auto res = tt_svd_log(y, crit);
        r.tt = std::move(res.tt);
        r.log = json::array();
        for (const auto& s : res.log)
            r.log.push_back({{"bond", s.step + 1}, {"rank", s.rank}, {"discarded", num(s.discarded)}, {"clamped", s.clamped}});
        return r;
    }
    const auto [k, s] = so.schedule();
    AmcuOptions opt;
    opt.schedule.k = k;
    opt.schedule.s = s;
    opt.schedule.stop.max_sweeps = so.max_sweeps;
    opt.schedule.stop.tol = so.tol;
    if (so.algo == "ascu2") opt.kernel = BlockKernel::two_side;
    auto res = amcu(y, crit, opt);
    r.tt = std::move(res.tt);
    r.sweep_errors = res.sweep_errors;
    r.budget_met = res.budget_met;
    r.negative_budget = res.negative_budget;
    r.log = json::array();
    for (const auto& b : res.blocks)
        r.log.push_back({{"sweep", b.sweep},
                         {"direction", to_string(b.direction)},
                         {"first", b.n + 1},
                         {"last", b.m + 1},
                         {"error", num(b.error)}});
    return r;
}

json schedule_json(const SweepOpts& so) {
    if (so.algo == "ttsvd") return nullptr;
    const auto [k, s] = so.schedule();
    return {{"block", k}, {"stride", s}, {"overlap", k - s}, {"max_sweeps", so.max_sweeps}, {"tol", num(so.tol)}};
}

// --- report assembly ---

struct Timer {
    std::vector<std::pair<std::string, double>> phases;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    void lap(const std::string& name) {
        const auto t1 = std::chrono::steady_clock::now();
        phases.emplace_back(name, std::chrono::duration<double>(t1 - t0).count());
        t0 = t1;
    }
};

struct Context {
    std::vector<std::string> argv;
    std::string report_path;
    bool timings = false;
    Timer timer;
};

json new_report(const Context& ctx, const std::string& command) {
    json j;
    j["schema"] = "ttd-run-report";
    j["schema_version"] = schema_version;
    j["command"] = command;
    j["argv"] = ctx.argv;
    return j;
}

void finish_report(json& j, Context& ctx) {
    if (ctx.timings) {
        json t;
        for (const auto& [k, v] : ctx.timer.phases) t[k] = v;
        j["timings"] = t;
    } else {
        j["timings"] = nullptr;
    }
    const std::string text = j.dump(2) + "\n";
    if (ctx.report_path.empty() || ctx.report_path == "-") {
        std::cout << text;
    } else {
        std::ofstream f(ctx.report_path, std::ios::binary);
        if (!f) throw IoError("cannot create " + ctx.report_path);
        f << text;
        if (!f.flush()) throw IoError("write failed: " + ctx.report_path);
    }
}

json tt_json(const TTTensor& x) {
    return {{"extents", index_array(x.extents())}, {"ranks", index_array(x.ranks())}, {"rank_sum", x.rank_sum()},
            {"parameters", x.parameter_count()}};
}

// --- subcommands ---

struct DecomposeCmd {
    std::string in, out;
    CritOpts crit;
    SweepOpts sweep;
    std::uint64_t seed = 0;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("decompose", "dense TTB1 tensor -> TTX1 TT-tensor");
        c->add_option("input", in, "TTB1 input")->required();
        c->add_option("output", out, "TTX1 output")->required();
        crit.add(c);
        sweep.add(c, "ttsvd, ascu1, ascu2, adcu, atcu, amcu");
        c->add_option("--seed", seed, "recorded in the report; all algorithms are deterministic");
    }

    void run(Context& ctx) {
        const DenseTensor y = io::load_ttb1(in);
        require_finite(y.data(), "input tensor");
        if (y.order() < 2) throw UsageError("decompose needs a tensor of order >= 2");
        const auto c = crit.get(y.order() - 1);
        ctx.timer.lap("load");
        sweep.schedule();
        const auto r = run_decomposition(y, c, sweep);
        ctx.timer.lap("decompose");
        const double err = sq_err(y.data(), tt_full(r.tt).data());
        require_finite(std::vector<double>{err}, "reconstruction");
        io::save_ttx1(out, r.tt);
        ctx.timer.lap("save");

        json j = new_report(ctx, "decompose");
        j["inputs"] = {{"tensor", in}, {"extents", index_array(y.shape())}, {"seed", seed}};
        j["output"] = out;
        j["algorithm"] = sweep.algo;
        j["criterion"] = criterion_json(c);
        j["schedule"] = schedule_json(sweep);
        j["log"] = r.log;
        j["sweep_errors"] = num_array(r.sweep_errors);
        j["result"] = tt_json(r.tt);
        j["metrics"] = {{"error2", num(err)},
                        {"relative_error", num(y.norm2() > 0 ? err / y.norm2() : 0.0)},
                        {"budget_met", r.budget_met},
                        {"negative_budget", r.negative_budget}};
        finish_report(j, ctx);
    }
};

struct RoundCmd {
    std::string in, out;
    CritOpts crit;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("round", "TTX1 -> TTX1 with reduced TT-ranks");
        c->add_option("input", in, "TTX1 input")->required();
        c->add_option("output", out, "TTX1 output")->required();
        crit.add(c);
    }

    void run(Context& ctx) {
        const TTTensor x = io::load_ttx1(in);
        for (const auto& core : x.cores()) require_finite(core.data(), "input cores");
        const auto c = crit.get(x.order() - 1);
        ctx.timer.lap("load");
        auto r = tt_round_log(x, c);
        ctx.timer.lap("round");
        io::save_ttx1(out, r.tt);
        ctx.timer.lap("save");
        json log = json::array();
        for (const auto& s : r.log)
            log.push_back({{"bond", s.step + 1}, {"rank", s.rank}, {"discarded", num(s.discarded)}, {"clamped", s.clamped}});
        double discarded = 0.0;
        for (const auto& s : r.log) discarded += s.discarded;
        json j = new_report(ctx, "round");
        j["inputs"] = {{"tt", in}, {"ranks", index_array(x.ranks())}};
        j["output"] = out;
        j["algorithm"] = "tt_round";
        j["criterion"] = criterion_json(c);
        j["schedule"] = nullptr;
        j["log"] = log;
        j["result"] = tt_json(r.tt);
        j["metrics"] = {{"error2_estimate", num(discarded)}};
        j["warnings"] = r.warnings;
        finish_report(j, ctx);
    }
};

struct SignalSource {
    std::string input;
    std::string kind = "damped";
    index_t length = 16384;
    double snr = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;

    void add(CLI::App* c) {
        c->add_option("--input,-i", input, "signal file (.csv/.txt or raw f64); otherwise a generated signal");
        c->add_option("--kind", kind, "generated signal: damped (x5), x1, x2, x3, x4")->capture_default_str();
        c->add_option("--K", length, "generated signal length")->capture_default_str();
        c->add_option("--snr", snr, "generated signal SNR in dB (default: noiseless)");
        c->add_option("--seed", seed, "noise seed")->capture_default_str();
    }
};

struct DenoiseSignalCmd {
    SignalSource src;
    std::string shape, out;
    std::optional<double> sigma;
    CritOpts crit;
    SweepOpts sweep;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("denoise-signal", "TT approximation of a tensorized signal");
        src.add(c);
        c->add_option("--shape", shape, "tensorization I1,I2,... (default 4x2x...x2x4 or 2x...x2x2q)");
        c->add_option("--sigma", sigma, "known noise standard deviation");
        c->add_option("--output,-o", out, "CSV output of the denoised signal");
        crit.add(c);
        sweep.add(c, "ttsvd, ascu1, ascu2, adcu, atcu, amcu");
    }

    void run(Context& ctx) {
        std::vector<double> y, clean;
        std::optional<double> sigma2;
        json in;
        if (!src.input.empty()) {
            y = io::load_signal(src.input);
            in = {{"signal", src.input}, {"length", y.size()}};
        } else {
            SignalSpec spec;
            spec.kind = parse_signal_kind(src.kind);
            spec.length = src.length;
            spec.snr_db = src.snr;
            spec.seed = src.seed;
            auto s = gen_signal(spec);
            y = std::move(s.noisy);
            clean = std::move(s.clean);
            if (std::isfinite(src.snr)) sigma2 = s.sigma2;
            in = {{"generated", to_string(spec.kind)}, {"length", spec.length}, {"snr_db", num(src.snr)}, {"seed", src.seed}};
        }
        require_finite(y, "input signal");
        std::string noise_source = sigma2 ? "generated" : "none";
        if (sigma) {
            sigma2 = *sigma * *sigma;
            noise_source = "given";
        } else if (!sigma2 && crit.eps_abs == "auto") {
            sigma2 = estimate_noise(std::span<const double>(y));
            noise_source = "estimated";
        }
        const Shape sh = shape.empty() ? default_signal_shape(y.size()) : parse_index_list(shape, "shape");
        const DenseTensor t = tensorize_signal(y, sh);
        std::optional<double> auto_eps2;
        if (sigma2) auto_eps2 = *sigma2 * static_cast<double>(y.size());
        const auto c = crit.get(sh.size() - 1, auto_eps2);
        sweep.schedule();
        ctx.timer.lap("prepare");
        const auto r = run_decomposition(t, c, sweep);
        const auto xhat = tt_full(r.tt).values();
        require_finite(xhat, "approximation");
        ctx.timer.lap("decompose");
        if (!out.empty()) io::save_csv(out, xhat);

        json j = new_report(ctx, "denoise-signal");
        in["shape"] = index_array(sh);
        j["inputs"] = in;
        j["output"] = out.empty() ? json(nullptr) : json(out);
        j["algorithm"] = sweep.algo;
        j["criterion"] = criterion_json(c);
        j["schedule"] = schedule_json(sweep);
        j["log"] = r.log;
        j["sweep_errors"] = num_array(r.sweep_errors);
        j["result"] = tt_json(r.tt);
        json m;
        m["noise_variance"] = sigma2 ? num(*sigma2) : json(nullptr);
        m["noise_source"] = noise_source;
        m["delta"] = num(relative_error(y, xhat));
        m["error2"] = num(sq_err(y, xhat));
        m["budget_met"] = r.budget_met;
        if (!clean.empty()) {
            m["delta_clean"] = num(relative_error(clean, xhat));
            m["sae"] = num(sae(clean, xhat));
            // The noiseless signal decomposed by the same algorithm at ε = 1e-8.
            const auto cr = run_decomposition(tensorize_signal(clean, sh), RelativeAccuracy{1e-8}, sweep);
            j["clean_check"] = {{"eps_rel", 1e-8},
                                {"ranks", index_array(cr.tt.ranks())},
                                {"delta", num(relative_error(clean, tt_full(cr.tt).values()))}};
            ctx.timer.lap("clean_check");
        }
        j["metrics"] = m;
        finish_report(j, ctx);
    }
};

struct DenoiseImageCmd {
    std::string in, out, rank_map, reference;
    std::string patch = "8,8";
    index_t neighbour = 3;
    std::optional<double> sigma;
    bool estimate = false, prefilter = false;
    std::optional<double> snr;
    std::uint64_t seed = 0;
    std::string algo = "ascu1";
    unsigned threads = 1;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("denoise-image", "block-neighbourhood TT denoising of an RGB image");
        c->add_option("input", in, "P6 PPM input")->required();
        c->add_option("output", out, "P6 PPM output")->required();
        c->add_option("--rank-map", rank_map, "P5 PGM rank map output");
        c->add_option("--patch", patch, "block height,width")->capture_default_str();
        c->add_option("--neighbour,--neighbor", neighbour, "neighbour width d")->capture_default_str();
        auto* s = c->add_option("--sigma", sigma, "noise standard deviation");
        auto* e = c->add_flag("--estimate-noise", estimate, "estimate σ from high-frequency DCT coefficients");
        s->excludes(e);
        c->add_flag("--prefilter", prefilter, "DCT hard-threshold prefilter before block approximation");
        c->add_option("--snr", snr, "add Gaussian noise at this SNR first; the input becomes the reference");
        c->add_option("--seed", seed, "noise seed for --snr")->capture_default_str();
        c->add_option("--reference", reference, "clean P6 PPM for metrics");
        c->add_option("--algo", algo, "identity, ttsvd, ascu1, ascu2, adcu, atcu")->capture_default_str();
        c->add_option("--threads", threads, "worker threads (output does not depend on it)")->capture_default_str();
    }

    void run(Context& ctx) {
        const auto hw = parse_index_list(patch, "patch");
        if (hw.size() != 2) throw UsageError("--patch expects h,w");
        const DenoiseAlgo a = parse_denoise_algo(algo);
        Image img = io::load_ppm(in);
        std::optional<Image> ref;
        if (!reference.empty()) ref = io::load_ppm(reference);
        std::optional<double> sigma2;
        std::string noise_source = "none";
        if (snr) {
            ref = img;
            Rng rng(seed);
            double s2 = 0.0;
            img = add_image_noise(img, *snr, rng, &s2);
            sigma2 = s2;
            noise_source = "generated";
        }
        if (sigma) {
            sigma2 = *sigma * *sigma;
            noise_source = "given";
        } else if (estimate) {
            sigma2 = estimate_noise(img);
            noise_source = "estimated";
        }
        if (!sigma2 && a != DenoiseAlgo::identity)
            throw UsageError("a noise level is needed: --sigma, --estimate-noise or --snr");
        ctx.timer.lap("load");
        const Image input = dct_prefilter(img, sigma2.value_or(0.0), prefilter);
        ctx.timer.lap("prefilter");
        PatchConfig cfg;
        cfg.h = hw[0];
        cfg.w = hw[1];
        cfg.d = neighbour;
        cfg.eps2 = cfg.budget_for(sigma2.value_or(0.0), img.channels);
        DenoiseOptions dopt;
        dopt.threads = threads;
        const auto r = denoise_image(input, cfg, a, dopt);
        require_finite(r.image.data, "denoised image");
        ctx.timer.lap("denoise");
        io::save_ppm(out, r.image);
        if (!rank_map.empty()) io::save_pgm(rank_map, r.rank_map.to_image());
        ctx.timer.lap("save");

        json j = new_report(ctx, "denoise-image");
        j["inputs"] = {{"image", in},
                       {"height", img.height},
                       {"width", img.width},
                       {"reference", ref ? json(snr ? in : reference) : json(nullptr)},
                       {"snr_db", snr ? num(*snr) : json(nullptr)},
                       {"seed", seed}};
        j["output"] = out;
        j["rank_map"] = rank_map.empty() ? json(nullptr) : json(rank_map);
        j["algorithm"] = algo;
        j["schedule"] = {{"patch", index_array(hw)}, {"neighbour", neighbour}, {"prefilter", prefilter}};
        j["criterion"] = {{"kind", "accuracy_budget"}, {"eps2", num(cfg.eps2)}};
        double rmax = 0.0, rmin = r.rank_map.values.empty() ? 0.0 : r.rank_map.values[0];
        for (double v : r.rank_map.values) rmax = std::max(rmax, v), rmin = std::min(rmin, v);
        j["result"] = {{"blocks", r.blocks}, {"mean_rank_sum", num(r.mean_rank_sum)}, {"rank_map_min", num(rmin)},
                       {"rank_map_max", num(rmax)}};
        json m;
        m["noise_variance"] = sigma2 ? num(*sigma2) : json(nullptr);
        m["noise_source"] = noise_source;
        if (ref) {
            const auto mn = image_metrics(*ref, img);
            const auto mo = image_metrics(*ref, r.image);
            m["noisy"] = {{"mse", num(mn.mse)}, {"psnr", num(mn.psnr)}, {"ssim", num(mn.ssim)}};
            m["denoised"] = {{"mse", num(mo.mse)}, {"mse_db", num(mo.mse_db)}, {"psnr", num(mo.psnr)}, {"ssim", num(mo.ssim)}};
        }
        j["metrics"] = m;
        finish_report(j, ctx);
    }
};

struct BssCmd {
    SignalSource src;
    std::string prefix;
    index_t sources = 3;
    std::string freqs = "10,10.1,10.2";
    std::string shape, ranks;
    std::string solver = "ascu";
    index_t inner = 2, max_outer = 200;
    double tol = 1e-9;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("bss", "single-mixture source separation with TT-structured sources");
        c->add_option("--input,-i", src.input, "mixture file; otherwise damped sources are generated");
        c->add_option("--K", src.length, "generated mixture length")->capture_default_str();
        c->add_option("--snr", src.snr, "generated mixture SNR in dB (default: noiseless)");
        c->add_option("--seed", src.seed, "noise seed")->capture_default_str();
        c->add_option("--freqs", freqs, "generated source frequencies in Hz")->capture_default_str();
        c->add_option("--sources,-R", sources, "number of sources (input mixtures)")->capture_default_str();
        c->add_option("--prefix,-o", prefix, "write <prefix>_<r>.csv per estimated source");
        c->add_option("--shape", shape, "tensorization I1,I2,...");
        c->add_option("--ranks", ranks, "per-source TT-ranks (one value is broadcast)");
        c->add_option("--solver", solver, "ascu or ttsvd")->capture_default_str();
        c->add_option("--inner-sweeps", inner, "ASCU sweeps per source visit")->capture_default_str();
        c->add_option("--max-outer", max_outer, "outer iteration limit")->capture_default_str();
        c->add_option("--tol", tol, "relative change of the residual for convergence")->capture_default_str();
    }

    void run(Context& ctx) {
        std::vector<double> y;
        std::vector<std::vector<double>> truth;
        json in;
        index_t r_count = sources;
        if (!src.input.empty()) {
            y = io::load_signal(src.input);
            in = {{"signal", src.input}, {"length", y.size()}};
        } else {
            const auto f = parse_double_list(freqs, "freqs");
            r_count = f.size();
            truth = bss_sources(src.length, f);
            y.assign(src.length, 0.0);
            for (const auto& s : truth)
                for (index_t k = 0; k < src.length; ++k) y[k] += s[k];
            if (std::isfinite(src.snr)) {
                Rng rng(src.seed);
                y = add_noise(y, src.snr, rng).noisy;
            }
            in = {{"generated", "damped_sources"}, {"length", src.length}, {"freqs", num_array(f)},
                  {"snr_db", num(src.snr)}, {"seed", src.seed}};
        }
        require_finite(y, "mixture");
        BssOptions opt;
        opt.sources = r_count;
        opt.shape = shape.empty() ? default_signal_shape(y.size()) : parse_index_list(shape, "shape");
        if (!ranks.empty()) opt.ranks = expand_ranks(parse_index_list(ranks, "ranks"), opt.shape.size() - 1);
        opt.solver = parse_bss_solver(solver);
        opt.inner_sweeps = inner;
        opt.max_outer = max_outer;
        opt.tol = tol;
        ctx.timer.lap("prepare");
        const auto r = bss_single_mixture(y, opt);
        for (const auto& s : r.sources) require_finite(s, "estimated source");
        ctx.timer.lap("separate");
        json outs = json::array();
        if (!prefix.empty())
            for (index_t i = 0; i < r.sources.size(); ++i) {
                const std::string p = prefix + "_" + std::to_string(i + 1) + ".csv";
                io::save_csv(p, r.sources[i]);
                outs.push_back(p);
            }
        ctx.timer.lap("save");

        json j = new_report(ctx, "bss");
        in["shape"] = index_array(opt.shape);
        j["inputs"] = in;
        j["output"] = outs;
        j["algorithm"] = solver == "ttsvd" ? "ttsvd" : "ascu1";
        j["schedule"] = {{"sources", r_count}, {"inner_sweeps", inner}, {"max_outer", max_outer}, {"tol", num(tol)}};
        j["criterion"] = {{"kind", "fixed_ranks"},
                          {"ranks", index_array(opt.ranks.empty() ? std::vector<index_t>(opt.shape.size() - 1, 2) : opt.ranks)}};
        j["residuals"] = num_array(r.residuals);
        j["result"] = {{"outer_iterations", r.outer_iterations}, {"converged", r.converged}};
        json m;
        double y2 = 0.0;
        for (double v : y) y2 += v * v;
        m["final_relative_residual"] = r.residuals.empty() || y2 == 0 ? json(nullptr) : num(r.residuals.back() / y2);
        if (!truth.empty()) {
            const auto sm = match_sources(truth, r.sources);
            m["sae"] = num_array(sm.sae);
            m["mean_sae"] = num(sm.mean);
            m["assignment"] = index_array(sm.assignment);
        }
        j["metrics"] = m;
        finish_report(j, ctx);
    }
};

struct BenchCmd {
    SignalSource src;
    std::string algos = "ttsvd,ascu1,adcu";
    index_t seeds = 10;
    std::string out;
    CritOpts crit;
    SweepOpts sweep;

    void add(CLI::App& app) {
        auto* c = app.add_subcommand("bench", "Monte-Carlo comparison over noise seeds; aggregate CSV");
        c->add_option("--kind", src.kind, "signal: damped (x5), x1, x2, x3, x4")->capture_default_str();
        c->add_option("--K", src.length, "signal length")->capture_default_str();
        c->add_option("--snr", src.snr, "SNR in dB")->required();
        c->add_option("--seed", src.seed, "first seed")->capture_default_str();
        c->add_option("--seeds", seeds, "number of seeds")->capture_default_str();
        c->add_option("--algos", algos, "comma-separated algorithm ids")->capture_default_str();
        c->add_option("--csv,-o", out, "aggregate CSV output (default: stdout after the report)");
        crit.add(c);
        c->add_option("--max-sweeps", sweep.max_sweeps, "sweep limit")->capture_default_str();
        c->add_option("--tol", sweep.tol, "relative change of the error between sweeps")->capture_default_str();
    }

    void run(Context& ctx) {
        const auto names = split(algos);
        if (names.empty()) throw UsageError("--algos is empty");
        for (const auto& n : names)
            if (n != "ttsvd") {
                SweepOpts s = sweep;
                s.algo = n;
                s.schedule();
            }
        const SignalKind kind = parse_signal_kind(src.kind);
        const Shape sh = default_signal_shape(src.length);
        struct Acc {
            double sae = 0, delta = 0, delta_clean = 0, ranks = 0;
            index_t met = 0;
        };
        std::map<std::string, Acc> acc;
        json runs = json::array();
        for (index_t i = 0; i < seeds; ++i) {
            SignalSpec spec;
            spec.kind = kind;
            spec.length = src.length;
            spec.snr_db = src.snr;
            spec.seed = src.seed + i;
            const auto s = gen_signal(spec);
            const DenseTensor t = tensorize_signal(s.noisy, sh);
            const auto c = crit.any() ? crit.get(sh.size() - 1, s.sigma2 * static_cast<double>(src.length))
                                      : TruncationCriterion{AccuracyBudget{s.sigma2 * static_cast<double>(src.length)}};
            for (const auto& n : names) {
                SweepOpts so = sweep;
                so.algo = n;
                const auto r = run_decomposition(t, c, so);
                const auto xhat = tt_full(r.tt).values();
                require_finite(xhat, "approximation");
                const double sa = sae(s.clean, xhat);
                const double d = relative_error(s.noisy, xhat), dc = relative_error(s.clean, xhat);
                bool met = true;
                if (const auto* b = std::get_if<AccuracyBudget>(&c)) met = sq_err(s.noisy, xhat) <= b->eps2;
                auto& a = acc[n];
                a.sae += sa / static_cast<double>(seeds);
                a.delta += d / static_cast<double>(seeds);
                a.delta_clean += dc / static_cast<double>(seeds);
                a.ranks += static_cast<double>(r.tt.rank_sum()) / static_cast<double>(seeds);
                a.met += met;
                runs.push_back({{"seed", spec.seed}, {"algorithm", n}, {"sae", num(sa)}, {"delta", num(d)},
                                {"delta_clean", num(dc)}, {"ranks", index_array(r.tt.ranks())}, {"budget_met", met}});
            }
        }
        ctx.timer.lap("bench");
        std::ostringstream csv;
        csv << std::setprecision(10) << "algorithm,runs,mean_sae_db,mean_delta,mean_delta_clean,mean_rank_sum,budget_met\n";
        json agg = json::array();
        for (const auto& n : names) {
            const auto& a = acc[n];
            csv << n << ',' << seeds << ',' << a.sae << ',' << a.delta << ',' << a.delta_clean << ',' << a.ranks << ','
                << a.met << '\n';
            agg.push_back({{"algorithm", n}, {"runs", seeds}, {"mean_sae", num(a.sae)}, {"mean_delta", num(a.delta)},
                           {"mean_delta_clean", num(a.delta_clean)}, {"mean_rank_sum", num(a.ranks)},
                           {"budget_met", a.met}});
        }
        if (!out.empty()) {
            std::ofstream f(out, std::ios::binary);
            if (!f) throw IoError("cannot create " + out);
            f << csv.str();
            if (!f.flush()) throw IoError("write failed: " + out);
        }
        json j = new_report(ctx, "bench");
        j["inputs"] = {{"generated", to_string(kind)}, {"length", src.length}, {"snr_db", num(src.snr)},
                       {"first_seed", src.seed}, {"seeds", seeds}, {"shape", index_array(sh)}};
        j["output"] = out.empty() ? json(nullptr) : json(out);
        j["algorithm"] = names;
        j["schedule"] = {{"max_sweeps", sweep.max_sweeps}, {"tol", num(sweep.tol)}};
        j["criterion"] = crit.any() ? json(crit.ranks.empty() ? (crit.eps_rel ? "relative_accuracy" : "accuracy_budget") : "fixed_ranks")
                                    : json("accuracy_budget");
        j["runs"] = runs;
        j["metrics"] = {{"aggregate", agg}};
        if (out.empty() && (ctx.report_path.empty() || ctx.report_path == "-")) {
            // stdout carries the CSV only; the report needs --report.
            std::cout << csv.str();
            return;
        }
        finish_report(j, ctx);
        if (out.empty()) std::cout << csv.str();
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-train decomposition toolkit"};
    app.require_subcommand(1);
    Context ctx;
    for (int i = 1; i < argc; ++i) ctx.argv.emplace_back(argv[i]);
    app.add_option("--report", ctx.report_path, "write the JSON report here instead of stdout");
    app.add_flag("--timings", ctx.timings, "include wall-clock timings (reports are no longer byte-reproducible)");

    DecomposeCmd decompose;
    RoundCmd round;
    DenoiseSignalCmd dsig;
    DenoiseImageCmd dimg;
    BssCmd bss;
    BenchCmd bench;
    decompose.add(app);
    round.add(app);
    dsig.add(app);
    dimg.add(app);
    bss.add(app);
    bench.add(app);
    app.fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    try {
        if (app.got_subcommand("decompose")) decompose.run(ctx);
        else if (app.got_subcommand("round")) round.run(ctx);
        else if (app.got_subcommand("denoise-signal")) dsig.run(ctx);
        else if (app.got_subcommand("denoise-image")) dimg.run(ctx);
        else if (app.got_subcommand("bss")) bss.run(ctx);
        else if (app.got_subcommand("bench")) bench.run(ctx);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
