#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "ttd/apps/bss.hpp"
#include "ttd/apps/image.hpp"
#include "ttd/apps/metrics.hpp"
#include "ttd/apps/noise.hpp"
#include "ttd/apps/signals.hpp"
#include "ttd/io.hpp"

using namespace ttd;

namespace {

Image random_image(index_t h, index_t w, index_t c, Rng& rng) {
    Image img(h, w, c);
    for (auto& v : img.data) v = std::floor(rng.uniform(0.0, 256.0));
    return img;
}

Image smooth_image(index_t h, index_t w) {
    Image img(h, w, 3);
    for (index_t r = 0; r < h; ++r)
        for (index_t c = 0; c < w; ++c) {
            img.at(r, c, 0) = 40.0 + 2.0 * r + 1.0 * c;
            img.at(r, c, 1) = 100.0 + 0.5 * r + 1.5 * c;
            img.at(r, c, 2) = 200.0 - 1.0 * r - 0.5 * c;
        }
    return img;
}

double variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

} // namespace

// --- signals ---

TEST(Signals, InfiniteSnrIsClean) {
    SignalSpec spec;
    spec.length = 256;
    const auto s = gen_signal(spec);
    EXPECT_EQ(s.noisy, s.clean);
    EXPECT_EQ(s.sigma2, 0.0);
}

TEST(Signals, RealizedSnrIsExact) {
    for (auto kind : {SignalKind::damped, SignalKind::x1, SignalKind::x2, SignalKind::x3, SignalKind::x4}) {
        for (double snr : {-20.0, -10.0, 0.0, 10.0}) {
            SignalSpec spec;
            spec.kind = kind;
            spec.length = 4096;
            spec.snr_db = snr;
            spec.seed = 5;
            const auto s = gen_signal(spec);
            double xx = 0.0, ee = 0.0;
            for (index_t i = 0; i < s.clean.size(); ++i) {
                xx += s.clean[i] * s.clean[i];
                ee += (s.noisy[i] - s.clean[i]) * (s.noisy[i] - s.clean[i]);
            }
            EXPECT_NEAR(10.0 * std::log10(xx / ee), snr, 1e-9);
            EXPECT_NEAR(s.sigma2 * 4096.0, ee, 1e-9 * ee);
        }
    }
}

TEST(Signals, UnknownKindThrows) { EXPECT_THROW(parse_signal_kind("x9"), DimensionError); }

TEST(Signals, DefaultShapes) {
    EXPECT_EQ(default_signal_shape(1 << 14), (Shape{4, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 4}));
    const Shape s = default_signal_shape(3 * (1 << 16));
    EXPECT_EQ(s.size(), 16u);
    EXPECT_EQ(s.back(), 6u);
    for (index_t i = 0; i + 1 < s.size(); ++i) EXPECT_EQ(s[i], 2u);
}

TEST(Signals, TensorizeRoundTrip) {
    Rng rng(1);
    const auto y = rng.normals(1 << 10);
    const Shape shape = default_signal_shape(y.size());
    EXPECT_EQ(detensorize(tensorize_signal(y, shape)), y);
    EXPECT_THROW(tensorize_signal(y, {2, 2}), DimensionError);
}

TEST(Signals, DampedSinusoidRankTwoAtDeskScale) {
    SignalSpec spec;
    spec.length = 1 << 10;
    const auto x = clean_signal(spec);
    const auto z = tt_svd(tensorize_signal(x, default_signal_shape(spec.length)), RelativeAccuracy{1e-8});
    EXPECT_EQ(z.ranks(), std::vector<index_t>(7, 2));
}

// --- metrics ---

TEST(Metrics, RelativeError) {
    const std::vector<double> y{1, -2, 3}, zero{0, 0, 0}, neg{-1, 2, -3};
    EXPECT_EQ(relative_error(y, y), 0.0);
    EXPECT_EQ(relative_error(y, zero), 1.0);
    EXPECT_EQ(relative_error(y, neg), 4.0);
    EXPECT_THROW(relative_error(zero, y), DimensionError);
}

TEST(Metrics, SaeReferenceValues) {
    const std::vector<double> a{1, 0}, b{0, 1}, c{-1, 0};
    EXPECT_NEAR(sae(a, b), -20.0 * std::log10(std::numbers::pi / 2), 1e-12);
    EXPECT_NEAR(sae(a, b), -3.922, 1e-3);
    EXPECT_NEAR(sae(a, c), -9.943, 1e-3);
    EXPECT_EQ(sae(a, a), db_cap);
    EXPECT_THROW(sae(a, std::vector<double>{0, 0}), DimensionError);
}

TEST(Metrics, InvarianceProperty) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const index_t n = static_cast<index_t>(rng.integer(2, 30));
        auto x = rng.normals(n), y = rng.normals(n);
        const double s0 = sae(x, y), d0 = relative_error(x, y);
        std::vector<double> ys = y;
        const double scale = rng.uniform(0.1, 10.0);
        for (auto& v : ys) v *= scale;
        EXPECT_NEAR(sae(x, ys), s0, 1e-9);
        std::vector<index_t> p(n);
        std::iota(p.begin(), p.end(), 0);
        for (index_t i = n; i > 1; --i) std::swap(p[i - 1], p[static_cast<index_t>(rng.integer(0, static_cast<long long>(i) - 1))]);
        std::vector<double> xp(n), yp(n);
        for (index_t i = 0; i < n; ++i) xp[i] = x[p[i]], yp[i] = y[p[i]];
        EXPECT_NEAR(sae(xp, yp), s0, 1e-9);
        EXPECT_NEAR(relative_error(xp, yp), d0, 1e-12 * std::max(1.0, d0));
    }
}

TEST(Metrics, IdenticalImages) {
    Rng rng(3);
    const Image img = random_image(20, 24, 3, rng);
    const auto m = image_metrics(img, img);
    EXPECT_EQ(m.mse, 0.0);
    EXPECT_EQ(m.psnr, db_cap);
    EXPECT_NEAR(m.ssim, 1.0, 1e-12);
    EXPECT_THROW(image_metrics(img, Image(20, 23, 3)), DimensionError);
}

TEST(Metrics, PsnrTableConsistency) {
    EXPECT_NEAR(psnr_from_mse(35.11), 32.68, 0.01);
    EXPECT_NEAR(psnr_from_mse(27.37), 33.76, 0.01);
}

TEST(Metrics, SsimDropsWithNoise) {
    Rng rng(4);
    const Image img = smooth_image(32, 32);
    const Image noisy = add_image_noise(img, 10.0, rng);
    const double s = ssim(img, noisy);
    EXPECT_LT(s, 1.0);
    EXPECT_GT(s, -1.0);
}

// --- noise estimation and prefilter ---

TEST(Noise, PureNoiseMonteCarlo) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Image img(64, 64, 3);
        for (auto& v : img.data) v = rng.normal();
        const double s = std::sqrt(estimate_noise(img));
        EXPECT_GE(s, 0.75);
        EXPECT_LE(s, 1.25);
    }
}

TEST(Noise, SmoothImageHasSmallEstimate) {
    const Image img = smooth_image(64, 64);
    double lo = 1e9, hi = -1e9;
    for (double v : img.data) lo = std::min(lo, v), hi = std::max(hi, v);
    EXPECT_LE(std::sqrt(estimate_noise(img)), 0.05 * (hi - lo));
}

TEST(Noise, ScaleEquivariance) {
    Rng rng(5);
    Image img(48, 48, 3);
    for (auto& v : img.data) v = rng.normal();
    Image img2 = img;
    for (auto& v : img2.data) v *= 2.0;
    EXPECT_NEAR(std::sqrt(estimate_noise(img2)), 2.0 * std::sqrt(estimate_noise(img)), 1e-12);
}

TEST(Noise, WithinQuarterOfTrueSigmaAcrossSnr) {
    const Image clean = smooth_image(64, 64);
    for (double snr : {0.0, 5.0, 10.0, 20.0}) {
        Rng rng(static_cast<std::uint64_t>(snr) + 100);
        double s2 = 0.0;
        const Image noisy = add_image_noise(clean, snr, rng, &s2);
        const double est = std::sqrt(estimate_noise(noisy));
        EXPECT_NEAR(est, std::sqrt(s2), 0.25 * std::sqrt(s2)) << snr;
    }
}

TEST(Noise, SignalEstimator) {
    Rng rng(6);
    std::vector<double> v = rng.normals(1 << 14);
    for (auto& x : v) x *= 3.0;
    EXPECT_NEAR(std::sqrt(estimate_noise(v)), 3.0, 0.15);
}

TEST(Prefilter, OffIsIdentityAndZeroStaysZero) {
    Rng rng(7);
    const Image img = random_image(20, 20, 3, rng);
    EXPECT_EQ(dct_prefilter(img, 100.0, false).data, img.data);
    const Image z(20, 20, 3);
    for (double v : dct_prefilter(z, 4.0).data) EXPECT_EQ(v, 0.0);
}

TEST(Prefilter, ReducesVarianceOfPureNoise) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        Image img(32, 32, 3);
        for (auto& v : img.data) v = rng.normal();
        EXPECT_LT(variance(dct_prefilter(img, 1.0).data), variance(img.data));
    }
}

TEST(Prefilter, IdempotentOnSmoothImage) {
    const Image img = smooth_image(40, 40);
    const Image once = dct_prefilter(img, 1.0);
    const Image twice = dct_prefilter(once, 1.0);
    for (index_t i = 0; i < once.data.size(); ++i) EXPECT_NEAR(twice.data[i], once.data[i], 1e-6);
}

// --- image tensorization and denoising ---

TEST(BlockTensorize, ZeroNeighbourhoodIsTheBlock) {
    Rng rng(10);
    const Image img = random_image(10, 12, 3, rng);
    PatchConfig cfg;
    cfg.h = 4;
    cfg.w = 5;
    cfg.d = 0;
    const DenseTensor t = block_tensorize(img, 2, 3, cfg);
    EXPECT_EQ(t.shape(), (Shape{4, 5, 3, 1, 1}));
    for (index_t a = 0; a < 4; ++a)
        for (index_t b = 0; b < 5; ++b)
            for (index_t ch = 0; ch < 3; ++ch) EXPECT_EQ(t(a, b, ch, 0, 0), img.at(2 + a, 3 + b, ch));
}

TEST(BlockTensorize, ConstantImageIsRankOne) {
    Image img(16, 16, 3);
    for (auto& v : img.data) v = 77.0;
    PatchConfig cfg;
    cfg.h = cfg.w = 4;
    cfg.d = 1;
    const auto z = tt_svd(block_tensorize(img, 5, 5, cfg), RelativeAccuracy{1e-6});
    EXPECT_EQ(z.ranks(), (std::vector<index_t>{1, 1, 1, 1}));
}

TEST(BlockTensorize, IndexOracle) {
    Rng rng(11);
    const Image img = random_image(9, 9, 3, rng);
    PatchConfig cfg;
    cfg.h = cfg.w = 2;
    cfg.d = 1;
    for (index_t r = 1; r + 2 + 1 <= 9; ++r)
        for (index_t c = 1; c + 2 + 1 <= 9; ++c) {
            const DenseTensor t = block_tensorize(img, r, c, cfg);
            oracle::for_each_index(t.shape(), [&](const std::vector<index_t>& i) {
                const index_t pr = r + i[0] + i[3] - 1, pc = c + i[1] + i[4] - 1;
                ASSERT_EQ(oracle::get(t, i), img.at(pr, pc, i[2]));
            });
        }
    EXPECT_THROW(block_tensorize(img, 0, 1, cfg), DimensionError);
    EXPECT_THROW(block_tensorize(img, 7, 1, cfg), DimensionError);
}

TEST(Denoise, IdentityApproximatorReturnsInput) {
    Rng rng(12);
    const Image img = random_image(20, 18, 3, rng);
    PatchConfig cfg;
    cfg.h = cfg.w = 4;
    cfg.d = 1;
    const auto r = denoise_image(img, cfg, DenoiseAlgo::identity);
    EXPECT_EQ(r.image.data, img.data);
}

TEST(Denoise, ExactBlocksWithoutNoise) {
    Rng rng(13);
    const Image img = random_image(16, 16, 3, rng);
    PatchConfig cfg;
    cfg.h = cfg.w = 4;
    cfg.d = 1;
    cfg.eps2 = 1e-20;
    for (auto algo : {DenoiseAlgo::ttsvd, DenoiseAlgo::ascu1}) {
        const auto r = denoise_image(img, cfg, algo);
        for (index_t i = 0; i < img.data.size(); ++i) ASSERT_NEAR(r.image.data[i], img.data[i], 1e-8);
    }
}

TEST(Denoise, ConstantImageHasFlatRankMap) {
    Image img(16, 16, 3);
    for (auto& v : img.data) v = 128.0;
    PatchConfig cfg;
    cfg.h = cfg.w = 4;
    cfg.d = 1;
    cfg.eps2 = 1e-6;
    const auto r = denoise_image(img, cfg, DenoiseAlgo::ascu1);
    for (double v : r.rank_map.values) EXPECT_DOUBLE_EQ(v, 4.0);
    EXPECT_DOUBLE_EQ(r.mean_rank_sum, 4.0);
}

TEST(Denoise, RankMapBoundedBelowAndThreadIndependent) {
    Rng rng(14);
    const Image clean = smooth_image(20, 20);
    const Image noisy = add_image_noise(clean, 10.0, rng);
    PatchConfig cfg;
    cfg.h = cfg.w = 4;
    cfg.d = 1;
    cfg.eps2 = cfg.budget_for(estimate_noise(noisy));
    DenoiseOptions one, many;
    one.threads = 1;
    many.threads = 3;
    const auto a = denoise_image(noisy, cfg, DenoiseAlgo::ascu1, one);
    const auto b = denoise_image(noisy, cfg, DenoiseAlgo::ascu1, many);
    EXPECT_EQ(a.image.data, b.image.data);
    EXPECT_EQ(a.rank_map.values, b.rank_map.values);
    for (double v : a.rank_map.values) EXPECT_GE(v, 4.0);
}

TEST(Denoise, UnsupportedAlgorithmThrows) { EXPECT_THROW(parse_denoise_algo("ksvd"), DimensionError); }

// --- single-mixture separation ---

TEST(Bss, SingleSourceNoiseless) {
    const auto src = bss_sources(1 << 12, {10.0});
    BssOptions opt;
    opt.sources = 1;
    opt.max_outer = 3;
    const auto r = bss_single_mixture(src[0], opt);
    EXPECT_GE(sae(src[0], r.sources[0]), 100.0);
}

TEST(Bss, DisjointSourcesReachNoiseFloorAfterOnePass) {
    // Orthogonal sources: one damped mode split across the two halves of the
    // last tensor mode, so the mixture itself has ranks (2, ..., 2).
    const index_t k_len = 3 << 10;
    const index_t half = k_len / 2;
    std::vector<std::vector<double>> src(2, std::vector<double>(k_len, 0.0));
    for (index_t k = 0; k < k_len; ++k) {
        const double t = static_cast<double>(k);
        const double g = std::exp(-2.0 * t / k_len) * std::sin(2.0 * std::numbers::pi * 0.05 * t + 0.4);
        (k < half ? src[0][k] : src[1][k]) = k < half ? g : 3.0 * g;
    }
    double dot = 0.0, y2 = 0.0;
    std::vector<double> y(k_len);
    for (index_t k = 0; k < k_len; ++k) {
        y[k] = src[0][k] + src[1][k];
        dot += src[0][k] * src[1][k];
        y2 += y[k] * y[k];
    }
    ASSERT_EQ(dot, 0.0);
    for (auto solver : {BssSolver::ttsvd, BssSolver::ascu}) {
        BssOptions opt;
        opt.sources = 2;
        opt.solver = solver;
        opt.max_outer = 1;
        const auto r = bss_single_mixture(y, opt);
        ASSERT_EQ(r.residuals.size(), 1u);
        EXPECT_LE(r.residuals[0], 1e-20 * y2);
    }
}

TEST(Bss, AscuResidualIsNonincreasing) {
    const index_t k_len = 3 << 10;
    const auto src = bss_sources(k_len, {10.0, 10.1, 10.2});
    std::vector<double> mix(k_len, 0.0);
    for (const auto& s : src)
        for (index_t k = 0; k < k_len; ++k) mix[k] += s[k];
    Rng rng(3);
    const auto noisy = add_noise(mix, -10.0, rng).noisy;
    BssOptions opt;
    opt.max_outer = 30;
    opt.tol = 0.0;
    const auto r = bss_single_mixture(noisy, opt);
    double y2 = 0.0;
    for (double v : noisy) y2 += v * v;
    for (index_t i = 1; i < r.residuals.size(); ++i)
        EXPECT_LE(r.residuals[i], r.residuals[i - 1] + 1e-10 * y2) << i;
}

TEST(Bss, MatchingPicksBestPermutation) {
    const std::vector<std::vector<double>> t{{1, 0, 0}, {0, 1, 0}};
    const std::vector<std::vector<double>> e{{0, 2, 0}, {3, 0.1, 0}};
    const auto m = match_sources(t, e);
    EXPECT_EQ(m.assignment, (std::vector<index_t>{1, 0}));
    EXPECT_EQ(m.sae[1], db_cap);
}

TEST(Bss, InfeasibleShapeThrows) {
    BssOptions opt;
    opt.shape = {2, 2, 2};
    EXPECT_THROW(bss_single_mixture(std::vector<double>(12, 1.0), opt), DimensionError);
}

// --- formats ---

TEST(Io, Ttb1RoundTripAndLayout) {
    Rng rng(20);
    const DenseTensor t = oracle::random_tensor({2, 3, 4}, rng);
    std::stringstream ss;
    io::write_ttb1(ss, t);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 4u + 8u + 24u + 8u * 24u);
    EXPECT_EQ(bytes.substr(0, 4), "TTB1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3u);
    for (int i = 5; i < 12; ++i) EXPECT_EQ(bytes[i], 0);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);
    EXPECT_EQ(io::read_ttb1(ss), t);
}

TEST(Io, Ttb1RejectsCorruptInput) {
    std::stringstream bad("XXXX");
    EXPECT_THROW(io::read_ttb1(bad), IoError);
    Rng rng(21);
    std::stringstream ss;
    io::write_ttb1(ss, oracle::random_tensor({3, 3}, rng));
    std::stringstream cut(ss.str().substr(0, ss.str().size() - 5));
    EXPECT_THROW(io::read_ttb1(cut), IoError);
    EXPECT_THROW(io::load_ttb1("/nonexistent/x.ttb1"), IoError);
}

TEST(Io, Ttx1RoundTrip) {
    Rng rng(22);
    const TTTensor x = oracle::random_tt({3, 4, 2}, {2, 3}, rng);
    std::stringstream ss;
    io::write_ttx1(ss, x);
    const TTTensor y = io::read_ttx1(ss);
    ASSERT_EQ(y.order(), 3u);
    for (index_t n = 0; n < 3; ++n) EXPECT_EQ(y.core(n), x.core(n));
}

TEST(Io, Ttx1RejectsRankMismatch) {
    std::stringstream ss;
    ss.write("TTX1", 4);
    const auto put = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) ss.put(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put(2);
    put(1), put(2), put(2);
    for (int i = 0; i < 4; ++i) put(0);
    put(3), put(2), put(1);
    for (int i = 0; i < 6; ++i) put(0);
    EXPECT_THROW(io::read_ttx1(ss), IoError);
}

TEST(Io, CsvRoundTripIsExact) {
    Rng rng(23);
    const auto v = rng.normals(50);
    std::stringstream ss;
    io::write_csv(ss, v);
    EXPECT_EQ(io::read_csv(ss), v);
    std::stringstream bad("1.0\nabc\n");
    EXPECT_THROW(io::read_csv(bad), IoError);
    std::stringstream commented("# header\n1.5\n\n2.5, ignored\n");
    EXPECT_EQ(io::read_csv(commented), (std::vector<double>{1.5, 2.5}));
}

TEST(Io, PnmRoundTrip) {
    Rng rng(24);
    const Image img = random_image(5, 7, 3, rng);
    std::stringstream ss;
    io::write_ppm(ss, img);
    const Image back = io::read_ppm(ss);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.data, img.data);
    const Image gray = random_image(4, 3, 1, rng);
    std::stringstream gs;
    io::write_pgm(gs, gray);
    EXPECT_EQ(io::read_pgm(gs).data, gray.data);
    std::stringstream bad("P6\n# c\n2 2\n65535\n");
    EXPECT_THROW(io::read_ppm(bad), IoError);
}

// --- RNG ---

TEST(Rng, SplitMixReferenceOutput) {
    Rng rng(0);
    EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFull);
}

TEST(Rng, DeterministicAndWellDistributed) {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
    Rng c(7);
    const auto v = c.normals(200000);
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    EXPECT_NEAR(m, 0.0, 0.01);
    EXPECT_NEAR(variance(v), 1.0, 0.01);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}
