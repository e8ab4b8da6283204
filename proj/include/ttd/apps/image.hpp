#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "../amcu.hpp"
#include "../io.hpp"
#include "../tt_decomp.hpp"
#include "signals.hpp"

namespace ttd {

struct PatchConfig {
    index_t h = 8, w = 8; ///< block height and width
    index_t d = 3;        ///< neighbour width
    double eps2 = 0.0;    ///< per-block squared-error budget

    Shape tensor_shape(index_t channels = 3) const { return {h, w, channels, 2 * d + 1, 2 * d + 1}; }
    index_t tensor_size(index_t channels = 3) const { return shape_size(tensor_shape(channels)); }
    /// ε² = σ² · h·w·C·(2d+1)².
    double budget_for(double sigma2, index_t channels = 3) const {
        return sigma2 * static_cast<double>(tensor_size(channels));
    }
};

/// Y(:,:,:,d+i,d+j) = image block anchored at (r+i, c+j), i, j in [-d, d].
inline DenseTensor block_tensorize(const Image& img, index_t r, index_t c, const PatchConfig& cfg) {
    detail::require(r >= cfg.d && c >= cfg.d && r + cfg.h + cfg.d <= img.height &&
                        c + cfg.w + cfg.d <= img.width,
                    "block_tensorize: neighbourhood of (" + std::to_string(r) + ", " +
                        std::to_string(c) + ") leaves the image");
    DenseTensor t(cfg.tensor_shape(img.channels));
    auto v = t.data();
    index_t k = 0;
    const index_t span = 2 * cfg.d + 1;
    for (index_t j = 0; j < span; ++j)
        for (index_t i = 0; i < span; ++i)
            for (index_t ch = 0; ch < img.channels; ++ch)
                for (index_t b = 0; b < cfg.w; ++b)
                    for (index_t a = 0; a < cfg.h; ++a)
                        v[k++] = img.at(r + i - cfg.d + a, c + j - cfg.d + b, ch);
    return t;
}

enum class DenoiseAlgo { identity, ttsvd, ascu1, ascu2, adcu, atcu };

inline DenoiseAlgo parse_denoise_algo(const std::string& s) {
    if (s == "identity") return DenoiseAlgo::identity;
    if (s == "ttsvd") return DenoiseAlgo::ttsvd;
    if (s == "ascu1" || s == "ascu") return DenoiseAlgo::ascu1;
    if (s == "ascu2") return DenoiseAlgo::ascu2;
    if (s == "adcu") return DenoiseAlgo::adcu;
    if (s == "atcu") return DenoiseAlgo::atcu;
    throw DimensionError("unsupported algorithm id: " + s);
}

/// Dense approximation of one block tensor together with its TT-rank sum.
struct BlockApprox {
    DenseTensor dense;
    index_t rank_sum = 0;
};

using BlockApproximator = std::function<BlockApprox(const DenseTensor&, double eps2)>;

inline BlockApproximator make_approximator(DenoiseAlgo algo, StopRule stop = {}) {
    if (algo == DenoiseAlgo::identity)
        return [](const DenseTensor& y, double) { return BlockApprox{y, 0}; };
    return [algo, stop](const DenseTensor& y, double eps2) {
        const AccuracyBudget crit{eps2};
        TTTensor x;
        AmcuOptions opt;
        opt.schedule.stop = stop;
        switch (algo) {
        case DenoiseAlgo::ttsvd: x = tt_svd(y, crit); break;
        case DenoiseAlgo::ascu1: x = ascu_one_side(y, crit, opt).tt; break;
        case DenoiseAlgo::ascu2: x = ascu_two_side(y, crit, opt).tt; break;
        case DenoiseAlgo::adcu: x = adcu(y, crit, 1, opt).tt; break;
        case DenoiseAlgo::atcu: x = atcu(y, crit, 2, opt).tt; break;
        default: break;
        }
        return BlockApprox{tt_full(x), x.rank_sum()};
    };
}

/// Per-pixel mean of the summed TT-ranks of the block models covering it.
struct RankMap {
    index_t height = 0, width = 0;
    std::vector<double> values;

    /// Gray image scaled so that the largest value maps to 255.
    Image to_image() const {
        Image g(height, width, 1);
        const double mx = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
        for (index_t i = 0; i < values.size(); ++i) g.data[i] = mx > 0 ? 255.0 * values[i] / mx : 0.0;
        return g;
    }
};

struct DenoiseResult {
    Image image;
    RankMap rank_map;
    index_t blocks = 0;
    double mean_rank_sum = 0.0;
};

struct DenoiseOptions {
    unsigned threads = 0; ///< 0: hardware concurrency
};

/**
 * Approximates every interior block tensor (anchors on a stride-1 grid) and
 * averages, per pixel, all block reconstructions that cover it. Each anchor
 * row is solved independently; rows are reduced in order, so the output does
 * not depend on the thread count.
 */
inline DenoiseResult denoise_image(const Image& noisy, const PatchConfig& cfg,
                                   const BlockApproximator& approx, const DenoiseOptions& dopt = {}) {
    detail::require(noisy.height >= cfg.h + 2 * cfg.d && noisy.width >= cfg.w + 2 * cfg.d,
                    "denoise_image: image smaller than one block neighbourhood");
    const index_t r_lo = cfg.d, r_hi = noisy.height - cfg.h - cfg.d;
    const index_t c_lo = cfg.d, c_hi = noisy.width - cfg.w - cfg.d;
    const index_t n_rows = r_hi - r_lo + 1, n_cols = c_hi - c_lo + 1;
    const index_t span = 2 * cfg.d + 1;

    std::vector<double> sum(noisy.data.size(), 0.0), rank_sum(noisy.height * noisy.width, 0.0);
    std::vector<double> count(noisy.height * noisy.width, 0.0);
    double total_rank = 0.0;

    unsigned threads = dopt.threads ? dopt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<index_t>(threads, n_rows));

    struct RowOut {
        std::vector<BlockApprox> blocks;
    };
    for (index_t chunk = 0; chunk < n_rows; chunk += threads) {
        const index_t chunk_end = std::min(n_rows, chunk + threads);
        std::vector<RowOut> rows(chunk_end - chunk);
        auto work = [&](index_t ri) {
            const index_t r = r_lo + chunk + ri;
            auto& out = rows[ri].blocks;
            out.reserve(n_cols);
            for (index_t c = c_lo; c <= c_hi; ++c)
                out.push_back(approx(block_tensorize(noisy, r, c, cfg), cfg.eps2));
        };
        if (rows.size() == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            std::vector<std::exception_ptr> errs(rows.size());
            for (index_t ri = 0; ri < rows.size(); ++ri)
                pool.emplace_back([&, ri] {
                    try {
                        work(ri);
                    } catch (...) {
                        errs[ri] = std::current_exception();
                    }
                });
            for (auto& t : pool) t.join();
            for (auto& e : errs)
                if (e) std::rethrow_exception(e);
        }
        for (index_t ri = 0; ri < rows.size(); ++ri) {
            const index_t r = r_lo + chunk + ri;
            for (index_t ci = 0; ci < n_cols; ++ci) {
                const index_t c = c_lo + ci;
                const BlockApprox& ba = rows[ri].blocks[ci];
                detail::require(ba.dense.size() == cfg.tensor_size(noisy.channels),
                                "denoise_image: approximation has the wrong size");
                total_rank += static_cast<double>(ba.rank_sum);
                const auto v = ba.dense.data();
                index_t k = 0;
                for (index_t j = 0; j < span; ++j)
                    for (index_t i = 0; i < span; ++i)
                        for (index_t ch = 0; ch < noisy.channels; ++ch)
                            for (index_t b = 0; b < cfg.w; ++b)
                                for (index_t a = 0; a < cfg.h; ++a) {
                                    const index_t pr = r + i - cfg.d + a, pc = c + j - cfg.d + b;
                                    sum[(pr * noisy.width + pc) * noisy.channels + ch] += v[k++];
                                    if (ch == 0) {
                                        count[pr * noisy.width + pc] += 1.0;
                                        rank_sum[pr * noisy.width + pc] += static_cast<double>(ba.rank_sum);
                                    }
                                }
            }
        }
    }

    DenoiseResult res;
    res.image = Image(noisy.height, noisy.width, noisy.channels);
    res.rank_map.height = noisy.height;
    res.rank_map.width = noisy.width;
    res.rank_map.values.assign(noisy.height * noisy.width, 0.0);
    for (index_t p = 0; p < count.size(); ++p) {
        for (index_t ch = 0; ch < noisy.channels; ++ch)
            res.image.data[p * noisy.channels + ch] =
                count[p] > 0 ? sum[p * noisy.channels + ch] / count[p] : noisy.data[p * noisy.channels + ch];
        res.rank_map.values[p] = count[p] > 0 ? rank_sum[p] / count[p] : 0.0;
    }
    res.blocks = n_rows * n_cols;
    res.mean_rank_sum = total_rank / static_cast<double>(res.blocks);
    return res;
}

inline DenoiseResult denoise_image(const Image& noisy, const PatchConfig& cfg, DenoiseAlgo algo,
                                   const DenoiseOptions& dopt = {}) {
    return denoise_image(noisy, cfg, make_approximator(algo), dopt);
}

/// Adds Gaussian noise to every channel at the given SNR (computed over all samples).
inline Image add_image_noise(const Image& clean, double snr_db, Rng& rng, double* sigma2 = nullptr) {
    auto s = add_noise(clean.data, snr_db, rng);
    Image out = clean;
    out.data = std::move(s.noisy);
    if (sigma2) *sigma2 = s.sigma2;
    return out;
}

} // namespace ttd
