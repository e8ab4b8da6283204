#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "../amcu.hpp"
#include "../tt_decomp.hpp"
#include "metrics.hpp"
#include "signals.hpp"

namespace ttd {

enum class BssSolver { ascu, ttsvd };

inline BssSolver parse_bss_solver(const std::string& s) {
    if (s == "ascu" || s == "ascu1") return BssSolver::ascu;
    if (s == "ttsvd") return BssSolver::ttsvd;
    throw DimensionError("unknown BSS solver: " + s);
}

struct BssOptions {
    index_t sources = 3;
    Shape shape;                ///< tensorization; default_signal_shape(K) when empty
    std::vector<index_t> ranks; ///< per-source TT-ranks; all 2 when empty
    BssSolver solver = BssSolver::ascu;
    index_t inner_sweeps = 2;
    index_t max_outer = 200;
    double tol = 1e-9; ///< relative change of the global residual
};

struct BssResult {
    std::vector<std::vector<double>> sources;
    std::vector<double> residuals; ///< ‖Y - Σ X_r‖² after every outer iteration
    index_t outer_iterations = 0;
    bool converged = false;
};

/**
 * Sequential residual fitting: every source X_r is refit to
 * Y - Σ_{s≠r} X_s at fixed TT-ranks. The ASCU solver warm-starts from the
 * previous X_r; the TT-SVD solver recomputes it from scratch.
 */
inline BssResult bss_single_mixture(std::span<const double> y, const BssOptions& opt) {
    const Shape shape = opt.shape.empty() ? default_signal_shape(y.size()) : opt.shape;
    detail::require(shape_size(shape) == y.size(), "bss: shape does not match signal length");
    detail::require(opt.sources >= 1, "bss: need at least one source");
    const index_t bonds = shape.size() - 1;
    const std::vector<index_t> ranks = opt.ranks.empty() ? std::vector<index_t>(bonds, 2) : opt.ranks;
    detail::require(ranks.size() == bonds, "bss: rank count does not match tensorization");

    const index_t k_len = y.size();
    std::vector<std::vector<double>> est(opt.sources, std::vector<double>(k_len, 0.0));
    std::vector<std::optional<TTTensor>> models(opt.sources);
    BssResult res;
    const FixedRanks crit{ranks};
    double prev = 0.0;
    for (index_t it = 0; it < opt.max_outer; ++it) {
        for (index_t r = 0; r < opt.sources; ++r) {
            std::vector<double> target(y.begin(), y.end());
            for (index_t s = 0; s < opt.sources; ++s)
                if (s != r)
                    for (index_t k = 0; k < k_len; ++k) target[k] -= est[s][k];
            const DenseTensor yr(shape, std::move(target));
            TTTensor x;
            if (opt.solver == BssSolver::ttsvd || !models[r]) {
                x = tt_svd(yr, crit);
            }
            if (opt.solver == BssSolver::ascu) {
                AmcuOptions ao;
                ao.init = models[r] ? *models[r] : x;
                ao.schedule.stop.max_sweeps = opt.inner_sweeps;
                ao.schedule.stop.tol = 0.0;
                x = ascu_one_side(yr, crit, ao).tt;
            }
            est[r] = tt_full(x).values();
            models[r] = std::move(x);
        }
        double res2 = 0.0;
        for (index_t k = 0; k < k_len; ++k) {
            double v = y[k];
            for (index_t s = 0; s < opt.sources; ++s) v -= est[s][k];
            res2 += v * v;
        }
        res.residuals.push_back(res2);
        res.outer_iterations = it + 1;
        if (it > 0 && std::abs(prev - res2) <= opt.tol * prev) {
            res.converged = true;
            break;
        }
        prev = res2;
    }
    res.sources = std::move(est);
    return res;
}

/// Damped sources exp(-5t/(rK)) sin(2π f_r t / fs + rπ/3), r = 1..R, t = 0..K-1.
inline std::vector<std::vector<double>> bss_sources(index_t k_len, const std::vector<double>& freqs,
                                                    double fs = 200.0) {
    std::vector<std::vector<double>> out;
    const double kd = static_cast<double>(k_len);
    for (index_t r = 1; r <= freqs.size(); ++r) {
        std::vector<double> x(k_len);
        const double rd = static_cast<double>(r);
        for (index_t k = 0; k < k_len; ++k) {
            const double t = static_cast<double>(k);
            x[k] = std::exp(-5.0 * t / (rd * kd)) *
                   std::sin(2.0 * std::numbers::pi * freqs[r - 1] / fs * t + rd * std::numbers::pi / 3.0);
        }
        out.push_back(std::move(x));
    }
    return out;
}

struct SaeMatch {
    std::vector<index_t> assignment; ///< estimate index matched to each true source
    std::vector<double> sae;
    double mean = 0.0;
};

/// Best mean SAE over all assignments of estimates to true sources.
inline SaeMatch match_sources(const std::vector<std::vector<double>>& truth,
                              const std::vector<std::vector<double>>& est) {
    detail::require(truth.size() == est.size() && !truth.empty(), "match_sources: count mismatch");
    const index_t n = truth.size();
    std::vector<std::vector<double>> table(n, std::vector<double>(n));
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j) {
            const bool zero = std::all_of(est[j].begin(), est[j].end(), [](double v) { return v == 0.0; });
            table[i][j] = zero ? -db_cap : sae(truth[i], est[j]);
        }
    std::vector<index_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    SaeMatch best;
    best.mean = -std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (index_t i = 0; i < n; ++i) s += table[i][perm[i]];
        s /= static_cast<double>(n);
        if (s > best.mean) {
            best.mean = s;
            best.assignment = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (index_t i = 0; i < n; ++i) best.sae.push_back(table[i][best.assignment[i]]);
    return best;
}

} // namespace ttd
