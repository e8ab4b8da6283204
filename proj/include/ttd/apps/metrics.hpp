#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "../error.hpp"
#include "../io.hpp"

namespace ttd {

/// Cap used for PSNR, SAE and MSE-in-dB when the reference is matched exactly.
inline constexpr double db_cap = 300.0;

/// δ = ‖y - x̂‖² / ‖y‖².
inline double relative_error(std::span<const double> y, std::span<const double> xhat) {
    detail::require(y.size() == xhat.size(), "relative_error: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += (y[i] - xhat[i]) * (y[i] - xhat[i]);
        den += y[i] * y[i];
    }
    detail::require(den > 0.0, "relative_error: zero reference");
    return num / den;
}

/// Squared angular error -20·log10(arccos(cos θ)) in dB, capped at +300 dB.
inline double sae(std::span<const double> x, std::span<const double> xhat) {
    detail::require(x.size() == xhat.size(), "sae: length mismatch");
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xy += x[i] * xhat[i];
        xx += x[i] * x[i];
        yy += xhat[i] * xhat[i];
    }
    detail::require(xx > 0.0 && yy > 0.0, "sae: zero vector");
    const double c = std::clamp(xy / std::sqrt(xx * yy), -1.0, 1.0);
    const double ang = std::acos(c);
    if (ang <= 0.0) return db_cap;
    return std::min(db_cap, -20.0 * std::log10(ang));
}

inline double psnr_from_mse(double mse) {
    if (mse <= 0.0) return db_cap;
    return std::min(db_cap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

struct ImageMetrics {
    double mse = 0.0;
    double mse_db = 0.0; ///< 10·log10(MSE), -300 when MSE is 0
    double psnr = 0.0;
    double ssim = 0.0;
};

/// 0.299 R + 0.587 G + 0.114 B, or the single channel of a gray image.
inline std::vector<double> luma(const Image& img) {
    std::vector<double> y(img.height * img.width);
    for (index_t p = 0; p < y.size(); ++p) {
        const double* px = &img.data[p * img.channels];
        y[p] = img.channels == 3 ? 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2] : px[0];
    }
    return y;
}

/// Mean SSIM over all valid 11x11 Gaussian (σ = 1.5) windows of the luma channel.
inline double ssim(const Image& ref, const Image& est) {
    detail::require(ref.height == est.height && ref.width == est.width &&
                        ref.channels == est.channels,
                    "ssim: dimension mismatch");
    constexpr int win = 11;
    constexpr double sigma = 1.5, c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
    double g[win];
    double gs = 0.0;
    for (int i = 0; i < win; ++i) {
        g[i] = std::exp(-((i - 5) * (i - 5)) / (2 * sigma * sigma));
        gs += g[i];
    }
    for (double& v : g) v /= gs;

    const auto a = luma(ref), b = luma(est);
    const auto h = static_cast<long>(ref.height), w = static_cast<long>(ref.width);
    if (h < win || w < win) {
        // Single global window for tiny images.
        double ma = 0, mb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
        ma /= a.size(), mb /= b.size();
        double va = 0, vb = 0, cab = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
            cab += (a[i] - ma) * (b[i] - mb);
        }
        va /= a.size(), vb /= a.size(), cab /= a.size();
        return ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    double total = 0.0;
    long count = 0;
    for (long r = 0; r + win <= h; ++r)
        for (long c = 0; c + win <= w; ++c) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < win; ++i)
                for (int j = 0; j < win; ++j) {
                    const double wt = g[i] * g[j];
                    const double va = a[(r + i) * w + c + j], vb = b[(r + i) * w + c + j];
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            const double sa = saa - ma * ma, sb = sbb - mb * mb, cab = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
            ++count;
        }
    return total / static_cast<double>(count);
}

inline ImageMetrics image_metrics(const Image& ref, const Image& est) {
    detail::require(ref.height == est.height && ref.width == est.width &&
                        ref.channels == est.channels,
                    "image_metrics: dimension mismatch");
    ImageMetrics m;
    double s = 0.0;
    for (index_t i = 0; i < ref.data.size(); ++i)
        s += (ref.data[i] - est.data[i]) * (ref.data[i] - est.data[i]);
    m.mse = s / static_cast<double>(ref.data.size());
    m.mse_db = m.mse > 0.0 ? std::max(-db_cap, 10.0 * std::log10(m.mse)) : -db_cap;
    m.psnr = psnr_from_mse(m.mse);
    m.ssim = ssim(ref, est);
    return m;
}

} // namespace ttd
