#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "../dense_tensor.hpp"
#include "../io.hpp"

namespace ttd {

/// Orthonormal DCT-II matrix, C(k, n) = α_k cos(π(2n+1)k / 2N).
inline Matrix dct_matrix(index_t n) {
    Matrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double nd = static_cast<double>(n);
    for (index_t k = 0; k < n; ++k)
        for (index_t j = 0; j < n; ++j)
            c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                (k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd)) *
                std::cos(std::numbers::pi * (2.0 * j + 1.0) * k / (2.0 * nd));
    return c;
}

namespace detail {

inline double median_abs(std::vector<double> v) {
    if (v.empty()) return 0.0;
    for (double& x : v) x = std::abs(x);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

inline Matrix channel_tile(const Image& img, index_t ch, index_t r0, index_t c0, index_t th, index_t tw) {
    Matrix t(static_cast<Eigen::Index>(th), static_cast<Eigen::Index>(tw));
    for (index_t i = 0; i < th; ++i)
        for (index_t j = 0; j < tw; ++j)
            t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img.at(r0 + i, c0 + j, ch);
    return t;
}

} // namespace detail

/**
 * Noise variance from the high-frequency quadrant (u, v >= 4) of orthonormal
 * 8x8 block DCTs over every channel: σ̂ = median|c| / 0.6745.
 */
inline double estimate_noise(const Image& img) {
    constexpr index_t b = 8;
    const Matrix c = dct_matrix(b);
    std::vector<double> coef;
    for (index_t ch = 0; ch < img.channels; ++ch)
        for (index_t r = 0; r + b <= img.height; r += b)
            for (index_t col = 0; col + b <= img.width; col += b) {
                const Matrix d = c * detail::channel_tile(img, ch, r, col, b, b) * c.transpose();
                for (Eigen::Index u = b / 2; u < static_cast<Eigen::Index>(b); ++u)
                    for (Eigen::Index v = b / 2; v < static_cast<Eigen::Index>(b); ++v)
                        coef.push_back(d(u, v));
            }
    const double s = detail::median_abs(std::move(coef)) / 0.6745;
    return s * s;
}

/// Noise variance of a 1-D signal from finest-scale Haar details (x_{2k} - x_{2k+1})/√2.
inline double estimate_noise(std::span<const double> x) {
    std::vector<double> d;
    for (std::size_t k = 0; k + 1 < x.size(); k += 2) d.push_back((x[k] - x[k + 1]) / std::sqrt(2.0));
    const double s = detail::median_abs(std::move(d)) / 0.6745;
    return s * s;
}

/**
 * Hard thresholding at 3σ of non-DC coefficients in non-overlapping 16x16
 * orthonormal DCT tiles per channel. Border tiles use their actual size.
 */
inline Image dct_prefilter(const Image& img, double sigma2, bool enabled = true) {
    if (!enabled) return img;
    constexpr index_t b = 16;
    const double thr = 3.0 * std::sqrt(std::max(sigma2, 0.0));
    Image out = img;
    for (index_t ch = 0; ch < img.channels; ++ch)
        for (index_t r = 0; r < img.height; r += b)
            for (index_t col = 0; col < img.width; col += b) {
                const index_t th = std::min(b, img.height - r), tw = std::min(b, img.width - col);
                const Matrix cr = dct_matrix(th), cc = dct_matrix(tw);
                Matrix d = cr * detail::channel_tile(img, ch, r, col, th, tw) * cc.transpose();
                for (Eigen::Index u = 0; u < d.rows(); ++u)
                    for (Eigen::Index v = 0; v < d.cols(); ++v)
                        if ((u || v) && std::abs(d(u, v)) < thr) d(u, v) = 0.0;
                const Matrix t = cr.transpose() * d * cc;
                for (index_t i = 0; i < th; ++i)
                    for (index_t j = 0; j < tw; ++j)
                        out.at(r + i, col + j, ch) = t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
    return out;
}

} // namespace ttd
