#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "../dense_tensor.hpp"
#include "../rng.hpp"

namespace ttd {

enum class SignalKind { damped, x1, x2, x3, x4 };

inline SignalKind parse_signal_kind(const std::string& s) {
    if (s == "damped" || s == "x5") return SignalKind::damped;
    if (s == "x1") return SignalKind::x1;
    if (s == "x2") return SignalKind::x2;
    if (s == "x3") return SignalKind::x3;
    if (s == "x4") return SignalKind::x4;
    throw DimensionError("unknown signal kind: " + s);
}

inline const char* to_string(SignalKind k) {
    switch (k) {
    case SignalKind::damped: return "damped";
    case SignalKind::x1: return "x1";
    case SignalKind::x2: return "x2";
    case SignalKind::x3: return "x3";
    case SignalKind::x4: return "x4";
    }
    return "?";
}

struct SignalSpec {
    SignalKind kind = SignalKind::damped;
    index_t length = 1024;
    double snr_db = std::numeric_limits<double>::infinity(); ///< +inf: no noise
    std::uint64_t seed = 0;
    double f = 10.0;    ///< damped: frequency in Hz
    double fs = 100.0;  ///< damped: sampling rate in Hz
    double phase = std::numbers::pi / 3.0;
};

struct SignalSample {
    std::vector<double> clean;
    std::vector<double> noisy;
    double sigma2 = 0.0; ///< realized noise variance ‖e‖²/K
};

/**
 * The damped sinusoid exp(-5t/K) sin(2πft/fs + φ) is sampled at t = 0..K-1.
 * x1..x4 are sampled at t = k/K for k = 1..K.
 */
inline std::vector<double> clean_signal(const SignalSpec& spec) {
    const index_t k_len = spec.length;
    detail::require(k_len >= 1, "signal length must be positive");
    std::vector<double> x(k_len);
    const double kd = static_cast<double>(k_len);
    constexpr double pi = std::numbers::pi;
    for (index_t k = 0; k < k_len; ++k) {
        if (spec.kind == SignalKind::damped) {
            const double t = static_cast<double>(k);
            x[k] = std::exp(-5.0 * t / kd) * std::sin(2.0 * pi * spec.f / spec.fs * t + spec.phase);
            continue;
        }
        const double t = static_cast<double>(k + 1) / kd;
        switch (spec.kind) {
        case SignalKind::x1: x[k] = std::sin(2000.0 * std::pow(t, 2.0 / 3.0)) / (4.0 * std::pow(t, 0.25)); break;
        case SignalKind::x2: x[k] = std::sin(1.0 / t); break;
        case SignalKind::x3: x[k] = std::sin(2.5 * (t + 1.0)) * std::cos(100.0 * (t + 1.0) * (t + 1.0)); break;
        case SignalKind::x4: {
            const double s = std::sin(8.0 * pi * t);
            x[k] = (s > 0 ? 1.0 : s < 0 ? -1.0 : 0.0) * (1.0 + std::sin(80.0 * pi * t));
            break;
        }
        default: break;
        }
    }
    return x;
}

/// Adds Gaussian noise rescaled so that 10·log10(‖x‖²/‖e‖²) equals `snr_db` exactly.
inline SignalSample add_noise(std::vector<double> x, double snr_db, Rng& rng) {
    SignalSample s;
    s.clean = std::move(x);
    s.noisy = s.clean;
    if (std::isinf(snr_db) && snr_db > 0) return s;
    detail::require(std::isfinite(snr_db), "snr must be finite or +inf");
    auto e = rng.normals(s.clean.size());
    double xx = 0.0, ee = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        xx += s.clean[i] * s.clean[i];
        ee += e[i] * e[i];
    }
    const double target = xx / std::pow(10.0, snr_db / 10.0);
    const double scale = ee > 0.0 ? std::sqrt(target / ee) : 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s.noisy[i] += scale * e[i];
    s.sigma2 = target / static_cast<double>(e.size());
    return s;
}

inline SignalSample gen_signal(const SignalSpec& spec) {
    Rng rng(spec.seed);
    return add_noise(clean_signal(spec), spec.snr_db, rng);
}

/**
 * Default tensorization: 4 x 2 x ... x 2 x 4 for K = 2^d (d >= 4); otherwise
 * 2 x ... x 2 x (2q) for K = 2^a q with q odd.
 */
inline Shape default_signal_shape(index_t k_len) {
    detail::require(k_len >= 4, "signal too short to tensorize");
    index_t a = 0, q = k_len;
    while (q % 2 == 0) {
        q /= 2;
        ++a;
    }
    if (q == 1 && a >= 4) {
        Shape s{4};
        for (index_t i = 0; i < a - 4; ++i) s.push_back(2);
        s.push_back(4);
        return s;
    }
    detail::require(a >= 2, "signal length needs at least two factors of 2");
    Shape s(a - 1, 2);
    s.push_back(2 * q);
    return s;
}

inline DenseTensor tensorize_signal(std::span<const double> y, const Shape& shape) {
    detail::require(shape_size(shape) == y.size(),
                    "tensorize: length " + std::to_string(y.size()) + " does not match shape " +
                        shape_string(shape));
    return DenseTensor(shape, std::vector<double>(y.begin(), y.end()));
}

inline std::vector<double> detensorize(const DenseTensor& t) { return t.values(); }

} // namespace ttd
