#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dense_tensor.hpp"
#include "tt_tensor.hpp"

namespace ttd {

/// 8-bit-range raster stored row-major with interleaved channels.
struct Image {
    index_t height = 0, width = 0, channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(index_t h, index_t w, index_t c = 3) : height(h), width(w), channels(c), data(h * w * c, 0.0) {}

    double& at(index_t r, index_t c, index_t ch) { return data[(r * width + c) * channels + ch]; }
    double at(index_t r, index_t c, index_t ch) const { return data[(r * width + c) * channels + ch]; }
};

namespace io {

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> b;
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw IoError("unexpected end of stream");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_values(std::ostream& os, std::span<const double> v) {
    for (double d : v) put_f64(os, d);
}

inline std::vector<double> get_values(std::istream& is, index_t n) {
    std::vector<double> v(n);
    for (auto& d : v) d = get_f64(is);
    return v;
}

inline void expect_magic(std::istream& is, const char* magic) {
    char m[4];
    if (!is.read(m, 4) || std::memcmp(m, magic, 4) != 0)
        throw IoError(std::string("bad magic, expected ") + magic);
}

constexpr std::uint64_t max_extent = std::uint64_t{1} << 40;

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    return f;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot create " + path);
    return f;
}

inline void check_written(std::ostream& os, const std::string& path) {
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

} // namespace detail

// TTB1: "TTB1", u64 N, N u64 extents, column-major f64 values.

inline void write_ttb1(std::ostream& os, const DenseTensor& t) {
    os.write("TTB1", 4);
    detail::put_u64(os, t.order());
    for (index_t e : t.shape()) detail::put_u64(os, e);
    detail::put_values(os, t.data());
}

inline DenseTensor read_ttb1(std::istream& is) {
    detail::expect_magic(is, "TTB1");
    const auto n = detail::get_u64(is);
    if (n == 0 || n > 64) throw IoError("TTB1: invalid order " + std::to_string(n));
    Shape s(n);
    index_t total = 1;
    for (auto& e : s) {
        e = detail::get_u64(is);
        if (e == 0 || e > detail::max_extent) throw IoError("TTB1: invalid extent");
        total *= e;
        if (total > detail::max_extent) throw IoError("TTB1: tensor too large");
    }
    return DenseTensor(std::move(s), detail::get_values(is, total));
}

// TTX1: "TTX1", u64 N, then per core three u64 extents and its f64 values.

inline void write_ttx1(std::ostream& os, const TTTensor& x) {
    os.write("TTX1", 4);
    detail::put_u64(os, x.order());
    for (const auto& c : x.cores()) {
        for (index_t e : c.shape()) detail::put_u64(os, e);
        detail::put_values(os, c.data());
    }
}

inline TTTensor read_ttx1(std::istream& is) {
    detail::expect_magic(is, "TTX1");
    const auto n = detail::get_u64(is);
    if (n == 0 || n > 4096) throw IoError("TTX1: invalid core count " + std::to_string(n));
    std::vector<DenseTensor> cores;
    for (std::uint64_t k = 0; k < n; ++k) {
        Shape s(3);
        index_t total = 1;
        for (auto& e : s) {
            e = detail::get_u64(is);
            if (e == 0 || e > detail::max_extent) throw IoError("TTX1: invalid extent");
            total *= e;
            if (total > detail::max_extent) throw IoError("TTX1: core too large");
        }
        cores.emplace_back(std::move(s), detail::get_values(is, total));
    }
    try {
        return TTTensor(std::move(cores));
    } catch (const DimensionError& e) {
        throw IoError(std::string("TTX1: ") + e.what());
    }
}

inline void save_ttb1(const std::string& path, const DenseTensor& t) {
    auto f = detail::open_out(path);
    write_ttb1(f, t);
    detail::check_written(f, path);
}
inline DenseTensor load_ttb1(const std::string& path) {
    auto f = detail::open_in(path);
    return read_ttb1(f);
}
inline void save_ttx1(const std::string& path, const TTTensor& x) {
    auto f = detail::open_out(path);
    write_ttx1(f, x);
    detail::check_written(f, path);
}
inline TTTensor load_ttx1(const std::string& path) {
    auto f = detail::open_in(path);
    return read_ttx1(f);
}

// Signals: CSV with one value per line, or raw little-endian f64.

inline std::vector<double> read_csv(std::istream& is) {
    std::vector<double> v;
    std::string line;
    index_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_first_of(",; \t\r", b);
        const std::string tok = line.substr(b, e == std::string::npos ? std::string::npos : e - b);
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw IoError("CSV: cannot parse line " + std::to_string(lineno) + ": " + tok);
        }
    }
    return v;
}

inline void write_csv(std::ostream& os, std::span<const double> v) {
    os << std::setprecision(17);
    for (double d : v) os << d << '\n';
}

inline std::vector<double> load_csv(const std::string& path) {
    auto f = detail::open_in(path);
    return read_csv(f);
}
inline void save_csv(const std::string& path, std::span<const double> v) {
    auto f = detail::open_out(path);
    write_csv(f, v);
    detail::check_written(f, path);
}

inline std::vector<double> load_raw(const std::string& path) {
    auto f = detail::open_in(path);
    f.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::uint64_t>(f.tellg());
    if (bytes % 8 != 0) throw IoError("raw f64: size is not a multiple of 8: " + path);
    f.seekg(0);
    return detail::get_values(f, bytes / 8);
}
inline void save_raw(const std::string& path, std::span<const double> v) {
    auto f = detail::open_out(path);
    detail::put_values(f, v);
    detail::check_written(f, path);
}

/// Reads a signal, choosing the format from the extension (.csv/.txt text, otherwise raw f64).
inline std::vector<double> load_signal(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv" || ext == ".txt") return load_csv(path);
    return load_raw(path);
}
inline void save_signal(const std::string& path, std::span<const double> v) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv" || ext == ".txt") return save_csv(path, v);
    save_raw(path, v);
}

// Netpbm: binary P6 (RGB) and P5 (gray), maxval 255.

namespace detail {

inline std::string pnm_token(std::istream& is) {
    std::string tok;
    char ch;
    while (is.get(ch)) {
        if (ch == '#') {
            std::string skip;
            std::getline(is, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(ch);
    }
    if (tok.empty()) throw IoError("PNM: truncated header");
    return tok;
}

inline index_t pnm_number(std::istream& is) {
    const std::string t = pnm_token(is);
    try {
        std::size_t used = 0;
        const long long v = std::stoll(t, &used);
        if (used != t.size() || v <= 0 || v > (1 << 20)) throw std::invalid_argument(t);
        return static_cast<index_t>(v);
    } catch (const std::exception&) {
        throw IoError("PNM: bad header field " + t);
    }
}

inline unsigned char to_byte(double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

inline Image read_pnm(std::istream& is, const char* magic, index_t channels) {
    if (pnm_token(is) != magic) throw IoError(std::string("PNM: expected ") + magic);
    const index_t w = pnm_number(is), h = pnm_number(is), maxval = pnm_number(is);
    if (maxval != 255) throw IoError("PNM: only maxval 255 is supported");
    Image img(h, w, channels);
    std::vector<unsigned char> buf(h * w * channels);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw IoError("PNM: truncated pixel data");
    for (index_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
    return img;
}

inline void write_pnm(std::ostream& os, const Image& img, const char* magic) {
    os << magic << '\n' << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> buf(img.data.size());
    for (index_t i = 0; i < buf.size(); ++i) buf[i] = to_byte(img.data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

} // namespace detail

inline Image read_ppm(std::istream& is) { return detail::read_pnm(is, "P6", 3); }
inline Image read_pgm(std::istream& is) { return detail::read_pnm(is, "P5", 1); }

inline void write_ppm(std::ostream& os, const Image& img) {
    ttd::detail::require(img.channels == 3, "write_ppm: image must have 3 channels");
    detail::write_pnm(os, img, "P6");
}
inline void write_pgm(std::ostream& os, const Image& img) {
    ttd::detail::require(img.channels == 1, "write_pgm: image must have 1 channel");
    detail::write_pnm(os, img, "P5");
}

inline Image load_ppm(const std::string& path) {
    auto f = detail::open_in(path);
    return read_ppm(f);
}
inline void save_ppm(const std::string& path, const Image& img) {
    auto f = detail::open_out(path);
    write_ppm(f, img);
    detail::check_written(f, path);
}
inline void save_pgm(const std::string& path, const Image& img) {
    auto f = detail::open_out(path);
    write_pgm(f, img);
    detail::check_written(f, path);
}

} // namespace io
} // namespace ttd
