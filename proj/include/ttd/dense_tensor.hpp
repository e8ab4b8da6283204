#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace ttd {

using index_t = std::size_t;
using Shape = std::vector<index_t>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

inline index_t shape_size(std::span<const index_t> shape) {
    return std::accumulate(shape.begin(), shape.end(), index_t{1}, std::multiplies<>{});
}

inline std::string shape_string(std::span<const index_t> shape) {
    std::ostringstream os;
    os << '(';
    for (index_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ')';
    return os.str();
}

/**
 * Order-N array of doubles with column-major linear order (first index
 * fastest). Every extent is at least 1; a full contraction yields the
 * order-1 tensor of shape (1).
 */
class DenseTensor {
public:
    DenseTensor() : shape_{1}, data_(1, 0.0) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        check_shape();
        data_.assign(shape_size(shape_), 0.0);
    }

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape();
        detail::require(data_.size() == shape_size(shape_),
                        "DenseTensor: data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_string(shape_));
    }

    /// Column-major view of an Eigen matrix as an order-2 tensor.
    static DenseTensor from_matrix(const Matrix& m) {
        return DenseTensor({static_cast<index_t>(m.rows()), static_cast<index_t>(m.cols())},
                           std::vector<double>(m.data(), m.data() + m.size()));
    }

    static DenseTensor scalar(double v) { return DenseTensor({1}, {v}); }

    const Shape& shape() const noexcept { return shape_; }
    index_t order() const noexcept { return shape_.size(); }
    index_t extent(index_t mode) const { return shape_.at(mode); }
    index_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](index_t i) noexcept { return data_[i]; }
    double operator[](index_t i) const noexcept { return data_[i]; }

    index_t linear_index(std::span<const index_t> idx) const {
        detail::require(idx.size() == shape_.size(), "DenseTensor: index arity mismatch");
        index_t lin = 0, stride = 1;
        for (index_t k = 0; k < idx.size(); ++k) {
            lin += idx[k] * stride;
            stride *= shape_[k];
        }
        return lin;
    }

    double at(std::span<const index_t> idx) const { return data_[linear_index(idx)]; }
    double& at(std::span<const index_t> idx) { return data_[linear_index(idx)]; }

    template <class... I>
        requires(std::is_integral_v<I> && ...)
    double operator()(I... i) const {
        const index_t idx[] = {static_cast<index_t>(i)...};
        return at(idx);
    }
    template <class... I>
        requires(std::is_integral_v<I> && ...)
    double& operator()(I... i) {
        const index_t idx[] = {static_cast<index_t>(i)...};
        return at(idx);
    }

    double norm2() const noexcept {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Matrix view with the leading `row_modes` modes as rows.
    MatrixMap matrix(index_t row_modes) {
        const auto [r, c] = split(row_modes);
        return MatrixMap(data_.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    ConstMatrixMap matrix(index_t row_modes) const {
        const auto [r, c] = split(row_modes);
        return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(r),
                              static_cast<Eigen::Index>(c));
    }
    MatrixMap matrix_rows(index_t rows) {
        detail::require(rows > 0 && size() % rows == 0, "DenseTensor: bad row count");
        return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(size() / rows));
    }
    ConstMatrixMap matrix_rows(index_t rows) const {
        detail::require(rows > 0 && size() % rows == 0, "DenseTensor: bad row count");
        return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows),
                              static_cast<Eigen::Index>(size() / rows));
    }

    Matrix to_matrix(index_t row_modes) const { return matrix(row_modes); }

    /// Reinterpret in place (reshape without copying).
    void reshape_inplace(Shape new_shape) {
        check_shape_of(new_shape);
        detail::require(shape_size(new_shape) == data_.size(),
                        "reshape: size mismatch " + shape_string(shape_) + " -> " +
                            shape_string(new_shape));
        shape_ = std::move(new_shape);
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    std::pair<index_t, index_t> split(index_t row_modes) const {
        detail::require(row_modes <= shape_.size(), "DenseTensor: too many row modes");
        index_t r = 1;
        for (index_t k = 0; k < row_modes; ++k) r *= shape_[k];
        return {r, data_.size() / r};
    }

    static void check_shape_of(const Shape& s) {
        detail::require(!s.empty(), "DenseTensor: order must be at least 1");
        for (index_t e : s) detail::require(e >= 1, "DenseTensor: extents must be positive");
    }
    void check_shape() const { check_shape_of(shape_); }

    Shape shape_;
    std::vector<double> data_;
};

inline DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
    DenseTensor out = t;
    out.reshape_inplace(std::move(new_shape));
    return out;
}

/// Generalized transpose: mode k of the result is mode perm[k] of `t`.
inline DenseTensor permute(const DenseTensor& t, std::span<const index_t> perm) {
    const index_t n = t.order();
    detail::require(perm.size() == n, "permute: permutation arity mismatch");
    std::vector<bool> seen(n, false);
    for (index_t p : perm) {
        detail::require(p < n && !seen[p], "permute: not a permutation");
        seen[p] = true;
    }
    Shape out_shape(n);
    std::vector<index_t> in_stride(n), stride_of_out(n);
    for (index_t k = 0, s = 1; k < n; ++k) {
        in_stride[k] = s;
        s *= t.extent(k);
    }
    for (index_t k = 0; k < n; ++k) {
        out_shape[k] = t.extent(perm[k]);
        stride_of_out[k] = in_stride[perm[k]];
    }
    DenseTensor out(out_shape);
    std::vector<index_t> idx(n, 0);
    index_t src = 0;
    const auto in = t.data();
    auto dst = out.data();
    for (index_t lin = 0; lin < out.size(); ++lin) {
        dst[lin] = in[src];
        for (index_t k = 0; k < n; ++k) {
            ++idx[k];
            src += stride_of_out[k];
            if (idx[k] < out_shape[k]) break;
            src -= stride_of_out[k] * out_shape[k];
            idx[k] = 0;
        }
    }
    return out;
}

/// Ordered partition of mode indices (0-based) used by `unfold`.
using ModeGroups = std::vector<std::vector<index_t>>;

namespace detail {

inline std::vector<index_t> flatten_groups(const ModeGroups& groups, index_t order) {
    std::vector<index_t> perm;
    for (const auto& g : groups) {
        require(!g.empty(), "unfold: empty mode group");
        perm.insert(perm.end(), g.begin(), g.end());
    }
    require(perm.size() == order, "unfold: groups do not cover every mode exactly once");
    std::vector<bool> seen(order, false);
    for (index_t p : perm) {
        require(p < order && !seen[p], "unfold: groups are not a partition of the modes");
        seen[p] = true;
    }
    return perm;
}

} // namespace detail

/**
 * Mode-(g1, g2, ..., gJ) unfolding: the result has one mode per group whose
 * extent is the product of the group's extents, and the indices inside a
 * group are linearized column-major in the listed order.
 */
inline DenseTensor unfold(const DenseTensor& t, const ModeGroups& groups) {
    const auto perm = detail::flatten_groups(groups, t.order());
    DenseTensor out = permute(t, perm);
    Shape s;
    s.reserve(groups.size());
    for (const auto& g : groups) {
        index_t e = 1;
        for (index_t m : g) e *= t.extent(m);
        s.push_back(e);
    }
    out.reshape_inplace(std::move(s));
    return out;
}

/// Inverse of `unfold` given the original shape.
inline DenseTensor fold(const DenseTensor& u, const ModeGroups& groups, const Shape& original) {
    const auto perm = detail::flatten_groups(groups, original.size());
    detail::require(shape_size(original) == u.size(), "fold: size mismatch");
    Shape permuted(perm.size());
    for (index_t k = 0; k < perm.size(); ++k) permuted[k] = original[perm[k]];
    DenseTensor p = reshape(u, permuted);
    std::vector<index_t> inv(perm.size());
    for (index_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
    return permute(p, inv);
}

namespace detail {

inline Shape concat_or_unit(Shape a, std::span<const index_t> b) {
    a.insert(a.end(), b.begin(), b.end());
    if (a.empty()) a.push_back(1);
    return a;
}

} // namespace detail

/// A • B: contracts the last mode of A with the first mode of B.
inline DenseTensor train_contract(const DenseTensor& a, const DenseTensor& b) {
    const index_t shared = a.shape().back();
    detail::require(shared == b.extent(0), "train_contract: last extent of A " +
                                               std::to_string(shared) +
                                               " != first extent of B " +
                                               std::to_string(b.extent(0)));
    Shape out(a.shape().begin(), a.shape().end() - 1);
    out = detail::concat_or_unit(std::move(out), std::span(b.shape()).subspan(1));
    DenseTensor c(out);
    auto cm = c.matrix_rows(a.size() / shared);
    cm.noalias() = a.matrix(a.order() - 1) * b.matrix(1);
    return c;
}

/// A ⋉_n B: contraction over the leading n modes of both operands.
inline DenseTensor left_contract(const DenseTensor& a, const DenseTensor& b, index_t n) {
    detail::require(n >= 1 && n <= a.order() && n <= b.order(), "left_contract: bad mode count");
    for (index_t k = 0; k < n; ++k)
        detail::require(a.extent(k) == b.extent(k),
                        "left_contract: extent mismatch at mode " + std::to_string(k));
    Shape out(a.shape().begin() + static_cast<std::ptrdiff_t>(n), a.shape().end());
    out = detail::concat_or_unit(std::move(out),
                                 std::span(b.shape()).subspan(static_cast<std::size_t>(n)));
    DenseTensor c(out);
    const auto am = a.matrix(n);
    const auto bm = b.matrix(n);
    auto cm = c.matrix_rows(static_cast<index_t>(am.cols()));
    cm.noalias() = am.transpose() * bm;
    return c;
}

/// A ⋊_n B: contraction over the trailing n modes, aligned from the end.
inline DenseTensor right_contract(const DenseTensor& a, const DenseTensor& b, index_t n) {
    detail::require(n >= 1 && n <= a.order() && n <= b.order(), "right_contract: bad mode count");
    const index_t na = a.order(), nb = b.order();
    for (index_t k = 0; k < n; ++k)
        detail::require(a.extent(na - 1 - k) == b.extent(nb - 1 - k),
                        "right_contract: trailing extent mismatch");
    Shape out(a.shape().begin(), a.shape().end() - static_cast<std::ptrdiff_t>(n));
    out = detail::concat_or_unit(
        std::move(out), std::span(b.shape()).subspan(0, static_cast<std::size_t>(nb - n)));
    DenseTensor c(out);
    const auto am = a.matrix(na - n);
    const auto bm = b.matrix(nb - n);
    auto cm = c.matrix_rows(static_cast<index_t>(am.rows()));
    cm.noalias() = am * bm.transpose();
    return c;
}

} // namespace ttd
