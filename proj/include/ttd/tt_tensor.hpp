#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dense_tensor.hpp"
#include "linalg.hpp"

namespace ttd {

enum class Side { left, right };

/// Orthogonality residual tolerance, absolute on max|XᵀX - I|.
inline constexpr double ortho_tol = 1e-10;

/**
 * Tensor train X = X_0 • X_1 • ... • X_{N-1}. Every core is an order-3 tensor
 * of shape R_{n-1} x I_n x R_n with R_{-1} = R_{N-1} = 1. Core indices are
 * 0-based.
 *
 * The optional orthogonality marker μ states that cores 0..μ-1 are
 * left-orthogonal and cores μ+1..N-1 are right-orthogonal.
 */
class TTTensor {
public:
    TTTensor() = default;

    explicit TTTensor(std::vector<DenseTensor> cores, std::optional<index_t> ortho = std::nullopt)
        : cores_(std::move(cores)), ortho_(ortho) {
        check();
    }

    index_t order() const noexcept { return cores_.size(); }
    const DenseTensor& core(index_t n) const { return cores_.at(n); }
    const std::vector<DenseTensor>& cores() const noexcept { return cores_; }
    std::optional<index_t> ortho() const noexcept { return ortho_; }

    /// Internal ranks (R_1, ..., R_{N-1}) in 1-based paper numbering.
    std::vector<index_t> ranks() const {
        std::vector<index_t> r;
        for (index_t n = 0; n + 1 < cores_.size(); ++n) r.push_back(cores_[n].extent(2));
        return r;
    }

    Shape extents() const {
        Shape s;
        for (const auto& c : cores_) s.push_back(c.extent(1));
        return s;
    }

    index_t rank_sum() const {
        index_t s = 0;
        for (index_t r : ranks()) s += r;
        return s;
    }

    index_t parameter_count() const {
        index_t s = 0;
        for (const auto& c : cores_) s += c.size();
        return s;
    }

    TTTensor with_ortho(std::optional<index_t> mu) const {
        TTTensor t = *this;
        t.ortho_ = mu;
        if (mu) detail::require(*mu < order(), "TTTensor: ortho marker out of range");
        return t;
    }

    /// Shape, boundary-rank and adjacency checks; throws DimensionError.
    static void check_cores(const std::vector<DenseTensor>& cores) {
        detail::require(!cores.empty(), "TTTensor: at least one core required");
        for (index_t n = 0; n < cores.size(); ++n) {
            detail::require(cores[n].order() == 3,
                            "TTTensor: core " + std::to_string(n) + " is not order-3");
            if (n + 1 < cores.size())
                detail::require(cores[n].extent(2) == cores[n + 1].extent(0),
                                "TTTensor: rank mismatch between cores " + std::to_string(n) +
                                    " and " + std::to_string(n + 1));
        }
        detail::require(cores.front().extent(0) == 1 && cores.back().extent(2) == 1,
                        "TTTensor: boundary ranks must be 1");
    }

private:
    void check() const {
        check_cores(cores_);
        if (ortho_) detail::require(*ortho_ < order(), "TTTensor: ortho marker out of range");
    }

    std::vector<DenseTensor> cores_;
    std::optional<index_t> ortho_;
};

/// max |X ⋉₂ X - I| (left) or max |X ⋊₂ X - I| (right) for an order-3 core.
inline double ortho_residual(const DenseTensor& core, Side side) {
    if (side == Side::left) {
        const auto m = core.matrix(2);
        const Matrix g = m.transpose() * m;
        return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    }
    const auto m = core.matrix(1);
    const Matrix g = m * m.transpose();
    return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

namespace detail {

/// Left-orthogonalizes core n in place; the triangular factor goes into core n+1.
inline void left_orthogonalize(std::vector<DenseTensor>& cores, index_t n) {
    require(n + 1 < cores.size(), "left orthogonalization needs a right neighbour");
    DenseTensor& x = cores[n];
    const index_t r0 = x.extent(0), i = x.extent(1);
    const auto qr = thin_qr(x.matrix(2));
    const auto k = static_cast<index_t>(qr.Q.cols());
    x = DenseTensor({r0, i, k}, std::vector<double>(qr.Q.data(), qr.Q.data() + qr.Q.size()));
    DenseTensor& next = cores[n + 1];
    const Matrix nm = qr.R * next.matrix(1);
    next = DenseTensor({k, next.extent(1), next.extent(2)},
                       std::vector<double>(nm.data(), nm.data() + nm.size()));
}

/// Right-orthogonalizes core n in place; the triangular factor goes into core n-1.
inline void right_orthogonalize(std::vector<DenseTensor>& cores, index_t n) {
    require(n >= 1 && n < cores.size(), "right orthogonalization needs a left neighbour");
    DenseTensor& x = cores[n];
    const index_t i = x.extent(1), r1 = x.extent(2);
    // [X]_(1) = Lᵀ Qᵀ from the QR of its transpose.
    const auto qr = thin_qr(x.matrix(1).transpose());
    const auto k = static_cast<index_t>(qr.Q.cols());
    const Matrix qt = qr.Q.transpose();
    x = DenseTensor({k, i, r1}, std::vector<double>(qt.data(), qt.data() + qt.size()));
    DenseTensor& prev = cores[n - 1];
    const Matrix pm = prev.matrix(2) * qr.R.transpose();
    prev = DenseTensor({prev.extent(0), prev.extent(1), k},
                       std::vector<double>(pm.data(), pm.data() + pm.size()));
}

} // namespace detail

/// Dense reconstruction X_0 • X_1 • ... • X_{N-1} with the unit boundary modes squeezed.
inline DenseTensor tt_full(const TTTensor& x) {
    DenseTensor acc = x.core(0);
    for (index_t n = 1; n < x.order(); ++n) acc = train_contract(acc, x.core(n));
    Shape s = x.extents();
    acc.reshape_inplace(s);
    return acc;
}

inline TTTensor orthogonalize_core(const TTTensor& x, index_t n, Side side) {
    detail::require(n < x.order(), "orthogonalize_core: index out of range");
    auto cores = x.cores();
    if (side == Side::left) {
        detail::require(n + 1 < x.order(), "orthogonalize_core: left requires n < N-1");
        detail::left_orthogonalize(cores, n);
    } else {
        detail::require(n >= 1, "orthogonalize_core: right requires n > 0");
        detail::right_orthogonalize(cores, n);
    }
    return TTTensor(std::move(cores));
}

/**
 * Left: cores 0..n-1 become left-orthogonal. Right: cores n+1..N-1 become
 * right-orthogonal. The marker is set to n when it is consistent with the
 * previous state on the other side.
 */
inline TTTensor orthogonalize_up_to(const TTTensor& x, index_t n, Side side) {
    detail::require(n < x.order(), "orthogonalize_up_to: index out of range");
    auto cores = x.cores();
    std::optional<index_t> mu;
    if (side == Side::left) {
        for (index_t k = 0; k < n; ++k) detail::left_orthogonalize(cores, k);
        // Cores right of the old marker stay right-orthogonal when n <= old marker
        // only if nothing right of n was touched; n-1 pushes into core n only.
        if (x.ortho() && *x.ortho() >= n) mu = n;
        if (n + 1 == x.order()) mu = n;
    } else {
        for (index_t k = x.order() - 1; k > n; --k) detail::right_orthogonalize(cores, k);
        if (x.ortho() && *x.ortho() <= n) mu = n;
        if (n == 0) mu = 0;
    }
    return TTTensor(std::move(cores), mu);
}

/// Moves the marker so that cores < n are left- and cores > n right-orthogonal.
inline TTTensor orthogonalize_at(const TTTensor& x, index_t n) {
    auto cores = x.cores();
    for (index_t k = x.order() - 1; k > n; --k) detail::right_orthogonalize(cores, k);
    for (index_t k = 0; k < n; ++k) detail::left_orthogonalize(cores, k);
    return TTTensor(std::move(cores), n);
}

/// Squared Frobenius norm, evaluated on the core at the orthogonality centre.
inline double tt_norm(const TTTensor& x) {
    if (x.ortho()) return x.core(*x.ortho()).norm2();
    return orthogonalize_up_to(x, 0, Side::right).core(0).norm2();
}

/// Consecutive cores with open boundary ranks.
struct TrainFragment {
    std::vector<DenseTensor> cores;

    /// Dense form with both boundary rank modes kept; empty fragment is the scalar 1.
    DenseTensor dense() const {
        if (cores.empty()) return DenseTensor({1, 1}, {1.0});
        DenseTensor acc = cores.front();
        for (index_t k = 1; k < cores.size(); ++k) acc = train_contract(acc, cores[k]);
        return acc;
    }
};

struct SubTT {
    TrainFragment left;   ///< X_{<n}
    TrainFragment middle; ///< X_{n:m}
    TrainFragment right;  ///< X_{>m}
};

inline SubTT sub_tt(const TTTensor& x, index_t n, index_t m) {
    detail::require(n <= m && m < x.order(), "sub_tt: need 0 <= n <= m < N");
    const auto& c = x.cores();
    const auto b = c.begin();
    return SubTT{{{b, b + static_cast<std::ptrdiff_t>(n)}},
                 {{b + static_cast<std::ptrdiff_t>(n), b + static_cast<std::ptrdiff_t>(m) + 1}},
                 {{b + static_cast<std::ptrdiff_t>(m) + 1, c.end()}}};
}

struct Diagnostics {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    double max_left_residual = 0.0;
    double max_right_residual = 0.0;

    bool ok() const { return errors.empty(); }
};

/// Reports adjacency, boundary, rank-bound and orthogonality issues without throwing.
inline Diagnostics validate(const std::vector<DenseTensor>& cores,
                            std::optional<index_t> ortho = std::nullopt) {
    Diagnostics d;
    if (cores.empty()) {
        d.errors.push_back("no cores");
        return d;
    }
    bool shapes_ok = true;
    for (index_t n = 0; n < cores.size(); ++n)
        if (cores[n].order() != 3) {
            d.errors.push_back("core " + std::to_string(n) + " is not order-3");
            shapes_ok = false;
        }
    if (!shapes_ok) return d;
    if (cores.front().extent(0) != 1) d.errors.push_back("left boundary rank is not 1");
    if (cores.back().extent(2) != 1) d.errors.push_back("right boundary rank is not 1");
    for (index_t n = 0; n + 1 < cores.size(); ++n) {
        if (cores[n].extent(2) != cores[n + 1].extent(0))
            d.errors.push_back("rank mismatch: core " + std::to_string(n) + " mode 3 has " +
                               std::to_string(cores[n].extent(2)) + ", core " +
                               std::to_string(n + 1) + " mode 1 has " +
                               std::to_string(cores[n + 1].extent(0)));
    }
    for (index_t n = 0; n + 1 < cores.size(); ++n) {
        const index_t r = cores[n].extent(2);
        const index_t lb = cores[n].extent(0) * cores[n].extent(1);
        const index_t rb = cores[n + 1].extent(1) * cores[n + 1].extent(2);
        if (r > lb || r > rb)
            d.warnings.push_back("rank bound exceeded at R_" + std::to_string(n + 1) + " = " +
                                 std::to_string(r) + " > min(" + std::to_string(lb) + ", " +
                                 std::to_string(rb) + ")");
    }
    if (ortho && d.errors.empty()) {
        if (*ortho >= cores.size()) {
            d.errors.push_back("ortho marker out of range");
        } else {
            for (index_t k = 0; k < *ortho; ++k)
                d.max_left_residual =
                    std::max(d.max_left_residual, ortho_residual(cores[k], Side::left));
            for (index_t k = *ortho + 1; k < cores.size(); ++k)
                d.max_right_residual =
                    std::max(d.max_right_residual, ortho_residual(cores[k], Side::right));
            if (d.max_left_residual > ortho_tol)
                d.errors.push_back("left-orthogonality residual " +
                                   std::to_string(d.max_left_residual));
            if (d.max_right_residual > ortho_tol)
                d.errors.push_back("right-orthogonality residual " +
                                   std::to_string(d.max_right_residual));
        }
    }
    return d;
}

inline Diagnostics validate(const TTTensor& x) { return validate(x.cores(), x.ortho()); }

} // namespace ttd
