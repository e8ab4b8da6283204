#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "dense_tensor.hpp"

namespace ttd {

/// Minimize the error at the given TT-ranks (R_1, ..., R_{N-1}).
struct FixedRanks {
    std::vector<index_t> ranks;
};

/// Squared-error budget ε² in data units², with the TT-ranks minimized.
struct AccuracyBudget {
    double eps2 = 0.0;
};

/// Relative accuracy ε applied at every truncation step, as in classic TT-SVD.
struct RelativeAccuracy {
    double eps = 0.0;
};

using TruncationCriterion = std::variant<FixedRanks, AccuracyBudget, RelativeAccuracy>;

inline void check_criterion(const TruncationCriterion& crit) {
    if (const auto* f = std::get_if<FixedRanks>(&crit)) {
        for (index_t r : f->ranks) detail::require(r >= 1, "FixedRanks: ranks must be >= 1");
    } else if (const auto* a = std::get_if<AccuracyBudget>(&crit)) {
        detail::require(a->eps2 >= 0.0 && std::isfinite(a->eps2),
                        "AccuracyBudget: eps2 must be finite and non-negative");
    } else {
        const auto& r = std::get<RelativeAccuracy>(crit);
        detail::require(r.eps >= 0.0 && std::isfinite(r.eps),
                        "RelativeAccuracy: eps must be finite and non-negative");
    }
}

/// How many leading components a single truncation keeps.
struct RankRule {
    enum class Kind { fixed, energy, tail };
    Kind kind = Kind::fixed;
    index_t rank = 1;
    double floor = 0.0;

    static RankRule fixed(index_t r) { return {Kind::fixed, r, 0.0}; }
    /// Smallest R whose leading squared values sum to at least `f`.
    static RankRule energy(double f) { return {Kind::energy, 0, f}; }
    /// Smallest R whose discarded squared values sum to at most `t`.
    static RankRule tail(double t) { return {Kind::tail, 0, t}; }
};

/// Relative threshold below which a singular value counts as zero.
inline constexpr double numerical_rank_tol = 1e-14;

struct SvdResult {
    Matrix U;
    Vector sigma;
    Matrix V;
    index_t rank = 0;
    double discarded = 0.0; ///< sum of squared discarded singular values
};

namespace detail {

/// Largest-magnitude entry of each column of `u` made positive; `v` follows.
inline void fix_signs(Matrix& u, Matrix* v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index best = 0;
        double mag = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            const double a = std::abs(u(r, c));
            if (a > mag) {
                mag = a;
                best = r;
            }
        }
        if (u(best, c) < 0.0) {
            u.col(c) *= -1.0;
            if (v) v->col(c) *= -1.0;
        }
    }
}

inline void check_finite(const Eigen::Ref<const Matrix>& m, const char* where) {
    if (!m.allFinite()) throw NumericalError(std::string(where) + ": non-finite entries");
}

inline index_t numerical_rank(const Vector& sigma) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double tol = numerical_rank_tol * sigma(0);
    index_t r = 0;
    while (r < static_cast<index_t>(sigma.size()) && sigma(static_cast<Eigen::Index>(r)) > tol)
        ++r;
    return r;
}

/// Selects a rank from squared values sorted nonincreasing.
inline index_t select_rank(const Vector& sq, index_t usable, const RankRule& rule) {
    const index_t cap = std::max<index_t>(usable, 1);
    if (rule.kind == RankRule::Kind::fixed) return std::clamp<index_t>(rule.rank, 1, cap);
    // Tail sums are accumulated from the small end so that the retained energy
    // total - tail is not polluted by cancellation.
    const index_t n = static_cast<index_t>(sq.size());
    std::vector<double> tail(n + 1, 0.0);
    for (index_t r = n; r-- > 0;) tail[r] = tail[r + 1] + sq(static_cast<Eigen::Index>(r));
    const double total = tail[0];
    for (index_t r = 1; r <= usable; ++r)
        if (rule.kind == RankRule::Kind::tail ? tail[r] <= rule.floor : total - tail[r] >= rule.floor) return r;
    return cap;
}

} // namespace detail

/// Thin SVD with nonincreasing singular values and the fixed sign convention.
inline SvdResult thin_svd(const Eigen::Ref<const Matrix>& m) {
    detail::check_finite(m, "svd");
    SvdResult out;
    if (m.rows() == 0 || m.cols() == 0) return out;
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("svd: decomposition failed");
    out.U = svd.matrixU();
    out.sigma = svd.singularValues();
    out.V = svd.matrixV();
    out.rank = static_cast<index_t>(out.sigma.size());
    detail::fix_signs(out.U, &out.V);
    return out;
}

/// Keeps the leading components of a full thin SVD according to `rule`.
inline SvdResult truncate(const SvdResult& full, const RankRule& rule) {
    const Vector sq = full.sigma.array().square();
    const index_t usable = detail::numerical_rank(full.sigma);
    const index_t r = std::min<index_t>(detail::select_rank(sq, usable, rule),
                                        static_cast<index_t>(full.sigma.size()));
    const auto re = static_cast<Eigen::Index>(r);
    SvdResult out;
    out.U = full.U.leftCols(re);
    out.sigma = full.sigma.head(re);
    out.V = full.V.leftCols(re);
    out.rank = r;
    out.discarded = sq.tail(sq.size() - re).sum();
    return out;
}

inline SvdResult truncated_svd(const Eigen::Ref<const Matrix>& m, const RankRule& rule) {
    return truncate(thin_svd(m), rule);
}

struct EigResult {
    Matrix vectors; ///< columns are eigenvectors
    Vector values;  ///< nonincreasing
    index_t rank = 0;
};

/// Leading eigenpairs of a symmetric positive semidefinite matrix.
inline EigResult leading_eig(const Eigen::Ref<const Matrix>& q, const RankRule& rule) {
    detail::check_finite(q, "leading_eig");
    detail::require(q.rows() == q.cols(), "leading_eig: matrix must be square");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    detail::require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
                    "leading_eig: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(q);
    if (es.info() != Eigen::Success) throw NumericalError("leading_eig: solver failed");
    const auto n = static_cast<index_t>(q.rows());
    std::vector<index_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Vector& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](index_t a, index_t b) {
        return ev(static_cast<Eigen::Index>(a)) > ev(static_cast<Eigen::Index>(b));
    });
    Vector vals(static_cast<Eigen::Index>(n));
    for (index_t i = 0; i < n; ++i)
        vals(static_cast<Eigen::Index>(i)) =
            std::max(0.0, ev(static_cast<Eigen::Index>(order[i])));
    index_t usable = 0;
    if (n > 0 && vals(0) > 0.0)
        while (usable < n &&
               vals(static_cast<Eigen::Index>(usable)) > numerical_rank_tol * vals(0))
            ++usable;
    const index_t r = std::min(detail::select_rank(vals, usable, rule), n);
    EigResult out;
    out.rank = r;
    out.values = vals.head(static_cast<Eigen::Index>(r));
    out.vectors.resize(q.rows(), static_cast<Eigen::Index>(r));
    for (index_t i = 0; i < r; ++i)
        out.vectors.col(static_cast<Eigen::Index>(i)) =
            es.eigenvectors().col(static_cast<Eigen::Index>(order[i]));
    detail::fix_signs(out.vectors, nullptr);
    return out;
}

/// Thin QR with a non-negative diagonal in R.
struct QrResult {
    Matrix Q; ///< m x k, orthonormal columns, k = min(m, n)
    Matrix R; ///< k x n upper triangular
};

inline QrResult thin_qr(const Eigen::Ref<const Matrix>& a) {
    detail::check_finite(a, "qr");
    const Eigen::Index m = a.rows(), n = a.cols(), k = std::min(m, n);
    Eigen::HouseholderQR<Matrix> qr(a);
    QrResult out;
    out.Q = qr.householderQ() * Matrix::Identity(m, k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (out.R(i, i) < 0.0) {
            out.R.row(i) *= -1.0;
            out.Q.col(i) *= -1.0;
        }
    }
    return out;
}

/// Orthonormal basis of the row space of `a` (rows of the result).
inline Matrix orthonormal_rows(const Eigen::Ref<const Matrix>& a) {
    return thin_qr(a.transpose()).Q.transpose();
}

} // namespace ttd
