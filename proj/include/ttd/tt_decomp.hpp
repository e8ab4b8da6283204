#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tt_tensor.hpp"

namespace ttd {

/// One truncation of the sequential projection.
struct TtSvdStep {
    index_t step = 0;      ///< 0-based bond index
    index_t rank = 0;      ///< retained rank
    index_t requested = 0; ///< requested rank (FixedRanks only, otherwise 0)
    double discarded = 0.0;
    bool clamped = false; ///< requested rank exceeded the matrix dimensions
};

struct TtSvdResult {
    TTTensor tt;
    std::vector<TtSvdStep> log;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_fixed_ranks(const FixedRanks& f, index_t bonds, const char* who) {
    require(f.ranks.size() == bonds, std::string(who) + ": expected " + std::to_string(bonds) +
                                         " ranks, got " + std::to_string(f.ranks.size()));
}

/// Rank rule for one truncation of a matrix with squared norm `m2`.
inline RankRule step_rule(const TruncationCriterion& crit, index_t step, index_t bonds, double m2) {
    if (const auto* f = std::get_if<FixedRanks>(&crit)) return RankRule::fixed(f->ranks[step]);
    if (const auto* a = std::get_if<AccuracyBudget>(&crit))
        return RankRule::tail(a->eps2 / static_cast<double>(bonds));
    const double e = std::get<RelativeAccuracy>(crit).eps;
    return RankRule::tail(e * e * m2);
}

} // namespace detail

/**
 * Sequential projection and truncation. RelativeAccuracy applies
 * ‖σ‖² ≥ (1-ε²)‖M‖² to every projected matrix M; AccuracyBudget splits ε²
 * evenly over the N-1 truncations so that ‖Y - X‖² ≤ ε². The result has its
 * orthogonality marker on the last core.
 */
inline TtSvdResult tt_svd_log(const DenseTensor& y, const TruncationCriterion& crit) {
    check_criterion(crit);
    const index_t n_ord = y.order();
    detail::require(n_ord >= 2, "tt_svd: order must be at least 2");
    const index_t bonds = n_ord - 1;
    if (const auto* f = std::get_if<FixedRanks>(&crit))
        detail::check_fixed_ranks(*f, bonds, "tt_svd");

    TtSvdResult out;
    std::vector<DenseTensor> cores;
    std::vector<double> rest(y.values());
    index_t r_prev = 1;
    index_t cols = y.size();
    for (index_t n = 0; n < bonds; ++n) {
        const index_t rows = r_prev * y.extent(n);
        cols /= y.extent(n);
        const ConstMatrixMap m(rest.data(), static_cast<Eigen::Index>(rows),
                               static_cast<Eigen::Index>(cols));
        const auto rule = detail::step_rule(crit, n, bonds, m.squaredNorm());
        const auto svd = truncated_svd(m, rule);
        TtSvdStep st{n, svd.rank, 0, svd.discarded, false};
        if (rule.kind == RankRule::Kind::fixed) {
            st.requested = rule.rank;
            if (rule.rank > std::min(rows, cols)) {
                st.clamped = true;
                out.warnings.push_back("tt_svd: rank " + std::to_string(rule.rank) + " at bond " +
                                       std::to_string(n + 1) + " clamped to " +
                                       std::to_string(svd.rank));
            }
        }
        out.log.push_back(st);
        cores.emplace_back(Shape{r_prev, y.extent(n), svd.rank},
                           std::vector<double>(svd.U.data(), svd.U.data() + svd.U.size()));
        const Matrix sv = svd.sigma.asDiagonal() * svd.V.transpose();
        rest.assign(sv.data(), sv.data() + sv.size());
        r_prev = svd.rank;
    }
    cores.emplace_back(Shape{r_prev, y.extent(bonds), 1}, std::move(rest));
    out.tt = TTTensor(std::move(cores), bonds);
    return out;
}

inline TTTensor tt_svd(const DenseTensor& y, const TruncationCriterion& crit) {
    return tt_svd_log(y, crit).tt;
}

/**
 * Recompression of a TT-tensor: full right-orthogonalization, then one
 * left-to-right truncation pass. Budgets are split evenly over the N-1 bonds;
 * RelativeAccuracy ε means the budget ε²‖X‖².
 */
inline TtSvdResult tt_round_log(const TTTensor& x, const TruncationCriterion& crit) {
    check_criterion(crit);
    const index_t n_ord = x.order();
    const index_t bonds = n_ord - 1;
    if (const auto* f = std::get_if<FixedRanks>(&crit))
        detail::check_fixed_ranks(*f, bonds, "tt_round");
    TtSvdResult out;
    if (n_ord == 1) {
        out.tt = x.with_ortho(0);
        return out;
    }
    auto cores = orthogonalize_up_to(x, 0, Side::right).cores();
    TruncationCriterion step_crit = crit;
    if (const auto* r = std::get_if<RelativeAccuracy>(&crit))
        step_crit = AccuracyBudget{r->eps * r->eps * cores[0].norm2()};

    for (index_t n = 0; n < bonds; ++n) {
        DenseTensor& c = cores[n];
        const index_t r0 = c.extent(0), i = c.extent(1);
        const auto m = c.matrix(2);
        const auto rule = detail::step_rule(step_crit, n, bonds, m.squaredNorm());
        const auto svd = truncated_svd(m, rule);
        TtSvdStep st{n, svd.rank, 0, svd.discarded, false};
        if (rule.kind == RankRule::Kind::fixed) {
            st.requested = rule.rank;
            st.clamped = rule.rank > std::min<index_t>(static_cast<index_t>(m.rows()),
                                                       static_cast<index_t>(m.cols()));
        }
        out.log.push_back(st);
        c = DenseTensor({r0, i, svd.rank},
                        std::vector<double>(svd.U.data(), svd.U.data() + svd.U.size()));
        DenseTensor& next = cores[n + 1];
        const Matrix sv = svd.sigma.asDiagonal() * svd.V.transpose();
        const Matrix nm = sv * next.matrix(1);
        next = DenseTensor({svd.rank, next.extent(1), next.extent(2)},
                           std::vector<double>(nm.data(), nm.data() + nm.size()));
    }
    out.tt = TTTensor(std::move(cores), bonds);
    return out;
}

inline TTTensor tt_round(const TTTensor& x, const TruncationCriterion& crit) {
    return tt_round_log(x, crit).tt;
}

struct Tucker2Options {
    index_t max_iters = 50;
    double tol = 1e-8;
    /// Row-orthonormal R2 x I3 starting factor; identity when absent.
    std::optional<Matrix> init_x3;
};

/// Y ≈ X1 • core • X3 with X1ᵀX1 = I and X3 X3ᵀ = I.
struct Tucker2Result {
    Matrix X1;           ///< I1 x R1
    DenseTensor core;    ///< R1 x I2 x R2
    Matrix X3;           ///< R2 x I3
    Vector lambda3;      ///< leading eigenvalues of the final Q3 (= core ⋉₂ core)
    index_t iterations = 0;
    double error = 0.0;  ///< ‖Y‖² - ‖core‖²
    std::vector<double> errors; ///< error after every X1 update (once X3 is feasible) and every X3 update
};

/**
 * Alternating EVD updates of X1 (from Q1 = (Y•X3ᵀ) ⋊₂ (Y•X3ᵀ)) and X3 (from
 * Q3 = (X1ᵀ•Y) ⋉₂ (X1ᵀ•Y)). Budget mode selects the smallest ranks whose
 * eigenvalue sum reaches ‖Y‖² - ε².
 */
inline Tucker2Result tucker2(const DenseTensor& y, const TruncationCriterion& crit,
                             const Tucker2Options& opt = {}) {
    check_criterion(crit);
    detail::require(y.order() == 3, "tucker2: input must be order-3, got order " +
                                        std::to_string(y.order()));
    const auto i1 = static_cast<Eigen::Index>(y.extent(0));
    const auto i2 = static_cast<Eigen::Index>(y.extent(1));
    const auto i3 = static_cast<Eigen::Index>(y.extent(2));
    const double y2 = y.norm2();

    RankRule rule1, rule3;
    if (const auto* f = std::get_if<FixedRanks>(&crit)) {
        detail::check_fixed_ranks(*f, 2, "tucker2");
        rule1 = RankRule::fixed(f->ranks[0]);
        rule3 = RankRule::fixed(f->ranks[1]);
    } else {
        const double eps2 = std::holds_alternative<AccuracyBudget>(crit)
                                ? std::get<AccuracyBudget>(crit).eps2
                                : std::pow(std::get<RelativeAccuracy>(crit).eps, 2) * y2;
        rule1 = rule3 = RankRule::energy(y2 - eps2);
    }

    Matrix x3 = opt.init_x3 ? *opt.init_x3 : Matrix::Identity(i3, i3);
    detail::require(x3.cols() == i3, "tucker2: init_x3 has wrong column count");

    const ConstMatrixMap y12(y.data().data(), i1 * i2, i3); // [Y]_(1,2)
    const ConstMatrixMap y1(y.data().data(), i1, i2 * i3);  // [Y]_(1)

    Tucker2Result out;
    Matrix x1;
    double prev = 0.0;
    for (index_t it = 0; it < std::max<index_t>(opt.max_iters, 1); ++it) {
        const Matrix w = y12 * x3.transpose(); // (I1 I2) x R2
        const ConstMatrixMap w1(w.data(), i1, i2 * x3.rows());
        const Matrix q1 = w1 * w1.transpose();
        const auto e1 = leading_eig(0.5 * (q1 + q1.transpose()), rule1);
        x1 = e1.vectors;
        // The identity start is not a feasible rank-R2 model, so its X1 error is not logged.
        if (it > 0 || opt.init_x3) out.errors.push_back(std::max(0.0, y2 - e1.values.sum()));

        const Matrix v = x1.transpose() * y1; // R1 x (I2 I3)
        const ConstMatrixMap v12(v.data(), x1.cols() * i2, i3);
        const Matrix q3 = v12.transpose() * v12;
        const auto e3 = leading_eig(0.5 * (q3 + q3.transpose()), rule3);
        x3 = e3.vectors.transpose();
        out.lambda3 = e3.values;
        const double err = std::max(0.0, y2 - e3.values.sum());
        out.errors.push_back(err);
        out.iterations = it + 1;

        const bool done = it > 0 && std::abs(prev - err) <= opt.tol * std::max(prev, 0.0);
        prev = err;
        if (done || err == 0.0) break;
    }

    const auto r1 = x1.cols(), r2 = x3.rows();
    const Matrix v = x1.transpose() * y1;
    const ConstMatrixMap v12(v.data(), r1 * i2, i3);
    const Matrix g = v12 * x3.transpose();
    out.X1 = x1;
    out.X3 = x3;
    out.core = DenseTensor({static_cast<index_t>(r1), static_cast<index_t>(i2),
                            static_cast<index_t>(r2)},
                           std::vector<double>(g.data(), g.data() + g.size()));
    out.error = std::max(0.0, y2 - out.core.norm2());
    return out;
}

} // namespace ttd
