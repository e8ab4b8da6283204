#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "amcu.hpp"

namespace ttd {

/// Φ_{n+1} = X_n ⋉₂ (Φ_n • Y_n), an R_n x S_n matrix.
inline Matrix boundary_update_left(const Matrix& phi, const DenseTensor& yn, const DenseTensor& xn) {
    detail::require(phi.cols() == static_cast<Eigen::Index>(yn.extent(0)) &&
                        phi.rows() == static_cast<Eigen::Index>(xn.extent(0)) &&
                        yn.extent(1) == xn.extent(1),
                    "boundary_update_left: rank mismatch");
    const auto r0 = static_cast<Eigen::Index>(xn.extent(0));
    const auto i = static_cast<Eigen::Index>(xn.extent(1));
    const auto s1 = static_cast<Eigen::Index>(yn.extent(2));
    const Matrix py = phi * yn.matrix(1); // R_{n-1} x (I_n S_n)
    const ConstMatrixMap py12(py.data(), r0 * i, s1);
    return xn.matrix(2).transpose() * py12;
}

/// Ψ_{n-1} = (Y_n • Ψ_n) ⋊₂ X_n, an S_{n-1} x R_{n-1} matrix.
inline Matrix boundary_update_right(const Matrix& psi, const DenseTensor& yn, const DenseTensor& xn) {
    detail::require(psi.rows() == static_cast<Eigen::Index>(yn.extent(2)) &&
                        psi.cols() == static_cast<Eigen::Index>(xn.extent(2)) &&
                        yn.extent(1) == xn.extent(1),
                    "boundary_update_right: rank mismatch");
    const auto s0 = static_cast<Eigen::Index>(yn.extent(0));
    const auto i = static_cast<Eigen::Index>(yn.extent(1));
    const Matrix yp = yn.matrix(2) * psi; // (S_{n-1} I_n) x R_n
    const ConstMatrixMap yp1(yp.data(), s0, i * psi.cols());
    return yp1 * xn.matrix(1).transpose();
}

/// Φ_n • Y_n • ... • Y_m • Ψ_m.
inline DenseTensor contract_block_tt(const Matrix& phi, const std::vector<DenseTensor>& ycores,
                                     index_t n, index_t m, const Matrix& psi) {
    DenseTensor a = DenseTensor::from_matrix(phi);
    for (index_t j = n; j <= m; ++j) a = train_contract(a, ycores[j]);
    return train_contract(a, DenseTensor::from_matrix(psi));
}

/// T_{n:m} from boundaries computed from scratch.
inline DenseTensor contract_block_tt(const TTTensor& y, const TTTensor& x, index_t n, index_t m) {
    detail::require(y.extents() == x.extents(), "contract_block_tt: shape mismatch");
    detail::require(n <= m && m < x.order(), "contract_block_tt: bad block range");
    Matrix phi = Matrix::Ones(1, 1);
    for (index_t j = 0; j < n; ++j) phi = boundary_update_left(phi, y.core(j), x.core(j));
    Matrix psi = Matrix::Ones(1, 1);
    for (index_t j = x.order() - 1; j > m; --j) psi = boundary_update_right(psi, y.core(j), x.core(j));
    return contract_block_tt(phi, y.cores(), n, m, psi);
}

/**
 * SVD of F Gᵀ through QR of both factors and an SVD of the small product of
 * the triangular factors. Falls back to the direct SVD when the shared
 * dimension is not smaller than both outer dimensions.
 */
inline SvdResult reduced_svd_block(const Eigen::Ref<const Matrix>& f, const Eigen::Ref<const Matrix>& g) {
    detail::require(f.cols() == g.cols(), "reduced_svd_block: inner dimension mismatch");
    const Eigen::Index s = f.cols();
    if (s >= f.rows() || s >= g.rows()) return thin_svd(f * g.transpose());
    const auto qf = thin_qr(f);
    const auto qg = thin_qr(g);
    auto small = thin_svd(qf.R * qg.R.transpose());
    SvdResult out;
    out.U = qf.Q * small.U;
    out.V = qg.Q * small.V;
    out.sigma = small.sigma;
    out.rank = small.rank;
    detail::fix_signs(out.U, &out.V);
    return out;
}

namespace detail {

/// Boundary matrices Φ_j (valid for j <= phi_valid_) and Ψ_j (valid for j >= psi_valid_).
class TtProvider {
public:
    explicit TtProvider(const TTTensor& y) : y_(y), norm2_(tt_norm(y)), extents_(y.extents()) {
        const index_t n = y.order();
        phi_.assign(n, Matrix::Ones(1, 1));
        psi_.assign(n, Matrix::Ones(1, 1));
        psi_valid_ = n - 1;
    }

    double norm2() const { return norm2_; }
    const Shape& extents() const { return extents_; }

    const Matrix& phi(const std::vector<DenseTensor>& cores, index_t n) {
        for (; phi_valid_ < n; ++phi_valid_)
            phi_[phi_valid_ + 1] = boundary_update_left(phi_[phi_valid_], y_.core(phi_valid_),
                                                        cores[phi_valid_]);
        return phi_[n];
    }

    const Matrix& psi(const std::vector<DenseTensor>& cores, index_t m) {
        for (; psi_valid_ > m; --psi_valid_)
            psi_[psi_valid_ - 1] = boundary_update_right(psi_[psi_valid_], y_.core(psi_valid_),
                                                         cores[psi_valid_]);
        return psi_[m];
    }

    DenseTensor block(const std::vector<DenseTensor>& cores, index_t n, index_t m) {
        const Matrix& l = phi(cores, n);
        const Matrix& r = psi(cores, m);
        return contract_block_tt(l, y_.cores(), n, m, r);
    }

    SvdResult block_svd(const std::vector<DenseTensor>& cores, index_t n) {
        const Matrix& l = phi(cores, n);
        const Matrix& r = psi(cores, n + 1);
        const DenseTensor& y0 = y_.core(n);
        const DenseTensor& y1 = y_.core(n + 1);
        const Matrix f0 = l * y0.matrix(1);
        const ConstMatrixMap f(f0.data(), l.rows() * static_cast<Eigen::Index>(y0.extent(1)),
                               static_cast<Eigen::Index>(y0.extent(2)));
        const Matrix g0 = y1.matrix(2) * r; // (S_n I_{n+1}) x R_{n+1}
        const ConstMatrixMap g1(g0.data(), static_cast<Eigen::Index>(y1.extent(0)),
                                static_cast<Eigen::Index>(y1.extent(1)) * r.cols());
        return reduced_svd_block(f, g1.transpose());
    }

    void changed(index_t i) {
        phi_valid_ = std::min(phi_valid_, i);
        psi_valid_ = std::max(psi_valid_, i);
    }

    void rotate_left(index_t n, const Matrix& a) {
        if (phi_valid_ >= n) {
            phi_[n] = a.transpose() * phi_[n];
            phi_valid_ = n;
        } else {
            phi_valid_ = std::min(phi_valid_, n - 1);
        }
        psi_valid_ = std::max(psi_valid_, n - 1);
    }

private:
    const TTTensor& y_;
    double norm2_;
    Shape extents_;
    std::vector<Matrix> phi_, psi_;
    index_t phi_valid_ = 0;
    index_t psi_valid_ = 0;
};

} // namespace detail

/**
 * AMCU for data given as a TT-tensor. Blocks are contracted through the
 * boundary matrices, so the dense tensor is never formed. The default
 * initialization rounds Y under the same criterion.
 */
inline AmcuResult amcu_tt(const TTTensor& y, const TruncationCriterion& crit,
                          const AmcuOptions& opt = {}) {
    check_criterion(crit);
    const index_t n_ord = y.order();
    opt.schedule.check(n_ord);
    const BlockKernel kern = detail::kernel_for(opt);
    detail::check_kernel(kern, opt.schedule);
    if (const auto* f = std::get_if<FixedRanks>(&crit))
        detail::check_fixed_ranks(*f, n_ord - 1, "amcu_tt");

    detail::TtProvider p(y);
    TTTensor init = opt.init ? *opt.init : tt_round(y, detail::init_criterion(crit, p.norm2()));
    detail::require(init.extents() == y.extents(), "amcu_tt: initialization shape mismatch");
    if (opt.schedule.stop.max_sweeps == 0) {
        AmcuResult r;
        r.tt = init;
        r.y_norm2 = p.norm2();
        return r;
    }
    detail::Sweeper<detail::TtProvider> sw(p, std::move(init), crit, opt, kern);
    return sw.run();
}

/**
 * Compress-then-refine: TT-SVD of the dense data at relative accuracy
 * `eps_tilde`, then amcu_tt on the compressed train. Without `eps_tilde` the
 * precompression uses half the target relative accuracy (lossless under
 * FixedRanks). Relative targets are taken against ‖Y‖ of the dense data.
 */
inline AmcuResult amcu_compressed(const DenseTensor& y, const TruncationCriterion& crit,
                                  const AmcuOptions& opt = {},
                                  std::optional<double> eps_tilde = std::nullopt) {
    check_criterion(crit);
    const double y2 = y.norm2();
    double target = 0.0;
    if (const auto* r = std::get_if<RelativeAccuracy>(&crit)) target = r->eps;
    if (const auto* a = std::get_if<AccuracyBudget>(&crit))
        target = y2 > 0.0 ? std::sqrt(a->eps2 / y2) : 0.0;
    const double et = eps_tilde ? *eps_tilde : 0.5 * target;
    detail::require(et >= 0.0 && std::isfinite(et), "amcu_compressed: eps_tilde must be >= 0");
    const TTTensor yt = tt_svd(y, RelativeAccuracy{et});
    TruncationCriterion c = crit;
    if (const auto* r = std::get_if<RelativeAccuracy>(&crit)) c = AccuracyBudget{r->eps * r->eps * y2};
    return amcu_tt(yt, c, opt);
}

} // namespace ttd
