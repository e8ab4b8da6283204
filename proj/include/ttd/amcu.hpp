#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "tt_decomp.hpp"
#include "tt_tensor.hpp"

namespace ttd {

enum class Direction { left_to_right, right_to_left };

inline const char* to_string(Direction d) {
    return d == Direction::left_to_right ? "left_to_right" : "right_to_left";
}

struct StopRule {
    index_t max_sweeps = 100;
    double tol = 1e-6; ///< relative change of the global error between sweeps
};

/**
 * Block layout of a sweep. Blocks hold k consecutive cores; left-to-right
 * blocks start at 0, s, 2s, ...; right-to-left blocks end at Ñ, Ñ-s, ...
 * All indices are 0-based, so the default Ñ is N-1.
 */
struct SweepSchedule {
    index_t k = 2;
    index_t s = 1;
    std::optional<index_t> start_right;
    StopRule stop;

    index_t start(index_t n_ord) const { return start_right.value_or(n_ord - 1); }

    void check(index_t n_ord) const {
        detail::require(k >= 1 && k <= 3, "SweepSchedule: k must be 1, 2 or 3");
        detail::require(s >= 1 && s <= k, "SweepSchedule: stride must satisfy 1 <= s <= k");
        detail::require(n_ord >= 2, "SweepSchedule: tensor order must be at least 2");
        detail::require(k <= n_ord, "SweepSchedule: block size exceeds tensor order");
        const index_t st = start(n_ord);
        const index_t lo = k == 1 ? 1 : k - 1;
        detail::require(st >= lo && st <= n_ord - 1,
                        "SweepSchedule: right-to-left start out of range");
    }
};

/// Left-to-right blocks (first core index) of one sweep.
inline std::vector<index_t> left_blocks(const SweepSchedule& sch, index_t n_ord) {
    std::vector<index_t> out;
    const index_t last = sch.k == 1 ? n_ord - 2 : n_ord - sch.k;
    for (index_t n = 0; n <= last; n += sch.s) out.push_back(n);
    return out;
}

/// Right-to-left blocks (last core index) of one sweep.
inline std::vector<index_t> right_blocks(const SweepSchedule& sch, index_t n_ord) {
    std::vector<index_t> out;
    const index_t lo = sch.k == 1 ? 1 : sch.k - 1;
    for (index_t m = sch.start(n_ord);; m -= sch.s) {
        out.push_back(m);
        if (m < lo + sch.s) break;
    }
    return out;
}

enum class BlockKernel {
    one_side,   ///< single core, truncated SVD, rank of one bond adjusted
    two_side,   ///< single core, Tucker-2 with both bonds adjusted
    matrix_svd, ///< two cores, truncated SVD of the (1,2) unfolding
    tucker2     ///< three cores, Tucker-2 of the ((1,2),3,(4,5)) unfolding
};

inline const char* to_string(BlockKernel k) {
    switch (k) {
    case BlockKernel::one_side: return "ascu1";
    case BlockKernel::two_side: return "ascu2";
    case BlockKernel::matrix_svd: return "adcu";
    case BlockKernel::tucker2: return "atcu";
    }
    return "?";
}

struct BlockRecord {
    index_t sweep = 0; ///< 1-based
    Direction direction = Direction::left_to_right;
    index_t n = 0, m = 0;
    std::vector<index_t> ranks; ///< bond ranks R_n..R_{m-1} after the update (two_side: R_{n-1}, R_n)
    double local_budget = std::numeric_limits<double>::quiet_NaN();
    bool negative_budget = false;
    double t_norm2 = 0.0;
    double error = 0.0; ///< D = ‖Y‖² - ‖T‖² + ‖T - X_{n:m}‖²
};

struct AmcuResult {
    TTTensor tt;
    std::vector<BlockRecord> blocks;
    std::vector<double> sweep_errors;
    index_t sweeps = 0;
    bool converged = false;
    bool budget_met = true;
    bool negative_budget = false;
    double y_norm2 = 0.0;
    double eps2 = std::numeric_limits<double>::quiet_NaN();
};

/// State handed to an observer just before a block is solved.
struct BlockVisit {
    index_t sweep;
    Direction direction;
    index_t n, m;
    const TTTensor& x;
    const DenseTensor& t;
};

using BlockObserver = std::function<void(const BlockVisit&)>;

struct AmcuOptions {
    SweepSchedule schedule;
    std::optional<BlockKernel> kernel; ///< derived from schedule.k when absent
    std::optional<TTTensor> init;
    bool skip_neighbor_push = true;
    bool left_to_right_only = false;
    Tucker2Options tucker;
    BlockObserver observer;
};

/// T_{n:m} = (X_{<n} ⋉ Y) ⋊ X_{>m} without caching, shape R_{n-1} x I_n..I_m x R_m.
inline DenseTensor contract_block(const DenseTensor& y, const TTTensor& x, index_t n, index_t m) {
    detail::require(n <= m && m < x.order(), "contract_block: bad block range");
    detail::require(y.shape() == x.extents(), "contract_block: shape mismatch");
    Shape s{1};
    s.insert(s.end(), y.shape().begin(), y.shape().end());
    DenseTensor a = reshape(y, s);
    for (index_t j = 0; j < n; ++j) a = left_contract(x.core(j), a, 2);
    s = a.shape();
    s.push_back(1);
    a.reshape_inplace(s);
    for (index_t j = x.order(); j-- > m + 1;) a = right_contract(a, x.core(j), 2);
    return a;
}

/// D = ‖Y‖² - ‖T‖² + ‖T - X_{n:m}‖² where `xb` is the dense block product.
inline double block_error(double y_norm2, const DenseTensor& t, const DenseTensor& xb) {
    detail::require(t.size() == xb.size(), "block_error: size mismatch");
    double r = 0.0;
    for (index_t i = 0; i < t.size(); ++i) r += (t[i] - xb[i]) * (t[i] - xb[i]);
    return y_norm2 - t.norm2() + r;
}

/// Cores with vec(X_n(r,:,:)) = e_r; every core except the first is right-orthogonal.
inline TTTensor unit_vector_init(const Shape& extents, const std::vector<index_t>& ranks) {
    const index_t n_ord = extents.size();
    detail::require(n_ord >= 1 && ranks.size() + 1 == n_ord, "unit_vector_init: rank count");
    std::vector<DenseTensor> cores;
    for (index_t n = 0; n < n_ord; ++n) {
        const index_t r0 = n == 0 ? 1 : ranks[n - 1];
        const index_t r1 = n + 1 == n_ord ? 1 : ranks[n];
        detail::require(r0 <= extents[n] * r1, "unit_vector_init: rank " + std::to_string(r0) +
                                                   " exceeds I_n R_n at core " +
                                                   std::to_string(n));
        DenseTensor c({r0, extents[n], r1});
        for (index_t r = 0; r < r0; ++r) c[r + r0 * r] = 1.0; // row r of [X]_(1) is e_r
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores), 0);
}

/// Ranks R_n = ∏_{k>n} I_k for which unit-vector cores span the whole data space.
inline std::vector<index_t> full_right_ranks(const Shape& extents) {
    std::vector<index_t> r(extents.size() - 1);
    index_t p = 1;
    for (index_t n = extents.size() - 1; n-- > 0;) {
        p *= extents[n + 1];
        r[n] = p;
    }
    return r;
}

namespace detail {

inline DenseTensor tensor_from(const Matrix& m, Shape s) {
    return DenseTensor(std::move(s), std::vector<double>(m.data(), m.data() + m.size()));
}

/// Progressive left tensors L_n = X_{n-1} ⋉₂ L_{n-1}, L_0 = Y.
class DenseProvider {
public:
    explicit DenseProvider(const DenseTensor& y) : norm2_(y.norm2()), extents_(y.shape()) {
        Shape s{1};
        s.insert(s.end(), y.shape().begin(), y.shape().end());
        left_.resize(y.order());
        left_[0] = reshape(y, s);
    }

    double norm2() const { return norm2_; }
    const Shape& extents() const { return extents_; }

    const DenseTensor& left(const std::vector<DenseTensor>& cores, index_t n) {
        for (; valid_ < n; ++valid_) left_[valid_ + 1] = left_contract(cores[valid_], left_[valid_], 2);
        return left_[n];
    }

    DenseTensor block(const std::vector<DenseTensor>& cores, index_t n, index_t m) {
        DenseTensor a = left(cores, n);
        Shape s = a.shape();
        s.push_back(1);
        a.reshape_inplace(s);
        for (index_t j = cores.size(); j-- > m + 1;) a = right_contract(a, cores[j], 2);
        return a;
    }

    void changed(index_t i) { valid_ = std::min(valid_, i); }

    /// Core n-1 was replaced by X_{n-1} • A.
    void rotate_left(index_t n, const Matrix& a) {
        if (valid_ >= n) {
            left_[n] = left_contract(tensor_from(a, {static_cast<index_t>(a.rows()),
                                                     static_cast<index_t>(a.cols())}),
                                     left_[n], 1);
            valid_ = n;
        } else {
            changed(n - 1);
        }
    }

private:
    double norm2_;
    Shape extents_;
    std::vector<DenseTensor> left_;
    index_t valid_ = 0;
};

template <class P>
concept HasBlockSvd = requires(P& p, const std::vector<DenseTensor>& c, index_t n) {
    { p.block_svd(c, n) } -> std::same_as<SvdResult>;
};

struct Pending {
    index_t core;
    Matrix factor;
    Side side; ///< left: core <- factor • core; right: core <- core • factor
};

template <class Provider>
class Sweeper {
public:
    Sweeper(Provider& p, TTTensor init, const TruncationCriterion& crit, const AmcuOptions& opt,
            BlockKernel kernel)
        : p_(p), opt_(opt), kernel_(kernel), cores_(init.cores()) {
        n_ord_ = cores_.size();
        y2_ = p_.norm2();
        if (const auto* f = std::get_if<FixedRanks>(&crit)) {
            fixed_ = f->ranks;
        } else if (const auto* a = std::get_if<AccuracyBudget>(&crit)) {
            eps2_ = a->eps2;
        } else {
            const double e = std::get<RelativeAccuracy>(crit).eps;
            eps2_ = e * e * y2_;
        }
        if (init.ortho()) {
            lo_ = hi_ = *init.ortho();
        } else {
            lo_ = 0;
            hi_ = n_ord_ - 1;
        }
    }

    AmcuResult run() {
        AmcuResult res;
        res.y_norm2 = y2_;
        res.eps2 = fixed_ ? std::numeric_limits<double>::quiet_NaN() : eps2_;
        const auto& sch = opt_.schedule;
        const auto lr = left_blocks(sch, n_ord_);
        const auto rl = right_blocks(sch, n_ord_);
        double prev = 0.0;
        for (index_t sweep = 1; sweep <= sch.stop.max_sweeps; ++sweep) {
            sweep_ = sweep;
            for (index_t n : lr) visit(Direction::left_to_right, n, n + sch.k - 1);
            flush();
            if (!opt_.left_to_right_only) {
                for (index_t m : rl) visit(Direction::right_to_left, m + 1 - sch.k, m);
                flush();
            }
            const double err = last_error_;
            res.sweep_errors.push_back(err);
            res.sweeps = sweep;
            const bool done =
                sweep > 1 && std::abs(prev - err) <= sch.stop.tol * std::max(prev, 0.0);
            prev = err;
            if (done || err <= 0.0) {
                res.converged = true;
                break;
            }
        }
        res.blocks = std::move(records_);
        res.negative_budget = negative_;
        if (!fixed_ && res.sweeps > 0) res.budget_met = last_error_ <= eps2_ * (1.0 + 1e-10) + 1e-300;
        std::optional<index_t> mu;
        if (lo_ == hi_) mu = lo_;
        res.tt = TTTensor(std::move(cores_), mu);
        return res;
    }

private:
    // --- orthogonality window: cores < lo_ left-, cores > hi_ right-orthogonal ---

    void left_orth(index_t i) {
        touch(i);
        touch(i + 1);
        detail::left_orthogonalize(cores_, i);
        p_.changed(i);
        p_.changed(i + 1);
    }

    void right_orth(index_t i) {
        touch(i);
        touch(i - 1);
        detail::right_orthogonalize(cores_, i);
        p_.changed(i);
        p_.changed(i - 1);
    }

    void bracket(index_t n, index_t m) {
        for (index_t i = lo_; i < n; ++i) left_orth(i);
        for (index_t i = hi_; i > m; --i) right_orth(i);
        lo_ = n;
        hi_ = m;
    }

    void touch(index_t i) {
        if (pending_ && pending_->core == i) flush();
    }

    void flush() {
        if (!pending_) return;
        apply(*pending_);
        pending_.reset();
    }

    void apply(const Pending& pd) {
        DenseTensor& c = cores_[pd.core];
        if (pd.side == Side::left) {
            const Matrix nm = pd.factor * c.matrix(1);
            c = tensor_from(nm, {static_cast<index_t>(pd.factor.rows()), c.extent(1), c.extent(2)});
        } else {
            const Matrix nm = c.matrix(2) * pd.factor;
            c = tensor_from(nm, {c.extent(0), c.extent(1), static_cast<index_t>(pd.factor.cols())});
        }
        p_.changed(pd.core);
    }

    void push(Pending pd) {
        flush();
        if (opt_.skip_neighbor_push) {
            pending_ = std::move(pd);
        } else {
            apply(pd);
        }
    }

    // --- per-block budget ---

    struct Budget {
        double local = std::numeric_limits<double>::quiet_NaN();
        bool negative = false;
    };

    Budget budget(double t2) {
        Budget b;
        if (fixed_) return b;
        b.local = eps2_ - y2_ + t2;
        if (b.local < 0.0) {
            b.negative = true;
            negative_ = true;
            b.local = 0.0;
        }
        return b;
    }

    RankRule rule_for(index_t bond, const Budget& b) const {
        if (fixed_) return RankRule::fixed((*fixed_)[bond]);
        return RankRule::tail(b.local);
    }

    void visit(Direction dir, index_t n, index_t m) {
        // A pending push into a core the block overwrites is dropped.
        if (opt_.observer) flush();
        if (pending_ && kernel_ == BlockKernel::one_side && pending_->core == n) pending_.reset();
        bracket(n, m);

        BlockRecord rec;
        rec.sweep = sweep_;
        rec.direction = dir;
        rec.n = n;
        rec.m = m;

        std::optional<DenseTensor> t;
        const bool lazy_svd = kernel_ == BlockKernel::matrix_svd && !opt_.observer;
        if constexpr (HasBlockSvd<Provider>) {
            if (!lazy_svd) t = p_.block(cores_, n, m);
        } else {
            t = p_.block(cores_, n, m);
        }
        if (opt_.observer) {
            const TTTensor snap(cores_, std::nullopt);
            opt_.observer(BlockVisit{sweep_, dir, n, m, snap, *t});
        }

        double residual = 0.0;
        switch (kernel_) {
        case BlockKernel::one_side: residual = one_side(dir, n, *t, rec); break;
        case BlockKernel::two_side: residual = two_side(dir, n, *t, rec); break;
        case BlockKernel::matrix_svd: residual = matrix_svd(dir, n, t, rec); break;
        case BlockKernel::tucker2: residual = tucker(dir, n, *t, rec); break;
        }
        rec.error = y2_ - rec.t_norm2 + residual;
        last_error_ = rec.error;
        records_.push_back(rec);
        after_block(dir, n, m);
    }

    void after_block(Direction dir, index_t n, index_t m) {
        const index_t s = opt_.schedule.s;
        if (dir == Direction::left_to_right) {
            const index_t last = std::min(n + s - 1, n_ord_ - 2);
            for (index_t i = n; i <= last; ++i)
                if (!(left_done_ && i <= *left_done_)) left_orth(i);
            lo_ = last + 1;
            hi_ = std::max(m, lo_);
        } else {
            const index_t first = std::max<index_t>(m + 1 >= s ? m + 1 - s : 0, 1);
            for (index_t i = m; i >= first; --i)
                if (!(right_done_ && i >= *right_done_)) right_orth(i);
            hi_ = first - 1;
            lo_ = std::min(n, hi_);
        }
        left_done_.reset();
        right_done_.reset();
    }

    // --- kernels; each returns ‖T - X_{n:m}‖² and fills t_norm2 and ranks ---

    double one_side(Direction dir, index_t n, const DenseTensor& t, BlockRecord& rec) {
        rec.t_norm2 = t.norm2();
        const Budget b = budget(rec.t_norm2);
        rec.local_budget = b.local;
        rec.negative_budget = b.negative;
        const index_t r0 = t.extent(0), i = t.extent(1), r1 = t.extent(2);
        if (dir == Direction::left_to_right) {
            const auto svd = truncated_svd(t.matrix(2), rule_for(n, b));
            cores_[n] = tensor_from(svd.U, {r0, i, svd.rank});
            p_.changed(n);
            left_done_ = n;
            push({n + 1, svd.sigma.asDiagonal() * svd.V.transpose(), Side::left});
            rec.ranks = {svd.rank};
            return svd.discarded;
        }
        const auto svd = truncated_svd(t.matrix(1), rule_for(n - 1, b));
        cores_[n] = tensor_from(svd.V.transpose(), {svd.rank, i, r1});
        p_.changed(n);
        right_done_ = n;
        push({n - 1, svd.U * svd.sigma.asDiagonal(), Side::right});
        rec.ranks = {svd.rank};
        return svd.discarded;
    }

    double two_side(Direction, index_t n, const DenseTensor& t, BlockRecord& rec) {
        rec.t_norm2 = t.norm2();
        const Budget b = budget(rec.t_norm2);
        rec.local_budget = b.local;
        rec.negative_budget = b.negative;
        TruncationCriterion c = AccuracyBudget{b.local};
        if (fixed_)
            c = FixedRanks{{n > 0 ? (*fixed_)[n - 1] : 1, n + 1 < n_ord_ ? (*fixed_)[n] : 1}};
        auto tk = ttd::tucker2(t, c, opt_.tucker);
        DenseTensor g = tk.core;
        if (n > 0) {
            DenseTensor& prev = cores_[n - 1];
            const Matrix pm = prev.matrix(2) * tk.X1;
            prev = tensor_from(pm, {prev.extent(0), prev.extent(1), static_cast<index_t>(tk.X1.cols())});
            p_.rotate_left(n, tk.X1);
        } else {
            const Matrix gm = tk.X1 * g.matrix(1);
            g = tensor_from(gm, {1, g.extent(1), g.extent(2)});
        }
        if (n + 1 < n_ord_) {
            DenseTensor& next = cores_[n + 1];
            const Matrix nm = tk.X3 * next.matrix(1);
            next = tensor_from(nm, {static_cast<index_t>(tk.X3.rows()), next.extent(1), next.extent(2)});
            p_.changed(n + 1);
        } else {
            const Matrix gm = g.matrix(2) * tk.X3;
            g = tensor_from(gm, {g.extent(0), g.extent(1), 1});
        }
        cores_[n] = std::move(g);
        p_.changed(n);
        rec.ranks = {cores_[n].extent(0), cores_[n].extent(2)};
        return tk.error;
    }

    double matrix_svd(Direction dir, index_t n, const std::optional<DenseTensor>& t,
                      BlockRecord& rec) {
        SvdResult full;
        index_t r0, i0, i1, r2;
        if (t) {
            full = thin_svd(t->matrix(2));
            r0 = t->extent(0), i0 = t->extent(1), i1 = t->extent(2), r2 = t->extent(3);
        } else {
            if constexpr (HasBlockSvd<Provider>) full = p_.block_svd(cores_, n);
            r0 = cores_[n].extent(0), i0 = cores_[n].extent(1);
            i1 = cores_[n + 1].extent(1), r2 = cores_[n + 1].extent(2);
        }
        rec.t_norm2 = full.sigma.squaredNorm();
        const Budget b = budget(rec.t_norm2);
        rec.local_budget = b.local;
        rec.negative_budget = b.negative;
        const auto svd = truncate(full, rule_for(n, b));
        const index_t r = svd.rank;
        if (dir == Direction::left_to_right) {
            cores_[n] = tensor_from(svd.U, {r0, i0, r});
            cores_[n + 1] = tensor_from(svd.sigma.asDiagonal() * svd.V.transpose(), {r, i1, r2});
            left_done_ = n;
        } else {
            cores_[n] = tensor_from(svd.U * svd.sigma.asDiagonal(), {r0, i0, r});
            cores_[n + 1] = tensor_from(svd.V.transpose(), {r, i1, r2});
            right_done_ = n + 1;
        }
        p_.changed(n);
        p_.changed(n + 1);
        rec.ranks = {r};
        return svd.discarded;
    }

    double tucker(Direction dir, index_t n, const DenseTensor& t, BlockRecord& rec) {
        rec.t_norm2 = t.norm2();
        const Budget b = budget(rec.t_norm2);
        rec.local_budget = b.local;
        rec.negative_budget = b.negative;
        const index_t r0 = t.extent(0), i0 = t.extent(1), i1 = t.extent(2), i2 = t.extent(3),
                      r3 = t.extent(4);
        const DenseTensor z = reshape(t, {r0 * i0, i1, i2 * r3});
        Tucker2Options to = opt_.tucker;
        TruncationCriterion c = AccuracyBudget{b.local};
        if (fixed_) {
            c = FixedRanks{{(*fixed_)[n], (*fixed_)[n + 1]}};
            // Warm start from the current row space of X_{n+2} keeps the update monotone.
            const DenseTensor& x2 = cores_[n + 2];
            if (!to.init_x3 && x2.extent(0) == (*fixed_)[n + 1] && x2.extent(0) <= i2 * r3) {
                Matrix v = orthonormal_rows(x2.matrix(1));
                if (v.rows() == static_cast<Eigen::Index>(x2.extent(0))) to.init_x3 = std::move(v);
            }
        }
        const auto tk = ttd::tucker2(z, c, to);
        const auto ra = static_cast<index_t>(tk.X1.cols());
        const auto rb = static_cast<index_t>(tk.X3.rows());
        cores_[n] = tensor_from(tk.X1, {r0, i0, ra});
        DenseTensor g = tk.core;
        DenseTensor x3 = tensor_from(tk.X3, {rb, i2, r3});
        if (dir == Direction::left_to_right) {
            left_done_ = n;
            if (opt_.schedule.s >= 2 && lambda_scale(g, x3, tk.lambda3)) left_done_ = n + 1;
        } else {
            right_done_ = n + 2;
        }
        cores_[n + 1] = std::move(g);
        cores_[n + 2] = std::move(x3);
        for (index_t j = n; j <= n + 2; ++j) p_.changed(j);
        rec.ranks = {ra, rb};
        return tk.error;
    }

    /// Scales frontal slices of g by 1/√λ and rows of x3 by √λ; false when not accurate.
    static bool lambda_scale(DenseTensor& g, DenseTensor& x3, const Vector& lambda) {
        const auto rb = static_cast<Eigen::Index>(g.extent(2));
        if (lambda.size() != rb || lambda.minCoeff() <= 0.0) return false;
        DenseTensor gs = g;
        auto gm = gs.matrix(2);
        for (Eigen::Index r = 0; r < rb; ++r) gm.col(r) /= std::sqrt(lambda(r));
        if (ortho_residual(gs, Side::left) > 1e-12) return false;
        auto xm = x3.matrix(1);
        for (Eigen::Index r = 0; r < rb; ++r) xm.row(r) *= std::sqrt(lambda(r));
        g = std::move(gs);
        return true;
    }

    Provider& p_;
    const AmcuOptions& opt_;
    BlockKernel kernel_;
    std::vector<DenseTensor> cores_;
    index_t n_ord_ = 0;
    double y2_ = 0.0;
    double eps2_ = 0.0;
    std::optional<std::vector<index_t>> fixed_;
    index_t lo_ = 0, hi_ = 0;
    std::optional<Pending> pending_;
    std::optional<index_t> left_done_, right_done_;
    std::vector<BlockRecord> records_;
    index_t sweep_ = 0;
    double last_error_ = 0.0;
    bool negative_ = false;
};

inline BlockKernel kernel_for(const AmcuOptions& opt) {
    if (opt.kernel) return *opt.kernel;
    switch (opt.schedule.k) {
    case 1: return BlockKernel::one_side;
    case 2: return BlockKernel::matrix_svd;
    default: return BlockKernel::tucker2;
    }
}

inline void check_kernel(BlockKernel kern, const SweepSchedule& sch) {
    const index_t need = kern == BlockKernel::matrix_svd ? 2 : kern == BlockKernel::tucker2 ? 3 : 1;
    require(sch.k == need, std::string("amcu: kernel ") + to_string(kern) + " needs k = " +
                               std::to_string(need));
}

/// The criterion used for the default initialization: budgets become absolute.
inline TruncationCriterion init_criterion(const TruncationCriterion& crit, double y2) {
    if (const auto* r = std::get_if<RelativeAccuracy>(&crit))
        return AccuracyBudget{r->eps * r->eps * y2};
    return crit;
}

} // namespace detail

/**
 * Alternating multi-core update on dense data. The default initialization is
 * TT-SVD under the same criterion (budgets made absolute); an explicit
 * initialization in `opt.init` takes precedence. Zero sweeps return the
 * initialization unchanged.
 */
inline AmcuResult amcu(const DenseTensor& y, const TruncationCriterion& crit,
                       const AmcuOptions& opt = {}) {
    check_criterion(crit);
    const index_t n_ord = y.order();
    opt.schedule.check(n_ord);
    const BlockKernel kern = detail::kernel_for(opt);
    detail::check_kernel(kern, opt.schedule);
    if (const auto* f = std::get_if<FixedRanks>(&crit))
        detail::check_fixed_ranks(*f, n_ord - 1, "amcu");

    TTTensor init = opt.init ? *opt.init : tt_svd(y, detail::init_criterion(crit, y.norm2()));
    detail::require(init.extents() == y.shape(), "amcu: initialization shape mismatch");
    if (opt.schedule.stop.max_sweeps == 0) {
        AmcuResult r;
        r.tt = init;
        r.y_norm2 = y.norm2();
        return r;
    }
    detail::DenseProvider p(y);
    detail::Sweeper<detail::DenseProvider> sw(p, std::move(init), crit, opt, kern);
    return sw.run();
}

inline AmcuResult ascu_one_side(const DenseTensor& y, const TruncationCriterion& crit,
                                AmcuOptions opt = {}) {
    opt.schedule.k = 1;
    opt.schedule.s = 1;
    opt.kernel = BlockKernel::one_side;
    return amcu(y, crit, opt);
}

inline AmcuResult ascu_two_side(const DenseTensor& y, const TruncationCriterion& crit,
                                AmcuOptions opt = {}) {
    opt.schedule.k = 1;
    opt.schedule.s = 1;
    opt.kernel = BlockKernel::two_side;
    return amcu(y, crit, opt);
}

/// Double-core updates; overlap 1 gives blocks (0,1),(1,2),..., overlap 0 gives (0,1),(2,3),...
inline AmcuResult adcu(const DenseTensor& y, const TruncationCriterion& crit, index_t overlap = 1,
                       AmcuOptions opt = {}) {
    detail::require(overlap <= 1, "adcu: overlap must be 0 or 1");
    opt.schedule.k = 2;
    opt.schedule.s = 2 - overlap;
    opt.kernel = BlockKernel::matrix_svd;
    return amcu(y, crit, opt);
}

/// Triple-core updates with overlap 0, 1 or 2.
inline AmcuResult atcu(const DenseTensor& y, const TruncationCriterion& crit, index_t overlap = 2,
                       AmcuOptions opt = {}) {
    detail::require(overlap <= 2, "atcu: overlap must be 0, 1 or 2");
    opt.schedule.k = 3;
    opt.schedule.s = 3 - overlap;
    opt.kernel = BlockKernel::tucker2;
    return amcu(y, crit, opt);
}

} // namespace ttd
