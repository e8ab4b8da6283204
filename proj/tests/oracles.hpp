// Brute-force reference implementations shared by the test suites.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ttd/dense_tensor.hpp"
#include "ttd/rng.hpp"
#include "ttd/tt_tensor.hpp"

namespace oracle {

using ttd::DenseTensor;
using ttd::index_t;
using ttd::Shape;

/// Calls f(idx) for every multi-index of `shape`, first index fastest.
template <class F>
void for_each_index(const Shape& shape, F&& f) {
    std::vector<index_t> idx(shape.size(), 0);
    const index_t total = ttd::shape_size(shape);
    for (index_t lin = 0; lin < total; ++lin) {
        f(idx);
        for (index_t k = 0; k < shape.size(); ++k) {
            if (++idx[k] < shape[k]) break;
            idx[k] = 0;
        }
    }
}

/// Column-major offset computed independently of DenseTensor.
inline index_t offset(const Shape& shape, const std::vector<index_t>& idx) {
    index_t off = 0, stride = 1;
    for (index_t k = 0; k < shape.size(); ++k) {
        off += idx[k] * stride;
        stride *= shape[k];
    }
    return off;
}

inline double get(const DenseTensor& t, const std::vector<index_t>& idx) {
    return t.values()[offset(t.shape(), idx)];
}

inline Shape join(const Shape& a, const Shape& b) {
    Shape s = a;
    s.insert(s.end(), b.begin(), b.end());
    if (s.empty()) s.push_back(1);
    return s;
}

/// c(i_1..i_{N-1}, j_2..j_K) = Σ_t a(i.., t) b(t, j..).
inline DenseTensor train(const DenseTensor& a, const DenseTensor& b) {
    const Shape ra(a.shape().begin(), a.shape().end() - 1);
    const Shape rb(b.shape().begin() + 1, b.shape().end());
    const index_t shared = a.shape().back();
    const Shape out_shape = join(ra, rb);
    DenseTensor c(out_shape);
    std::vector<double> vals(c.size(), 0.0);
    for_each_index(ra.empty() ? Shape{1} : ra, [&](const std::vector<index_t>& i) {
        for_each_index(rb.empty() ? Shape{1} : rb, [&](const std::vector<index_t>& j) {
            double s = 0.0;
            for (index_t t = 0; t < shared; ++t) {
                std::vector<index_t> ia(i.begin(), i.begin() + ra.size());
                ia.push_back(t);
                std::vector<index_t> ib{t};
                ib.insert(ib.end(), j.begin(), j.begin() + rb.size());
                s += get(a, ia) * get(b, ib);
            }
            std::vector<index_t> ic(i.begin(), i.begin() + ra.size());
            ic.insert(ic.end(), j.begin(), j.begin() + rb.size());
            if (ic.empty()) ic.push_back(0);
            vals[offset(out_shape, ic)] = s;
        });
    });
    return DenseTensor(out_shape, std::move(vals));
}

/// Sum over the first n modes of both tensors.
inline DenseTensor left(const DenseTensor& a, const DenseTensor& b, index_t n) {
    const Shape shared(a.shape().begin(), a.shape().begin() + n);
    const Shape ra(a.shape().begin() + n, a.shape().end());
    const Shape rb(b.shape().begin() + n, b.shape().end());
    const Shape out_shape = join(ra, rb);
    std::vector<double> vals(ttd::shape_size(out_shape), 0.0);
    for_each_index(ra.empty() ? Shape{1} : ra, [&](const std::vector<index_t>& i) {
        for_each_index(rb.empty() ? Shape{1} : rb, [&](const std::vector<index_t>& j) {
            double s = 0.0;
            for_each_index(shared, [&](const std::vector<index_t>& t) {
                std::vector<index_t> ia = t, ib = t;
                ia.insert(ia.end(), i.begin(), i.begin() + ra.size());
                ib.insert(ib.end(), j.begin(), j.begin() + rb.size());
                s += get(a, ia) * get(b, ib);
            });
            std::vector<index_t> ic(i.begin(), i.begin() + ra.size());
            ic.insert(ic.end(), j.begin(), j.begin() + rb.size());
            if (ic.empty()) ic.push_back(0);
            vals[offset(out_shape, ic)] = s;
        });
    });
    return DenseTensor(out_shape, std::move(vals));
}

/// Sum over the last n modes of both tensors.
inline DenseTensor right(const DenseTensor& a, const DenseTensor& b, index_t n) {
    const Shape ra(a.shape().begin(), a.shape().end() - n);
    const Shape rb(b.shape().begin(), b.shape().end() - n);
    const Shape shared(a.shape().end() - n, a.shape().end());
    const Shape out_shape = join(ra, rb);
    std::vector<double> vals(ttd::shape_size(out_shape), 0.0);
    for_each_index(ra.empty() ? Shape{1} : ra, [&](const std::vector<index_t>& i) {
        for_each_index(rb.empty() ? Shape{1} : rb, [&](const std::vector<index_t>& j) {
            double s = 0.0;
            for_each_index(shared, [&](const std::vector<index_t>& t) {
                std::vector<index_t> ia(i.begin(), i.begin() + ra.size());
                std::vector<index_t> ib(j.begin(), j.begin() + rb.size());
                ia.insert(ia.end(), t.begin(), t.end());
                ib.insert(ib.end(), t.begin(), t.end());
                s += get(a, ia) * get(b, ib);
            });
            std::vector<index_t> ic(i.begin(), i.begin() + ra.size());
            ic.insert(ic.end(), j.begin(), j.begin() + rb.size());
            if (ic.empty()) ic.push_back(0);
            vals[offset(out_shape, ic)] = s;
        });
    });
    return DenseTensor(out_shape, std::move(vals));
}

/// x(i_1..i_N) = Σ_{r} Π_n X_n(r_{n-1}, i_n, r_n), summed explicitly over all rank indices.
inline DenseTensor tt_sum(const ttd::TTTensor& x) {
    const Shape ext = x.extents();
    const auto ranks = x.ranks();
    Shape rshape(ranks.begin(), ranks.end());
    if (rshape.empty()) rshape.push_back(1);
    std::vector<double> vals(ttd::shape_size(ext), 0.0);
    for_each_index(ext, [&](const std::vector<index_t>& i) {
        double s = 0.0;
        for_each_index(rshape, [&](const std::vector<index_t>& r) {
            double p = 1.0;
            for (index_t n = 0; n < ext.size(); ++n) {
                const index_t r0 = n == 0 ? 0 : r[n - 1];
                const index_t r1 = n + 1 == ext.size() ? 0 : r[n];
                p *= x.core(n)(r0, i[n], r1);
            }
            s += p;
        });
        vals[offset(ext, i)] = s;
    });
    return DenseTensor(ext, std::move(vals));
}

/// Singular values from a one-sided Jacobi SVD, independent of the library backend.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

/// Largest principal angle between the column spaces of a and b (both column-orthonormal, same width).
/// Taken from the sine ‖(I - aaᵀ) b‖₂, which stays accurate for tiny angles.
inline double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd r = b - a * (a.transpose() * b);
    return std::asin(std::min(1.0, singular_values(r).maxCoeff()));
}

inline DenseTensor random_tensor(const Shape& shape, ttd::Rng& rng) {
    return DenseTensor(shape, rng.normals(ttd::shape_size(shape)));
}

/// Random integer entries in [-3, 3] (exact in floating point).
inline DenseTensor integer_tensor(const Shape& shape, ttd::Rng& rng) {
    std::vector<double> v(ttd::shape_size(shape));
    for (auto& x : v) x = static_cast<double>(rng.integer(-3, 3));
    return DenseTensor(shape, std::move(v));
}

inline ttd::TTTensor random_tt(const Shape& ext, const std::vector<index_t>& ranks, ttd::Rng& rng) {
    std::vector<DenseTensor> cores;
    for (index_t n = 0; n < ext.size(); ++n) {
        const index_t r0 = n == 0 ? 1 : ranks[n - 1];
        const index_t r1 = n + 1 == ext.size() ? 1 : ranks[n];
        cores.push_back(random_tensor({r0, ext[n], r1}, rng));
    }
    return ttd::TTTensor(std::move(cores));
}

inline Shape random_shape(ttd::Rng& rng, index_t min_order, index_t max_order, index_t max_extent) {
    Shape s(static_cast<index_t>(rng.integer(min_order, max_order)));
    for (auto& e : s) e = static_cast<index_t>(rng.integer(1, max_extent));
    return s;
}

inline double rel_diff(const DenseTensor& a, const DenseTensor& b) {
    double num = 0.0, den = 0.0;
    for (index_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (index_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace oracle
