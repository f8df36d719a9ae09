// SPDX-License-Identifier: Apache-2.0

#include "cvs/grid.hpp"

#include <cmath>

namespace cvs {

TorusGrid::TorusGrid(Index nx_, Index ny_) : nx(nx_), ny(ny_) {
    if (nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0)
        throw DomainError("TorusGrid: nx, ny must be even and >= 4");
}

namespace {

// Trefethen-style CGL differentiation matrix on [-1,1], nodes t_k = cos(k pi/N).
Mat cheb_diff_standard(Index n) {
    const Index N = n - 1;
    Mat D = Mat::Zero(n, n);
    if (N == 0) return D;
    Vec t(n), c(n);
    for (Index k = 0; k < n; ++k) {
        t(k) = std::cos(M_PI * Real(k) / Real(N));
        c(k) = (k == 0 || k == N) ? 2.0 : 1.0;
        if (k % 2 == 1) c(k) = -c(k);
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j) D(i, j) = (c(i) / c(j)) / (t(i) - t(j));
    for (Index i = 0; i < n; ++i) D(i, i) = -D.row(i).sum() + D(i, i);
    return D;
}

// Clenshaw-Curtis weights on [-1,1] for the same node ordering.
Vec clenshaw_curtis_standard(Index n) {
    const Index N = n - 1;
    Vec w = Vec::Zero(n);
    if (N == 0) {
        w(0) = 2.0;
        return w;
    }
    for (Index k = 0; k <= N; ++k) {
        Real s = 1.0;
        for (Index j = 1; j <= N / 2; ++j) {
            Real bj = (2 * j == N) ? 1.0 : 2.0;
            s -= bj * std::cos(2.0 * j * M_PI * Real(k) / Real(N)) / Real(4 * j * j - 1);
        }
        Real ck = (k == 0 || k == N) ? 1.0 : 2.0;
        w(k) = s * ck / Real(N);
    }
    return w;
}

}  // namespace

ChebGrid::ChebGrid(Index n_, Real a_, Real b_) : n(n_), a(a_), b(b_) {
    if (n < 4) throw DomainError("ChebGrid: need at least 4 collocation points");
    const Index N = n - 1;
    z.resize(n);
    for (Index k = 0; k < n; ++k) {
        Real t = std::cos(M_PI * Real(k) / Real(N));
        z(k) = a + (b - a) * 0.5 * (t + 1.0);
    }
    const Real scale = 2.0 / (b - a);
    D = cheb_diff_standard(n) * scale;
    D2 = D * D;
    w = clenshaw_curtis_standard(n) * ((b - a) * 0.5);

    // Nodal antiderivative through Chebyshev coefficient space.
    Mat V(n, n);  // coeffs -> values
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            V(k, j) = std::cos(M_PI * Real(j) * Real(k) / Real(N));
    Mat C(n, n);  // values -> coeffs (DCT-I with end-point halving)
    for (Index j = 0; j < n; ++j) {
        Real cj = (j == 0 || j == N) ? 2.0 : 1.0;
        for (Index k = 0; k < n; ++k) {
            Real ck = (k == 0 || k == N) ? 2.0 : 1.0;
            C(j, k) = 2.0 / (cj * ck * Real(N)) * std::cos(M_PI * Real(j) * Real(k) / Real(N));
        }
    }
    Mat B = Mat::Zero(n, n);  // coefficient-space antiderivative, b0 = 0
    for (Index j = 1; j < n; ++j) {
        if (j - 1 >= 0) B(j, j - 1) += 1.0 / Real(2 * j);
        if (j + 1 < n) B(j, j + 1) -= 1.0 / Real(2 * j);
    }
    B(1, 0) = 1.0;  // antiderivative of T0 is T1
    antideriv = V * B * C * ((b - a) * 0.5);
    // shift so the antiderivative vanishes at the reference node z(n-1)
    Vec bottom_row = antideriv.row(n - 1);
    antideriv.rowwise() -= bottom_row.transpose();
}

Vec ChebGrid::eval_weights(Real zq) const {
    Vec wt = Vec::Zero(n);
    const Index N = n - 1;
    // Barycentric weights for CGL nodes: (-1)^k, halved at the ends.
    Real num = 0.0;
    for (Index k = 0; k < n; ++k) {
        Real d = zq - z(k);
        if (std::abs(d) < 1e-14) {
            wt.setZero();
            wt(k) = 1.0;
            return wt;
        }
        Real bk = (k % 2 == 0) ? 1.0 : -1.0;
        if (k == 0 || k == N) bk *= 0.5;
        wt(k) = bk / d;
        num += wt(k);
    }
    wt /= num;
    return wt;
}

Real ChebGrid::interpolate(const Eigen::Ref<const Vec>& values, Real zq) const {
    return eval_weights(zq).dot(values);
}

}  // namespace cvs
