// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_GRID_HPP
#define CVS_GRID_HPP

#include "cvs/common.hpp"

namespace cvs {

// Uniform grid on [0,2pi)^2 with the integer frequency lattice.
// Fourier convention used project-wide: the forward transform carries
// 1/(nx*ny), so g(x) = sum_k ghat(k) e^{i k.x} with ghat stored on the
// wrapped lattice k1(a) = a for a <= nx/2, a - nx otherwise.
struct TorusGrid {
    Index nx = 0, ny = 0;

    TorusGrid() = default;
    TorusGrid(Index nx_, Index ny_);

    Real x1(Index i) const { return two_pi * Real(i) / Real(nx); }
    Real x2(Index j) const { return two_pi * Real(j) / Real(ny); }
    int k1(Index a) const { return a <= nx / 2 ? int(a) : int(a) - int(nx); }
    int k2(Index b) const { return b <= ny / 2 ? int(b) : int(b) - int(ny); }

    // Two-thirds rule: true for modes kept after dealiasing.
    bool keep(Index a, Index b) const {
        return std::abs(k1(a)) <= nx / 3 && std::abs(k2(b)) <= ny / 3;
    }

    bool operator==(const TorusGrid& o) const { return nx == o.nx && ny == o.ny; }

    Real cell_area() const { return two_pi * two_pi / Real(nx * ny); }
};

// Chebyshev-Gauss-Lobatto collocation on [a,b], ordered from z0 = b down
// to z_{n-1} = a. D is the spectral differentiation matrix, w the
// Clenshaw-Curtis quadrature weights for integral over [a,b].
struct ChebGrid {
    Index n = 0;
    Real a = -1.0, b = 0.0;
    Vec z;
    Mat D;
    Mat D2;
    Vec w;
    Mat antideriv;  // nodal antiderivative, zero at the reference node z(n-1)

    ChebGrid() = default;
    ChebGrid(Index n_, Real a_, Real b_);

    Index top() const { return 0; }         // z = b
    Index bottom() const { return n - 1; }  // z = a

    // Barycentric interpolation of a nodal profile at arbitrary zq in [a,b].
    Real interpolate(const Eigen::Ref<const Vec>& values, Real zq) const;

    // Barycentric weights for evaluation at zq: value = dot(weights, nodal).
    Vec eval_weights(Real zq) const;
};

}  // namespace cvs

#endif
