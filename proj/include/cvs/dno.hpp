// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_DNO_HPP
#define CVS_DNO_HPP

#include "cvs/elliptic.hpp"

namespace cvs {

struct DnoConfig {
    EllipticConfig elliptic;
    Real inverse_tol = 1e-9;
    int inverse_max_iter = 200;
};

// Dirichlet-Neumann operators N_f^{+-} g = -+ N_f . grad(H_f^{+-} g)|_interface
// and their sum. Operators are immutable once built; applications are pure.
class DnoOperator {
   public:
    DnoOperator(const Surface& surface, Index nz, DnoConfig cfg = {});

    const Surface& surface() const { return surface_; }
    const SideGeometry& geom(Side side) const {
        return side == Side::plus ? plus_ : minus_;
    }
    const DnoConfig& config() const { return cfg_; }

    // N^side psi. Zero-mean output up to solver tolerance (flux balance).
    TorusScalar apply(Side side, const TorusScalar& psi) const;
    // Ntilde = N^+ + N^-.
    TorusScalar apply_sum(const TorusScalar& psi) const;
    // N^+ psi - N^- psi (zeroth-order remainder difference).
    TorusScalar difference(const TorusScalar& psi) const;

    // Ntilde^{-1} on zero-mean data (input mean removed per convention).
    // Conjugate-direction iteration preconditioned by (2|k| tanh|k|)^{-1}.
    TorusScalar inverse_sum(const TorusScalar& rhs) const;

   private:
    Surface surface_;
    SideGeometry plus_, minus_;
    DnoConfig cfg_;
};

// lambda(x,xi) = sqrt((1+|grad f|^2)|xi|^2 - (grad f . xi)^2) at grid node (i,j).
Real principal_symbol(const Surface& surface, Index i, Index j, Real xi1, Real xi2);

// Geometry-sharing entry points (used by the dynamics driver, which owns the
// flattenings for the current surface).
TorusScalar dn_apply_geom(const SideGeometry& geo, const TorusScalar& psi,
                          const EllipticConfig& cfg);
TorusScalar dn_inverse_geom(const SideGeometry& plus, const SideGeometry& minus,
                            const TorusScalar& rhs, const DnoConfig& cfg);

}  // namespace cvs

#endif
