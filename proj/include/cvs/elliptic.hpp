// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_ELLIPTIC_HPP
#define CVS_ELLIPTIC_HPP

#include "cvs/geometry.hpp"

namespace cvs {

// Boundary data for the flattened strip problems. Top is the interface row
// (z = 0); Neumann there prescribes N_f . grad Phi. Bottom is the rigid lid
// (z = -1); Neumann there prescribes the physical d3 Phi.
struct BoundaryCondition {
    enum class Kind { dirichlet, neumann };
    Kind top_kind = Kind::dirichlet;
    Kind bottom_kind = Kind::neumann;
    TorusScalar top;
    TorusScalar bottom;

    static BoundaryCondition dirichlet_top(const TorusScalar& g, const TorusScalar& lid);
    static BoundaryCondition neumann_top(const TorusScalar& g, const TorusScalar& lid);
    static BoundaryCondition dirichlet_both(const TorusScalar& g, const TorusScalar& bot);

    bool pure_neumann() const {
        return top_kind == Kind::neumann && bottom_kind == Kind::neumann;
    }
};

struct EllipticSolution {
    StripScalar psi;
    Real residual_norm = 0.0;  // relative to the rhs vector norm
    int iterations = 0;
    Real compat_defect = 0.0;  // bordered multiplier of pure-Neumann solves
};

struct EllipticConfig {
    Real tol = 1e-10;
    int max_iter = 500;
    int restart = 40;
};

// Geometry bundle reused across solves on one side of one surface.
struct SideGeometry {
    Surface surface;
    FlatteningMap map;
    EllipticCoefficients coeffs;

    SideGeometry() = default;
    SideGeometry(const Surface& s, Side side, Index nz);
    Side side() const { return map.side; }
};

// Solve  dz^2 Psi + alpha Lap Psi + beta . grad dz Psi - gamma dz Psi = F
// with the given boundary rows. F is the flattened right side (callers pass
// alpha * (rhs o map) to realize a physical Poisson problem). The flat case
// is a direct per-mode two-point solve; otherwise GMRES preconditioned by it.
// Pure-Neumann problems are solved in bordered form with the mean pinned.
EllipticSolution solve_flattened_laplace(const SideGeometry& geom, const StripScalar& rhs,
                                         const BoundaryCondition& bc,
                                         const EllipticConfig& cfg = {});

// Harmonic extension of interface data psi with zero lid Neumann data.
StripScalar harmonic_extension(const SideGeometry& geom, const TorusScalar& psi,
                               const EllipticConfig& cfg = {});

// p_{u1,u2}: Delta p = -tr(grad u1 grad u2), p = 0 on the interface,
// d3 p = 0 on the lid. Gradients and the trace product are physical.
StripScalar quadratic_pressure(const SideGeometry& geom, const StripVector& u1,
                               const StripVector& u2, const EllipticConfig& cfg = {});

// P^div w = w - grad phi with Delta phi = div w, phi = 0 at the interface,
// d3 phi = 0 at the lid. Leaves the lid e3-trace unchanged.
StripVector div_free_projection(const SideGeometry& geom, const StripVector& w,
                                const EllipticConfig& cfg = {});

// Residual of the flattened operator applied to psi against (rhs, bc);
// used by tests and the recovery diagnostics.
Real flattened_residual(const SideGeometry& geom, const StripScalar& psi,
                        const StripScalar& rhs, const BoundaryCondition& bc);

}  // namespace cvs

#endif
