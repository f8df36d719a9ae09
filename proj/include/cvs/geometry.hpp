// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_GEOMETRY_HPP
#define CVS_GEOMETRY_HPP

#include <array>

#include "cvs/fields.hpp"

namespace cvs {

// Graph interface x3 = f(x') with separation margin c0 from the lids.
class Surface {
   public:
    Surface() = default;
    Surface(TorusScalar f, Real c0);

    const TorusScalar& f() const { return f_; }
    Real c0() const { return c0_; }
    Real mean_f() const { return mean_f_; }
    const TorusGrid& grid() const { return f_.grid(); }

   private:
    TorusScalar f_;
    Real c0_ = 0.1;
    Real mean_f_ = 0.0;
};

// Non-unit interface normal N_f = (-d1 f, -d2 f, 1).
std::array<TorusScalar, 3> interface_normal(const Surface& surface);

// Regularized flattening of one fluid region onto the reference strip
// T^2 x [-1,0] with z = 0 at the interface:
//   minus side: rho(x,z) =  z + (1+z) e^{dz|D|} f(x)   (dz rho >=  c0/2)
//   plus  side: rho(x,z) = -z + (1+z) e^{dz|D|} f(x)   (dz rho <= -c0/2)
// The smoothing multiplier is truncated at the dealiasing cutoff, so f is
// reproduced at z = 0 exactly for band-limited f.
class FlatteningMap {
   public:
    Real delta = 1.0;
    Side side = Side::minus;
    Real c0 = 0.1;

    StripScalar rho;
    StripScalar dz_rho;       // J
    StripScalar d2z_rho;
    StripScalar grad_rho_1, grad_rho_2;
    StripScalar lap_rho;
    StripScalar grad_dz_rho_1, grad_dz_rho_2;
    StripScalar dz_rho_of_dtf;  // placeholder grids; see time_derivative()

    const TorusGrid& grid() const { return rho.grid(); }
    const ChebGrid& zgrid() const { return rho.zgrid(); }
    std::shared_ptr<const ChebGrid> zgrid_ptr() const { return rho.zgrid_ptr(); }

    // Map motion: dt rho = (1+z) e^{dz|D|} (dt f), given dt f = theta.
    StripScalar time_derivative(const TorusScalar& theta) const;

    // Invert rho(x_ij, .) = y for z in [-1,0] (monotone in z by the bound).
    Real z_of_height(Index i, Index j, Real y) const;

    // Physical height of the interface column (i,j): rho at z = 0.
    Real height_top(Index i, Index j) const { return rho.level(rho.zgrid().top())(i, j); }
};

FlatteningMap build_flattening(const Surface& surface, Side side, Index nz,
                               Real delta0 = 1.0);

// Coefficients of the flattened Laplacian
//   dz^2 Psi + alpha Lap Psi + beta . grad dz Psi - gamma dz Psi = alpha * (rhs o map)
struct EllipticCoefficients {
    StripScalar alpha;
    StripScalar beta1, beta2;
    StripScalar gamma;
    Side side = Side::minus;
    bool flat = false;  // identity map shortcut: (alpha,beta,gamma) = (1,0,0)
};

EllipticCoefficients flatten_coefficients(const FlatteningMap& map);

// Pull a physical-space function evaluated as G(x, rho(x,z)) onto the strip.
StripScalar pullback(const FlatteningMap& map,
                     const std::function<Real(Real, Real, Real)>& G);

// Physical gradient of a flattened scalar via the chain rule:
//   grad_x Phi = grad Psi - (dz Psi / J) grad rho,   d3 Phi = dz Psi / J.
std::array<StripScalar, 3> physical_gradient(const FlatteningMap& map,
                                             const StripScalar& psi);
StripScalar physical_divergence(const FlatteningMap& map, const StripVector& v);
StripVector physical_curl(const FlatteningMap& map, const StripVector& v);

// Trace of N_f . grad Phi at the interface (z = 0 row):
//   -grad f . grad Psi + (1+|grad f|^2)/J * dz Psi.
TorusScalar normal_gradient_trace(const FlatteningMap& map, const StripScalar& psi);

// Integral over the physical region: int G dx = int G |J| dz dx'.
Real volume_integral(const FlatteningMap& map, const StripScalar& g);

// Harmonic coordinates Phi_f from the reference region over f_star to the
// region over f: components (y1, y2, psi) with psi harmonic, psi = f at the
// interface and +-1 at the lid. Implemented in terms of the elliptic solver.
StripVector harmonic_coordinates(const Surface& surface, Side side, const Surface& f_star,
                                 Index nz, Real tol = 1e-10);

}  // namespace cvs

#endif
