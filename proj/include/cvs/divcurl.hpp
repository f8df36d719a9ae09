// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_DIVCURL_HPP
#define CVS_DIVCURL_HPP

#include "cvs/dno.hpp"

namespace cvs {

// Geometry bundle for one interface position: both side flattenings, the
// physical slab grid used by the curl solve, and cached interpolation
// weights between the strips and the slab. Built once per surface and
// shared by every recovery and DN application on it.
struct SheetGeometry {
    Surface surface;
    SideGeometry plus, minus;
    std::shared_ptr<const ChebGrid> slab;  // [-1,1]
    EllipticConfig ecfg;

    // weights[target_level] is (nx*ny, n_source); rows of points belonging
    // to the other region are zero and are flagged in mask.
    struct Sampler {
        std::vector<Eigen::ArrayXXd> weights;
        std::vector<Eigen::Array<bool, Eigen::Dynamic, 1>> mask;
    };
    Sampler plus_to_slab, minus_to_slab;   // side strip  -> slab levels
    Sampler slab_to_plus, slab_to_minus;   // slab        -> side strip levels

    SheetGeometry(const Surface& surface, Index nz, EllipticConfig ecfg = {},
                  Index nz_slab = 0);

    const SideGeometry& geom(Side s) const { return s == Side::plus ? plus : minus; }
    const TorusGrid& grid() const { return surface.grid(); }
};

// Sample a slab field onto one side's strip grid.
StripScalar sample_slab_to_strip(const SheetGeometry& sg, Side side, const StripScalar& slab);
StripVector sample_slab_to_strip(const SheetGeometry& sg, Side side, const StripVector& slab);

// Glue (own side field, other side field) into a slab field; each slab point
// takes the value of the region it lies in.
StripScalar glue_to_slab(const SheetGeometry& sg, const StripScalar& on_plus,
                         const StripScalar& on_minus);
StripVector glue_to_slab(const SheetGeometry& sg, const StripVector& on_plus,
                         const StripVector& on_minus);

// Data of the div-curl recovery problem on one side.
struct DivCurlData {
    StripVector omega;       // curl target, physical components
    StripScalar g;           // divergence target
    TorusScalar theta_bc;    // N_f . u on the interface
    Eigen::Vector2d lid_means = Eigen::Vector2d::Zero();  // tangential averages on the lid
};

struct RecoveredField {
    StripVector u;
    Real curl_residual = 0.0;
    Real div_residual = 0.0;
    Real trace_residual = 0.0;
    Real lid_e3_residual = 0.0;
    Real lid_mean_defect = 0.0;
};

struct DivCurlConfig {
    Real compat_tol = 1e-6;  // relative defect that trips C1/C2/Neumann rejection
    bool check_compat = true;
};

// Explicit solve of curl v = omega_bar, div v = 0, v3 = 0 on both lids of the
// flat slab T^2 x [-1,1]; per-mode two-point ODE solve, zero mode by direct
// z-integration with zero-mean gauge. omega_bar must be div-free with zero
// lid flux of the third component.
StripVector solve_curl_slab(const StripVector& omega_bar,
                            const DivCurlConfig& cfg = {});

// Full recovery pipeline on one side: divergence-free extension across the
// interface by the Neumann-harmonic gradient patch, slab curl solve,
// harmonic-gradient correction of the interface condition, Neumann potential
// for the (g, theta) data, and the constant tangential shift.
RecoveredField divcurl_solve(const SheetGeometry& sg, Side side, const DivCurlData& data,
                             const DivCurlConfig& cfg = {});

}  // namespace cvs

#endif
