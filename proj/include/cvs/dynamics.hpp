// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_DYNAMICS_HPP
#define CVS_DYNAMICS_HPP

#include "cvs/diagnostics.hpp"
#include "cvs/divcurl.hpp"

namespace cvs {

struct DynamicsConfig {
    EllipticConfig elliptic;
    DnoConfig dno;
    DivCurlConfig divcurl;
    Index nz = 17;
    Index nz_slab = 0;  // 0: 2*nz-1
    Real c0 = 0.1;
    Real cfl_safety = 0.5;

    DynamicsConfig() { dno.elliptic = elliptic; }
};

// Hyperbolic surface unknowns: height f and scaled normal velocity
// theta = u . N_f (zero mean).
struct InterfaceState {
    TorusScalar f;
    TorusScalar theta;
    Real c0 = 0.1;

    InterfaceState() = default;
    InterfaceState(TorusScalar f_, TorusScalar theta_, Real c0_);
    Surface surface() const { return Surface(f, c0); }
};

// Vorticity/current on the two flattened strips plus the lid tangential
// averages beta (velocity) and gamma (magnetic field).
struct BulkState {
    StripVector omega_plus, omega_minus;
    StripVector j_plus, j_minus;
    Eigen::Vector2d beta_plus = Eigen::Vector2d::Zero();
    Eigen::Vector2d beta_minus = Eigen::Vector2d::Zero();
    Eigen::Vector2d gamma_plus = Eigen::Vector2d::Zero();
    Eigen::Vector2d gamma_minus = Eigen::Vector2d::Zero();

    const StripVector& omega(Side s) const { return s == Side::plus ? omega_plus : omega_minus; }
    const StripVector& j(Side s) const { return s == Side::plus ? j_plus : j_minus; }
};

// Everything recovered from (f, theta, omega, j, beta, gamma): velocity and
// magnetic fields, their interface traces, and the quadratic pressures.
// Derived each stage, never time-stepped directly.
struct FluidSnapshot {
    StripVector u_plus, u_minus, h_plus, h_minus;
    StripScalar p_uu_plus, p_uu_minus, p_hh_plus, p_hh_minus;
    InterfaceTraces traces;
    Real recovery_residual = 0.0;   // worst div-curl residual over the four solves
    Real h_normal_residual = 0.0;   // max |h . N_f| at the interface
    Real u_trace_residual = 0.0;    // max |u . N_f - theta|

    const StripVector& u(Side s) const { return s == Side::plus ? u_plus : u_minus; }
    const StripVector& h(Side s) const { return s == Side::plus ? h_plus : h_minus; }
};

FluidSnapshot recover_fields(const InterfaceState& iface, const BulkState& bulk,
                             const SheetGeometry& sheet, const DynamicsConfig& cfg);

// d theta/dt assembled from the transport, curvature and DN-sandwiched
// nonlinear terms; mean removed (C3).
TorusScalar theta_rhs(const InterfaceState& iface, const FluidSnapshot& snap,
                      const SheetGeometry& sheet, const DynamicsConfig& cfg);

struct BulkRhs {
    StripVector d_omega_plus, d_omega_minus, d_j_plus, d_j_minus;
};

// Vorticity/current transport in flattened coordinates; the moving map
// contributes the -(dt rho / dz rho) dz transport correction.
BulkRhs vorticity_rhs(const InterfaceState& iface, const BulkState& bulk,
                      const FluidSnapshot& snap, const SheetGeometry& sheet);

struct BoundaryAverageRhs {
    Eigen::Vector2d beta_plus, beta_minus, gamma_plus, gamma_minus;
};

BoundaryAverageRhs boundary_average_rhs(const FluidSnapshot& snap);

Real cfl_bound(const FluidSnapshot& snap, const TorusGrid& grid, Real safety);

struct StepDiagnostics {
    Real dt = 0.0;
    Real cfl = 0.0;
    Real lid_drift_omega = 0.0;  // pre-correction drift of lid-mean omega3 per unit time
    Real lid_drift_j = 0.0;
    Real theta_mean = 0.0;
    Real recovery_residual = 0.0;
    Real h_normal_residual = 0.0;
    int invariant_warnings = 0;
};

// Classical RK4 advance of (f, theta, omega, j, beta, gamma) with field
// recovery at every stage. Post-step: theta mean projection, divergence-free
// projection of omega and j, lid-mean correction of their third components.
std::pair<InterfaceState, BulkState> step_rk4(const InterfaceState& iface,
                                              const BulkState& bulk, Real dt,
                                              const DynamicsConfig& cfg,
                                              StepDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Picard iteration map over frozen trajectories (validation mode).
// Bulk fields are stored on the reference strip of the trajectory's initial
// surface and moved through the harmonic coordinates.
struct TrajectorySample {
    Real t = 0.0;
    InterfaceState iface;
    BulkState bulk;  // omega/j stored on the reference strips
};
using Trajectory = std::vector<TrajectorySample>;

struct PicardReport {
    int clamped_characteristics = 0;
};

Trajectory picard_map(const Trajectory& input, const DynamicsConfig& cfg,
                      PicardReport* report = nullptr);

// sup-over-time trajectory distance used by the contraction probe.
Real trajectory_distance(const Trajectory& a, const Trajectory& b);

// ---------------------------------------------------------------------------
// Residuals of the original current-vortex sheet equations on a recovered
// run segment (three consecutive snapshots, centered differencing).
struct MomentumResiduals {
    Real w_plus = 0.0, w_minus = 0.0;    // velocity equation residual
    Real H_plus = 0.0, H_minus = 0.0;    // induction equation residual
    Real div_omega = 0.0, div_j = 0.0;
};

MomentumResiduals residual_momentum(const InterfaceState& if_prev, const FluidSnapshot& prev,
                                    const InterfaceState& if_mid, const FluidSnapshot& mid,
                                    const BulkState& bulk_mid, const InterfaceState& if_next,
                                    const FluidSnapshot& next, Real dt,
                                    const SheetGeometry& sheet_mid, const DynamicsConfig& cfg,
                                    bool ablate_quadratic_pressure = false);

}  // namespace cvs

#endif
