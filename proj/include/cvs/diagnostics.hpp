// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_DIAGNOSTICS_HPP
#define CVS_DIAGNOSTICS_HPP

#include <array>

#include "cvs/geometry.hpp"

namespace cvs {

// Interface traces of the velocity and magnetic fields (first two components
// are the coordinate components entering the tangential quadratic forms).
struct InterfaceTraces {
    std::array<TorusScalar, 3> u_plus, u_minus, h_plus, h_minus;
};

// Stability margin Lambda(x) = smallest eigenvalue of
//   M(x) = H+ H+^T + H- H-^T - 2 v v^T   (tangential coordinate components,
// v = half the velocity jump), minimized over the grid. Closed-form 2x2
// eigenvalue, no direction sampling.
struct StabilityReport {
    Real lambda_min = 0.0;
    bool syrovatskii_1 = false;   // |[u]|^2 <= 2(|h+|^2 + |h-|^2)
    bool syrovatskii_2 = false;   // |[u]xh+|^2 + |[u]xh-|^2 <= 2|h+xh-|^2
    bool syrovatskii_strict = false;  // strict version of the second
    Index worst_i = 0, worst_j = 0;
    Eigen::Vector2d worst_direction = Eigen::Vector2d::Zero();
};

StabilityReport lambda_stability(const InterfaceTraces& traces);

// Planar Syrovatskii inequalities for constant states, exact cross products.
struct SyrovatskiiFlags {
    bool cond1 = false, cond2 = false, strict = false;
};
SyrovatskiiFlags syrovatskii_check(const Eigen::Vector3d& u_plus,
                                   const Eigen::Vector3d& u_minus,
                                   const Eigen::Vector3d& h_plus,
                                   const Eigen::Vector3d& h_minus);

// sigma^2(xi) = (v.xi)^2 - ((h+.xi)^2 + (h-.xi)^2)/2 for planar states;
// unstable iff sigma^2 > 0, growth rate sqrt(sigma^2), stable modes
// oscillate at sqrt(-sigma^2) around the Doppler shift w.xi.
struct DispersionEntry {
    Eigen::Vector2d xi;
    Real sigma2 = 0.0;
    Real growth_rate = 0.0;  // sqrt(max(0, sigma2))
    Real frequency = 0.0;    // sqrt(max(0, -sigma2))
    Real doppler = 0.0;      // w . xi
    enum class Class { stable, neutral, unstable } classification = Class::neutral;
};

struct DispersionTable {
    std::vector<DispersionEntry> entries;
};

DispersionTable dispersion(const Eigen::Vector2d& v, const Eigen::Vector2d& h_plus,
                           const Eigen::Vector2d& h_minus,
                           const std::vector<Eigen::Vector2d>& modes,
                           const Eigen::Vector2d& w = Eigen::Vector2d::Zero());

// Interface energy functional
//   E_s = ||(dt + w.d) <D>^s f||^2 - ||v.d <D>^s f||^2
//         + (||h+.d <D>^s f||^2 + ||h-.d <D>^s f||^2)/2
// with dt f = theta. The report carries the four terms and the equivalence
// ratio against ||theta||_{H^{s-1/2}}^2 + ||f||_{H^{s+1/2}}^2.
struct EnergyReport {
    Real value = 0.0;
    Real term_transport = 0.0;
    Real term_jump = 0.0;
    Real term_hplus = 0.0;
    Real term_hminus = 0.0;
    Real equivalence_ratio = 0.0;
};

EnergyReport energy_es(const TorusScalar& f, const TorusScalar& theta,
                       const InterfaceTraces& traces, SobolevIndex s);

// Least-squares slope of log(amplitude) over an auto-selected window where
// the fit residual stays below 2%. Throws DomainError when no such window
// exists (for example for pure oscillation).
Real growth_rate_fit(const std::vector<Real>& times, const std::vector<Real>& amplitudes);

}  // namespace cvs

#endif
