// SPDX-License-Identifier: Apache-2.0

#include "cvs/dno.hpp"

#include <cmath>
#include <sstream>

namespace cvs {

DnoOperator::DnoOperator(const Surface& surface, Index nz, DnoConfig cfg)
    : surface_(surface),
      plus_(surface, Side::plus, nz),
      minus_(surface, Side::minus, nz),
      cfg_(cfg) {}

TorusScalar dn_apply_geom(const SideGeometry& geo, const TorusScalar& psi,
                          const EllipticConfig& cfg) {
    StripScalar ext = harmonic_extension(geo, psi, cfg);
    TorusScalar trace = normal_gradient_trace(geo.map, ext);
    return geo.side() == Side::minus ? trace : -1.0 * trace;
}

TorusScalar DnoOperator::apply(Side side, const TorusScalar& psi) const {
    return dn_apply_geom(geom(side), psi, cfg_.elliptic);
}

TorusScalar DnoOperator::apply_sum(const TorusScalar& psi) const {
    return apply(Side::plus, psi) + apply(Side::minus, psi);
}

TorusScalar DnoOperator::difference(const TorusScalar& psi) const {
    return apply(Side::plus, psi) - apply(Side::minus, psi);
}

namespace {

// Flat-surface inverse symbol of Ntilde: (2|k| tanh|k|)^{-1}, zero mode -> 0.
TorusScalar flat_inverse(const TorusScalar& r) {
    return fourier_multiplier(r, [](Real k1, Real k2) -> Complex {
        Real kk = std::sqrt(k1 * k1 + k2 * k2);
        if (kk == 0.0) return Complex(0, 0);
        return Complex(1.0 / (2.0 * kk * std::tanh(kk)), 0);
    });
}

Real dotL2(const TorusScalar& a, const TorusScalar& b) {
    return a.grid().cell_area() * (a.values() * b.values()).sum();
}

}  // namespace

TorusScalar dn_inverse_geom(const SideGeometry& plus, const SideGeometry& minus,
                            const TorusScalar& rhs, const DnoConfig& cfg) {
    TorusScalar b = mean_project(rhs);
    const Real bnorm = std::sqrt(dotL2(b, b));
    TorusScalar x = TorusScalar::zero(b.grid());
    if (bnorm == 0.0) return x;

    auto apply_sum = [&](const TorusScalar& p) {
        return mean_project(dn_apply_geom(plus, p, cfg.elliptic) +
                            dn_apply_geom(minus, p, cfg.elliptic));
    };

    std::vector<Real> history;
    TorusScalar r = b;
    TorusScalar z = flat_inverse(r);
    TorusScalar p = z;
    Real rz = dotL2(r, z);
    for (int it = 0; it < cfg.inverse_max_iter; ++it) {
        TorusScalar q = apply_sum(p);
        Real pq = dotL2(p, q);
        if (pq <= 0.0) {
            std::ostringstream os;
            os << "dn_inverse: lost positivity at iteration " << it << " (<p,Np> = " << pq
               << ")";
            throw ConvergenceError(history, os.str());
        }
        Real alpha = rz / pq;
        x += alpha * p;
        r -= alpha * q;
        Real rn = std::sqrt(dotL2(r, r)) / bnorm;
        history.push_back(rn);
        if (rn <= cfg.inverse_tol) return mean_project(x);
        z = flat_inverse(r);
        Real rz_new = dotL2(r, z);
        Real beta = rz_new / rz;
        rz = rz_new;
        p = z + beta * p;
    }
    std::ostringstream os;
    os << "dn_inverse: no convergence after " << cfg.inverse_max_iter
       << " iterations, residual " << history.back();
    throw ConvergenceError(history, os.str());
}

TorusScalar DnoOperator::inverse_sum(const TorusScalar& rhs) const {
    return dn_inverse_geom(plus_, minus_, rhs, cfg_);
}

Real principal_symbol(const Surface& surface, Index i, Index j, Real xi1, Real xi2) {
    if (xi1 == 0.0 && xi2 == 0.0)
        throw DomainError("principal_symbol: xi must be nonzero");
    TorusScalar f1 = deriv(surface.f(), 1), f2 = deriv(surface.f(), 2);
    Real g1 = f1.values()(i, j), g2 = f2.values()(i, j);
    Real grad2 = g1 * g1 + g2 * g2;
    Real xi2n = xi1 * xi1 + xi2 * xi2;
    Real dot = g1 * xi1 + g2 * xi2;
    return std::sqrt((1.0 + grad2) * xi2n - dot * dot);
}

}  // namespace cvs
