// SPDX-License-Identifier: Apache-2.0

#include "cvs/geometry.hpp"

#include <cmath>
#include <sstream>

namespace cvs {

Surface::Surface(TorusScalar f, Real c0) : f_(std::move(f)), c0_(c0) {
    if (c0 <= 0.0 || c0 >= 1.0) throw DomainError("Surface: c0 must lie in (0,1)");
    const Real bound = 1.0 - c0;
    Real lo = f_.values().minCoeff(), hi = f_.values().maxCoeff();
    if (lo < -bound - 1e-13 || hi > bound + 1e-13) {
        std::ostringstream os;
        os << "Surface: f range [" << lo << ", " << hi << "] violates |f| <= " << bound;
        throw DomainError(os.str());
    }
    mean_f_ = f_.mean();
}

std::array<TorusScalar, 3> interface_normal(const Surface& surface) {
    return {-1.0 * deriv(surface.f(), 1), -1.0 * deriv(surface.f(), 2),
            TorusScalar::constant(surface.grid(), 1.0)};
}

namespace {

// Assemble rho and its analytic derivatives for one delta. f's modes beyond
// the dealias cutoff are dropped (smoothing truncated with them).
FlatteningMap assemble_map(const Surface& surface, Side side, Index nz, Real delta) {
    const TorusGrid& g = surface.grid();
    auto zg = std::make_shared<const ChebGrid>(nz, -1.0, 0.0);
    const Real s = (side == Side::minus) ? 1.0 : -1.0;

    FlatteningMap m;
    m.delta = delta;
    m.side = side;
    m.c0 = surface.c0();
    StripScalar zero = StripScalar::zero(g, zg, side);
    m.rho = zero;
    m.dz_rho = zero;
    m.d2z_rho = zero;
    m.grad_rho_1 = zero;
    m.grad_rho_2 = zero;
    m.lap_rho = zero;
    m.grad_dz_rho_1 = zero;
    m.grad_dz_rho_2 = zero;

    const CArray2& fh = surface.f().spectral();
    for (Index k = 0; k < nz; ++k) {
        const Real z = zg->z(k);
        CArray2 rho_c = CArray2::Zero(g.nx, g.ny);
        CArray2 dz_c = rho_c, d2z_c = rho_c, g1_c = rho_c, g2_c = rho_c, lap_c = rho_c,
                gd1_c = rho_c, gd2_c = rho_c;
        for (Index a = 0; a < g.nx; ++a)
            for (Index b = 0; b < g.ny; ++b) {
                if (!g.keep(a, b)) continue;
                const Real k1 = g.k1(a), k2 = g.k2(b);
                const Real kk = std::sqrt(k1 * k1 + k2 * k2);
                const Real S = std::exp(delta * z * kk);
                const Complex F = fh(a, b);
                rho_c(a, b) = (1.0 + z) * S * F;
                dz_c(a, b) = S * (1.0 + (1.0 + z) * delta * kk) * F;
                d2z_c(a, b) = S * (2.0 * delta * kk + (1.0 + z) * delta * delta * kk * kk) * F;
                g1_c(a, b) = Complex(0, k1) * (1.0 + z) * S * F;
                g2_c(a, b) = Complex(0, k2) * (1.0 + z) * S * F;
                lap_c(a, b) = -(k1 * k1 + k2 * k2) * (1.0 + z) * S * F;
                gd1_c(a, b) = Complex(0, k1) * S * (1.0 + (1.0 + z) * delta * kk) * F;
                gd2_c(a, b) = Complex(0, k2) * S * (1.0 + (1.0 + z) * delta * kk) * F;
            }
        m.rho.set_level(k, fft2_inverse_real(g, rho_c) + s * z);
        m.dz_rho.set_level(k, fft2_inverse_real(g, dz_c) + s);
        m.d2z_rho.set_level(k, fft2_inverse_real(g, d2z_c));
        m.grad_rho_1.set_level(k, fft2_inverse_real(g, g1_c));
        m.grad_rho_2.set_level(k, fft2_inverse_real(g, g2_c));
        m.lap_rho.set_level(k, fft2_inverse_real(g, lap_c));
        m.grad_dz_rho_1.set_level(k, fft2_inverse_real(g, gd1_c));
        m.grad_dz_rho_2.set_level(k, fft2_inverse_real(g, gd2_c));
    }
    return m;
}

}  // namespace

FlatteningMap build_flattening(const Surface& surface, Side side, Index nz, Real delta0) {
    const Real s = (side == Side::minus) ? 1.0 : -1.0;
    const Real bound = surface.c0() / 2.0;
    Real delta = delta0;
    for (int halving = 0; halving <= 40; ++halving) {
        FlatteningMap m = assemble_map(surface, side, nz, delta);
        Real min_signed = (s * m.dz_rho.data()).minCoeff();
        if (min_signed >= bound) return m;
        delta *= 0.5;
    }
    FlatteningMap m = assemble_map(surface, side, nz, delta);
    Real min_signed = (s * m.dz_rho.data()).minCoeff();
    std::ostringstream os;
    os << "build_flattening: surface too rough, min " << side_name(side)
       << "-signed dz rho = " << min_signed << " < " << bound << " after 40 halvings";
    throw DomainError(os.str());
}

StripScalar FlatteningMap::time_derivative(const TorusScalar& theta) const {
    const TorusGrid& g = grid();
    StripScalar out = StripScalar::zero(g, zgrid_ptr(), side);
    const CArray2& th = theta.spectral();
    for (Index k = 0; k < zgrid().n; ++k) {
        const Real z = zgrid().z(k);
        CArray2 c = CArray2::Zero(g.nx, g.ny);
        for (Index a = 0; a < g.nx; ++a)
            for (Index b = 0; b < g.ny; ++b) {
                if (!g.keep(a, b)) continue;
                const Real k1 = g.k1(a), k2 = g.k2(b);
                const Real kk = std::sqrt(k1 * k1 + k2 * k2);
                c(a, b) = (1.0 + z) * std::exp(delta * z * kk) * th(a, b);
            }
        out.set_level(k, fft2_inverse_real(g, c));
    }
    return out;
}

Real FlatteningMap::z_of_height(Index i, Index j, Real y) const {
    const ChebGrid& zg = zgrid();
    const Index row = i + grid().nx * j;
    Vec prof = rho.data().row(row).transpose();
    // rho is monotone in z with |drho/dz| >= c0/2; Newton with bisection guard.
    Real lo = -1.0, hi = 0.0;
    Real flo = prof(zg.bottom()) - y, fhi = prof(zg.top()) - y;
    if (side == Side::plus) {
        std::swap(lo, hi);
        std::swap(flo, fhi);
    }
    // Values at or beyond the ends clamp to the ends.
    if (flo * fhi > 0.0) return std::abs(flo) < std::abs(fhi) ? (side == Side::minus ? -1.0 : 0.0)
                                                              : (side == Side::minus ? 0.0 : -1.0);
    Real z = 0.5 * (lo + hi);
    Vec dprof = dz_rho.data().row(row).transpose();
    for (int it = 0; it < 60; ++it) {
        Real val = zg.interpolate(prof, z) - y;
        if (std::abs(val) < 1e-13) return z;
        if (val * flo < 0.0)
            hi = z;
        else {
            lo = z;
            flo = val;
        }
        Real dz = zg.interpolate(dprof, z);
        Real step = (std::abs(dz) > 1e-8) ? z - val / dz : 0.5 * (lo + hi);
        // fall back to bisection when Newton leaves the bracket
        Real a = std::min(lo, hi), b = std::max(lo, hi);
        z = (step > a && step < b) ? step : 0.5 * (lo + hi);
    }
    return z;
}

EllipticCoefficients flatten_coefficients(const FlatteningMap& map) {
    EllipticCoefficients c;
    c.side = map.side;
    const auto& J = map.dz_rho.data();
    const auto& g1 = map.grad_rho_1.data();
    const auto& g2 = map.grad_rho_2.data();
    Eigen::ArrayXXd denom = 1.0 + g1.square() + g2.square();

    StripScalar alpha = map.rho, beta1 = map.rho, beta2 = map.rho, gamma = map.rho;
    alpha.data() = J.square() / denom;
    beta1.data() = -2.0 * J * g1 / denom;
    beta2.data() = -2.0 * J * g2 / denom;
    gamma.data() = (map.d2z_rho.data() + alpha.data() * map.lap_rho.data() +
                    beta1.data() * map.grad_dz_rho_1.data() +
                    beta2.data() * map.grad_dz_rho_2.data()) /
                   J;
    c.alpha = std::move(alpha);
    c.beta1 = std::move(beta1);
    c.beta2 = std::move(beta2);
    c.gamma = std::move(gamma);
    c.flat = (map.grad_rho_1.max_abs() == 0.0 && map.grad_rho_2.max_abs() == 0.0 &&
              map.d2z_rho.max_abs() == 0.0);
    return c;
}

StripScalar pullback(const FlatteningMap& map,
                     const std::function<Real(Real, Real, Real)>& G) {
    const TorusGrid& g = map.grid();
    StripScalar out = StripScalar::zero(g, map.zgrid_ptr(), map.side);
    for (Index k = 0; k < map.zgrid().n; ++k) {
        Array2 lvl(g.nx, g.ny);
        auto rho_lvl = map.rho.level(k);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j) lvl(i, j) = G(g.x1(i), g.x2(j), rho_lvl(i, j));
        out.set_level(k, lvl);
    }
    return out;
}

std::array<StripScalar, 3> physical_gradient(const FlatteningMap& map,
                                             const StripScalar& psi) {
    StripScalar dzp = strip_dz(psi);
    StripScalar d3 = dzp;
    d3.data() = dzp.data() / map.dz_rho.data();
    StripScalar d1 = strip_dx(psi, 1);
    d1.data() -= d3.data() * map.grad_rho_1.data();
    StripScalar d2 = strip_dx(psi, 2);
    d2.data() -= d3.data() * map.grad_rho_2.data();
    return {std::move(d1), std::move(d2), std::move(d3)};
}

StripScalar physical_divergence(const FlatteningMap& map, const StripVector& v) {
    auto g1 = physical_gradient(map, v.c1);
    auto g2 = physical_gradient(map, v.c2);
    auto g3 = physical_gradient(map, v.c3);
    StripScalar out = g1[0];
    out.data() = g1[0].data() + g2[1].data() + g3[2].data();
    return out;
}

StripVector physical_curl(const FlatteningMap& map, const StripVector& v) {
    auto g1 = physical_gradient(map, v.c1);
    auto g2 = physical_gradient(map, v.c2);
    auto g3 = physical_gradient(map, v.c3);
    StripScalar w1 = g3[1], w2 = g1[2], w3 = g2[0];
    w1.data() = g3[1].data() - g2[2].data();
    w2.data() = g1[2].data() - g3[0].data();
    w3.data() = g2[0].data() - g1[1].data();
    return StripVector(std::move(w1), std::move(w2), std::move(w3));
}

TorusScalar normal_gradient_trace(const FlatteningMap& map, const StripScalar& psi) {
    const Index top = map.zgrid().top();
    StripScalar dzp = strip_dz(psi);
    Array2 J0 = map.dz_rho.level(top);
    Array2 f1 = map.grad_rho_1.level(top);
    Array2 f2 = map.grad_rho_2.level(top);
    TorusScalar p1 = strip_dx(psi, 1).level_scalar(top);
    TorusScalar p2 = strip_dx(psi, 2).level_scalar(top);
    Array2 val = -f1 * p1.values() - f2 * p2.values() +
                 (1.0 + f1.square() + f2.square()) / J0 *
                     Eigen::Map<const Array2>(dzp.data().col(top).data(), map.grid().nx,
                                              map.grid().ny);
    return TorusScalar(map.grid(), std::move(val));
}

Real volume_integral(const FlatteningMap& map, const StripScalar& g) {
    const Vec& w = map.zgrid().w;
    Real sum = 0.0;
    for (Index k = 0; k < map.zgrid().n; ++k)
        sum += w(k) * (g.data().col(k) * map.dz_rho.data().col(k).abs()).sum();
    return sum * map.grid().cell_area();
}

}  // namespace cvs
