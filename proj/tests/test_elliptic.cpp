// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvs/elliptic.hpp"

using namespace cvs;

namespace {

TorusScalar make_field(const TorusGrid& g, const std::function<Real(Real, Real)>& f) {
    Array2 v(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) v(i, j) = f(g.x1(i), g.x2(j));
    return TorusScalar(g, v);
}

StripScalar strip_of(const SideGeometry& geom,
                     const std::function<Real(Real, Real, Real)>& G) {
    return pullback(geom.map, G);
}

}  // namespace

TEST_CASE("flat strip separation of variables") {
    TorusGrid g(16, 16);
    SideGeometry geom(Surface(TorusScalar::zero(g), 0.5), Side::minus, 17);
    TorusScalar top = make_field(g, [](Real x, Real) { return std::cos(x); });
    auto bc = BoundaryCondition::dirichlet_top(top, TorusScalar::zero(g));
    StripScalar rhs = StripScalar::zero(g, geom.map.zgrid_ptr(), Side::minus);
    EllipticSolution sol = solve_flattened_laplace(geom, rhs, bc);
    CHECK(sol.residual_norm < 1e-11);
    Real err = 0.0;
    for (Index k = 0; k < 17; ++k) {
        Real z = geom.map.zgrid().z(k);
        Array2 want(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j)
                want(i, j) = std::cos(g.x1(i)) * std::cosh(z + 1.0) / std::cosh(1.0);
        err = std::max(err, (sol.psi.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-12);
}

TEST_CASE("zero data gives the zero solution") {
    TorusGrid g(8, 8);
    SideGeometry geom(Surface(TorusScalar::zero(g), 0.5), Side::minus, 9);
    auto bc = BoundaryCondition::dirichlet_top(TorusScalar::zero(g), TorusScalar::zero(g));
    StripScalar rhs = StripScalar::zero(g, geom.map.zgrid_ptr(), Side::minus);
    CHECK(solve_flattened_laplace(geom, rhs, bc).psi.max_abs() < 1e-13);
}

TEST_CASE("flat solve reproduces polynomial-in-z solutions to 1e-11") {
    TorusGrid g(8, 8);
    SideGeometry geom(Surface(TorusScalar::zero(g), 0.5), Side::minus, 13);
    // Phi* = y^3 + y: Lap Phi* = 6y, d3 Phi*(-1) = 4, Phi*(0) = 0
    auto zg = geom.map.zgrid_ptr();
    StripScalar rhs = StripScalar::zero(g, zg, Side::minus);
    for (Index k = 0; k < zg->n; ++k)
        rhs.set_level(k, Array2::Constant(g.nx, g.ny, 6.0 * zg->z(k)));
    auto bc = BoundaryCondition::dirichlet_top(TorusScalar::zero(g),
                                               TorusScalar::constant(g, 4.0));
    EllipticSolution sol = solve_flattened_laplace(geom, rhs, bc);
    Real err = 0.0;
    for (Index k = 0; k < zg->n; ++k) {
        Real z = zg->z(k);
        err = std::max(err, (sol.psi.level(k) - (z * z * z + z)).abs().maxCoeff());
    }
    CHECK(err < 1e-11);
}

TEST_CASE("manufactured solution over a wavy surface") {
    TorusGrid g(32, 32);
    Surface s(make_field(g, [](Real x, Real y) { return 0.2 * std::cos(x + y); }), 0.3);
    for (Side side : {Side::minus, Side::plus}) {
        SideGeometry geom(s, side, 33);
        auto Phi = [](Real x1, Real x2, Real y) { return std::sin(x1) * std::cos(x2) * std::cosh(y); };
        auto LapPhi = [&](Real x1, Real x2, Real y) { return -Phi(x1, x2, y); };
        auto d3Phi = [](Real x1, Real x2, Real y) { return std::sin(x1) * std::cos(x2) * std::sinh(y); };

        StripScalar psi_exact = strip_of(geom, Phi);
        StripScalar F = strip_of(geom, LapPhi);
        F.data() *= geom.coeffs.alpha.data();
        Real lid_y = side == Side::minus ? -1.0 : 1.0;
        TorusScalar lid = make_field(g, [&](Real x1, Real x2) { return d3Phi(x1, x2, lid_y); });
        TorusScalar top = psi_exact.top_trace();
        auto bc = BoundaryCondition::dirichlet_top(top, lid);
        EllipticSolution sol = solve_flattened_laplace(geom, F, bc);
        CHECK(sol.residual_norm < 1e-10);
        CHECK(sol.iterations <= 200);
        CHECK((sol.psi.data() - psi_exact.data()).abs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("pure Neumann problem with mean pinning") {
    TorusGrid g(16, 16);
    SideGeometry geom(Surface(TorusScalar::zero(g), 0.5), Side::minus, 17);
    // Phi* = cos(x1) e^z is harmonic; Neumann data at both ends
    TorusScalar top = make_field(g, [](Real x, Real) { return std::cos(x); });
    TorusScalar lid = make_field(g, [](Real x, Real) { return std::exp(-1.0) * std::cos(x); });
    auto bc = BoundaryCondition::neumann_top(top, lid);
    StripScalar rhs = StripScalar::zero(g, geom.map.zgrid_ptr(), Side::minus);
    EllipticSolution sol = solve_flattened_laplace(geom, rhs, bc);
    CHECK(std::abs(sol.compat_defect) < 1e-9);
    Real err = 0.0;
    for (Index k = 0; k < 17; ++k) {
        Real z = geom.map.zgrid().z(k);
        Array2 want(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j) want(i, j) = std::cos(g.x1(i)) * std::exp(z);
        err = std::max(err, (sol.psi.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-10);
}

TEST_CASE("harmonic extension: constants, flat modes, maximum principle") {
    TorusGrid g(16, 16);
    SideGeometry flat(Surface(TorusScalar::zero(g), 0.5), Side::minus, 17);
    StripScalar c = harmonic_extension(flat, TorusScalar::constant(g, 2.5));
    CHECK((c.data() - 2.5).abs().maxCoeff() < 1e-11);

    TorusScalar m2 = make_field(g, [](Real x, Real) { return std::cos(2 * x); });
    StripScalar e = harmonic_extension(flat, m2);
    Real err = 0.0;
    for (Index k = 0; k < 17; ++k) {
        Real z = flat.map.zgrid().z(k);
        Array2 want(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j)
                want(i, j) = std::cosh(2 * (z + 1)) / std::cosh(2.0) * std::cos(2 * g.x1(i));
        err = std::max(err, (e.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-11);

    Surface s(make_field(g, [](Real x, Real y) { return 0.2 * std::cos(x) + 0.1 * std::sin(y); }),
              0.3);
    SideGeometry wavy(s, Side::plus, 17);
    TorusScalar psi = make_field(g, [](Real x, Real y) { return std::sin(x) * std::cos(2 * y); });
    StripScalar ext = harmonic_extension(wavy, psi);
    CHECK(ext.data().maxCoeff() <= psi.values().maxCoeff() + 1e-8);
    CHECK(ext.data().minCoeff() >= psi.values().minCoeff() - 1e-8);
}

TEST_CASE("quadratic pressure trivial cases") {
    TorusGrid g(16, 16);
    Surface s(make_field(g, [](Real x, Real) { return 0.1 * std::cos(x); }), 0.3);
    SideGeometry geom(s, Side::minus, 13);
    auto zg = geom.map.zgrid_ptr();

    StripVector cv(StripScalar::constant(g, zg, Side::minus, 1.0),
                   StripScalar::constant(g, zg, Side::minus, -2.0),
                   StripScalar::constant(g, zg, Side::minus, 0.5));
    CHECK(quadratic_pressure(geom, cv, cv).max_abs() < 1e-11);

    // nilpotent gradient: u = (sin x2, 0, 0) has tr(grad u grad u) = 0
    StripVector shear(strip_of(geom, [](Real, Real x2, Real) { return std::sin(x2); }),
                      StripScalar::zero(g, zg, Side::minus), StripScalar::zero(g, zg, Side::minus));
    CHECK(quadratic_pressure(geom, shear, shear).max_abs() < 1e-10);
}

TEST_CASE("quadratic pressure flat shear against the per-mode ODE oracle") {
    TorusGrid g(16, 16);
    SideGeometry geom(Surface(TorusScalar::zero(g), 0.5), Side::minus, 21);
    auto zg = geom.map.zgrid_ptr();
    // u = (y sin x1, 0, 0): tr(grad u grad u) = y^2 cos^2 x1
    StripVector u(strip_of(geom, [](Real x1, Real, Real y) { return y * std::sin(x1); }),
                  StripScalar::zero(g, zg, Side::minus), StripScalar::zero(g, zg, Side::minus));
    StripScalar p = quadratic_pressure(geom, u, u);

    // hand-solved modes: p = p0(z) + q(z) cos(2 x1)
    auto p0 = [](Real z) { return -z * z * z * z / 24.0 - z / 6.0; };
    auto q = [](Real z) {
        Real A = 1.0 / 8.0, B = 1.0 / 16.0, C = -1.0 / 16.0;
        Real D = (A + C * std::sinh(2.0)) / std::cosh(2.0);
        return A * z * z + B + C * std::cosh(2 * z) + D * std::sinh(2 * z);
    };
    Real err = 0.0;
    for (Index k = 0; k < zg->n; ++k) {
        Real z = zg->z(k);
        Array2 want(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j) want(i, j) = p0(z) + q(z) * std::cos(2 * g.x1(i));
        err = std::max(err, (p.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-9);
}

TEST_CASE("divergence-free projection") {
    TorusGrid g(24, 24);
    Surface s(make_field(g, [](Real x, Real y) { return 0.15 * std::cos(x + y); }), 0.3);
    SideGeometry geom(s, Side::minus, 33);
    auto zg = geom.map.zgrid_ptr();

    // w = curl A for A = (sin(x2)cos(y), cos(x1)y^2, sin(x1+x2)):
    //   w1 = d2A3 - d3A2 = cos(x1+x2) - 2cos(x1)y
    //   w2 = d3A1 - d1A3 = -sin(x2)sin(y) - cos(x1+x2)
    //   w3 = d1A2 - d2A1 = -sin(x1)y^2 - cos(x2)cos(y)
    StripVector w(strip_of(geom, [](Real a, Real b, Real c) {
                      return std::cos(a + b) - 2.0 * std::cos(a) * c;
                  }),
                  strip_of(geom, [](Real a, Real b, Real c) {
                      return -std::sin(b) * std::sin(c) - std::cos(a + b);
                  }),
                  strip_of(geom, [](Real a, Real b, Real c) {
                      return -std::sin(a) * c * c - std::cos(b) * std::cos(c);
                  }));

    CHECK(physical_divergence(geom.map, w).max_abs() < 1e-8);
    StripVector pw = div_free_projection(geom, w);
    CHECK((pw.c1.data() - w.c1.data()).abs().maxCoeff() < 1e-7);
    CHECK((pw.c3.data() - w.c3.data()).abs().maxCoeff() < 1e-7);

    // a pure admissible gradient is annihilated
    StripScalar psi = StripScalar::zero(g, zg, Side::minus);
    for (Index k = 0; k < zg->n; ++k) {
        Real z = zg->z(k);
        Array2 lvl(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j)
                lvl(i, j) = std::sin(g.x1(i)) * (std::cosh(z + 1.0) - std::cosh(1.0));
        psi.set_level(k, lvl);
    }
    auto gp = physical_gradient(geom.map, psi);
    StripVector grad(gp[0], gp[1], gp[2]);
    CHECK(div_free_projection(geom, grad).max_abs() < 1e-7);

    // idempotency on a generic smooth field
    StripVector r(strip_of(geom, [](Real a, Real b, Real c) { return std::sin(a) * c + std::cos(b); }),
                  strip_of(geom, [](Real a, Real b, Real c) { return std::cos(a + b) * (1 + c); }),
                  strip_of(geom, [](Real a, Real, Real c) { return std::sin(2 * a) * c * c; }));
    StripVector p1 = div_free_projection(geom, r);
    StripVector p2 = div_free_projection(geom, p1);
    CHECK((p1.c1.data() - p2.c1.data()).abs().maxCoeff() < 1e-7);
    CHECK((p1.c2.data() - p2.c2.data()).abs().maxCoeff() < 1e-7);
    CHECK((p1.c3.data() - p2.c3.data()).abs().maxCoeff() < 1e-7);
    // the lid e3-trace is untouched by the projection
    Index lid = zg->n - 1;
    CHECK((p1.c3.level(lid) - r.c3.level(lid)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("solve is self-adjoint in the physical inner product") {
    TorusGrid g(16, 16);
    auto run = [&](const Surface& s, Real tol) {
        SideGeometry geom(s, Side::minus, 17);
        auto solve = [&](const TorusScalar& r) {
            StripScalar F = StripScalar::zero(g, geom.map.zgrid_ptr(), Side::minus);
            for (Index k = 0; k < F.nz(); ++k) F.set_level(k, r.values());
            StripScalar Fs = F;
            Fs.data() *= geom.coeffs.alpha.data();
            auto bc = BoundaryCondition::dirichlet_top(TorusScalar::zero(g), TorusScalar::zero(g));
            return solve_flattened_laplace(geom, Fs, bc).psi;
        };
        TorusScalar r1 = random_band_limited(g, 4, 21u);
        TorusScalar r2 = random_band_limited(g, 4, 22u);
        StripScalar F1 = StripScalar::zero(g, geom.map.zgrid_ptr(), Side::minus);
        StripScalar F2 = F1;
        for (Index k = 0; k < F1.nz(); ++k) {
            F1.set_level(k, r1.values());
            F2.set_level(k, r2.values());
        }
        StripScalar s1 = solve(r1), s2 = solve(r2);
        Real a = volume_integral(geom.map, s1 * F2);
        Real b = volume_integral(geom.map, s2 * F1);
        Real scale = std::max({1.0, std::abs(a), std::abs(b)});
        CHECK(std::abs(a - b) / scale < tol);
    };
    run(Surface(TorusScalar::zero(g), 0.5), 1e-11);
    run(Surface(make_field(g, [](Real x, Real) { return 0.2 * std::cos(x); }), 0.3), 1e-8);
}
