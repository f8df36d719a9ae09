// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvs/geometry.hpp"

using namespace cvs;

namespace {

TorusScalar make_field(const TorusGrid& g, const std::function<Real(Real, Real)>& f) {
    Array2 v(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) v(i, j) = f(g.x1(i), g.x2(j));
    return TorusScalar(g, v);
}

}  // namespace

TEST_CASE("flattening of the flat surface is the identity strip") {
    TorusGrid g(16, 16);
    Surface s(TorusScalar::zero(g), 0.5);
    for (Side side : {Side::minus, Side::plus}) {
        FlatteningMap m = build_flattening(s, side, 9);
        Real sgn = side == Side::minus ? 1.0 : -1.0;
        Real err = 0.0;
        for (Index k = 0; k < 9; ++k)
            err = std::max(err, (m.rho.level(k) - sgn * m.zgrid().z(k)).abs().maxCoeff());
        CHECK(err < 1e-14);
        auto c = flatten_coefficients(m);
        CHECK(c.flat);
        CHECK((c.alpha.data() - 1.0).abs().maxCoeff() < 1e-14);
        CHECK(c.beta1.max_abs() < 1e-14);
        CHECK(c.gamma.max_abs() < 1e-14);
    }
}

TEST_CASE("dz rho bound for a wavy surface") {
    TorusGrid g(32, 32);
    Surface s(make_field(g, [](Real x, Real) { return 0.3 * std::cos(x); }), 0.5);
    FlatteningMap m = build_flattening(s, Side::minus, 17);
    CHECK(m.dz_rho.data().minCoeff() >= 0.25);
    CHECK(std::abs(m.rho.level(m.zgrid().top())(3, 5) - s.f().values()(3, 5)) < 1e-12);
    CHECK((m.rho.level(m.zgrid().bottom()) + 1.0).abs().maxCoeff() < 1e-12);

    FlatteningMap mp = build_flattening(s, Side::plus, 17);
    CHECK(mp.dz_rho.data().maxCoeff() <= -0.25);
    CHECK((mp.rho.level(mp.zgrid().bottom()) - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("constant surface gives straight-line columns") {
    TorusGrid g(8, 8);
    Real c0 = 0.25, fc = 1.0 - c0;
    Surface s(TorusScalar::constant(g, fc), c0);
    FlatteningMap m = build_flattening(s, Side::minus, 9);
    Real err = 0.0;
    for (Index k = 0; k < 9; ++k) {
        Real z = m.zgrid().z(k);
        Real want = z + (1.0 + z) * fc;  // e^{dz|D|} is the identity on constants
        err = std::max(err, (m.rho.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-13);
}

TEST_CASE("determinism of build_flattening") {
    TorusGrid g(16, 16);
    Surface s(make_field(g, [](Real x, Real y) { return 0.2 * std::cos(x + 2 * y); }), 0.2);
    FlatteningMap a = build_flattening(s, Side::minus, 9);
    FlatteningMap b = build_flattening(s, Side::minus, 9);
    CHECK(a.delta == b.delta);
    CHECK((a.rho.data() - b.rho.data()).abs().maxCoeff() == 0.0);
}

TEST_CASE("coefficient defining identity holds pointwise") {
    TorusGrid g(16, 16);
    Surface s(make_field(g, [](Real x, Real y) { return 0.15 * std::sin(x) + 0.1 * std::cos(2 * y); }),
              0.3);
    for (Side side : {Side::minus, Side::plus}) {
        FlatteningMap m = build_flattening(s, side, 13);
        auto c = flatten_coefficients(m);
        Eigen::ArrayXXd resid = c.gamma.data() * m.dz_rho.data() -
                                (m.d2z_rho.data() + c.alpha.data() * m.lap_rho.data() +
                                 c.beta1.data() * m.grad_dz_rho_1.data() +
                                 c.beta2.data() * m.grad_dz_rho_2.data());
        CHECK(resid.abs().maxCoeff() < 1e-10);
        CHECK(c.alpha.data().minCoeff() > 0.0);
    }
}

TEST_CASE("coefficients linearize at rate O(eps) against the hand expansion") {
    TorusGrid g(32, 8);
    auto alpha_of = [&](Real eps) {
        Surface s(make_field(g, [&](Real x, Real) { return eps * std::cos(x); }), 0.5);
        FlatteningMap m = build_flattening(s, Side::minus, 11);
        return std::make_pair(flatten_coefficients(m), m);
    };
    auto [c1, m1] = alpha_of(1e-3);
    auto [c2, m2] = alpha_of(5e-4);
    // alpha ~ 1 + 2 e^{dz}(1+(1+z)d) eps cos(x1) for the single mode |k|=1
    auto lin_err = [&](const EllipticCoefficients& c, const FlatteningMap& m, Real eps) {
        Real err = 0.0;
        for (Index k = 0; k < m.zgrid().n; ++k) {
            Real z = m.zgrid().z(k);
            Real amp = 2.0 * std::exp(m.delta * z) * (1.0 + (1.0 + z) * m.delta);
            Array2 want(g.nx, g.ny);
            for (Index i = 0; i < g.nx; ++i)
                for (Index j = 0; j < g.ny; ++j) want(i, j) = amp * std::cos(g.x1(i));
            err = std::max(err, ((c.alpha.level(k) - 1.0) / eps - want).abs().maxCoeff());
        }
        return err;
    };
    Real e1 = lin_err(c1, m1, 1e-3), e2 = lin_err(c2, m2, 5e-4);
    CHECK(e1 < 0.01);
    CHECK(e1 / e2 > 1.5);  // first-order remainder halves with eps
}

TEST_CASE("interface normal") {
    TorusGrid g(16, 16);
    auto n0 = interface_normal(Surface(TorusScalar::zero(g), 0.5));
    CHECK(n0[0].max_abs() < 1e-14);
    CHECK(n0[1].max_abs() < 1e-14);
    CHECK((n0[2].values() - 1.0).abs().maxCoeff() < 1e-14);

    Surface s(make_field(g, [](Real x, Real) { return 0.4 * std::cos(x); }), 0.5);
    auto n = interface_normal(s);
    TorusScalar want = make_field(g, [](Real x, Real) { return 0.4 * std::sin(x); });
    CHECK((n[0].values() - want.values()).abs().maxCoeff() < 1e-12);

    // projection identity: a field projected tangent has zero normal component
    TorusScalar a1 = make_field(g, [](Real x, Real y) { return std::cos(x + y); });
    TorusScalar a2 = make_field(g, [](Real, Real y) { return std::sin(y); });
    TorusScalar a3 = make_field(g, [](Real x, Real) { return std::cos(2 * x); });
    Array2 n2 = n[0].values().square() + n[1].values().square() + 1.0;
    Array2 adotn = a1.values() * n[0].values() + a2.values() * n[1].values() + a3.values();
    Array2 t1 = a1.values() - adotn / n2 * n[0].values();
    Array2 t2 = a2.values() - adotn / n2 * n[1].values();
    Array2 t3 = a3.values() - adotn / n2 * 1.0;
    Array2 resid = t1 * n[0].values() + t2 * n[1].values() + t3;
    CHECK(resid.abs().maxCoeff() < 1e-12);
}

TEST_CASE("column height inversion") {
    TorusGrid g(16, 16);
    Surface s(make_field(g, [](Real x, Real y) { return 0.2 * std::cos(x) * std::sin(y); }), 0.3);
    for (Side side : {Side::minus, Side::plus}) {
        FlatteningMap m = build_flattening(s, side, 17);
        Real err = 0.0;
        for (Index i = 0; i < g.nx; i += 3)
            for (Index j = 0; j < g.ny; j += 5) {
                Real f = s.f().values()(i, j);
                Real lid = side == Side::minus ? -1.0 : 1.0;
                for (Real frac : {0.1, 0.5, 0.9}) {
                    Real y = f + (lid - f) * frac;
                    Real z = m.z_of_height(i, j, y);
                    Index row = i + g.nx * j;
                    Real back = m.zgrid().interpolate(m.rho.data().row(row).transpose(), z);
                    err = std::max(err, std::abs(back - y));
                }
            }
        CHECK(err < 1e-10);
    }
}

TEST_CASE("physical derivatives through the map match analytic fields") {
    TorusGrid g(24, 24);
    Surface s(make_field(g, [](Real x, Real y) { return 0.15 * std::cos(x + y); }), 0.3);
    auto G = [](Real x1, Real x2, Real y) { return std::sin(x1) * std::cos(x2) * (y * y + 0.5 * y); };
    auto G1 = [](Real x1, Real x2, Real y) { return std::cos(x1) * std::cos(x2) * (y * y + 0.5 * y); };
    auto G2 = [](Real x1, Real x2, Real y) { return -std::sin(x1) * std::sin(x2) * (y * y + 0.5 * y); };
    auto G3 = [](Real x1, Real x2, Real y) { return std::sin(x1) * std::cos(x2) * (2 * y + 0.5); };
    for (Side side : {Side::minus, Side::plus}) {
        FlatteningMap m = build_flattening(s, side, 17);
        StripScalar psi = pullback(m, G);
        auto grad = physical_gradient(m, psi);
        CHECK((grad[0].data() - pullback(m, G1).data()).abs().maxCoeff() < 2e-9);
        CHECK((grad[1].data() - pullback(m, G2).data()).abs().maxCoeff() < 2e-9);
        CHECK((grad[2].data() - pullback(m, G3).data()).abs().maxCoeff() < 2e-9);
    }
}

TEST_CASE("volume integral uses the Jacobian") {
    TorusGrid g(16, 16);
    Surface s(make_field(g, [](Real x, Real) { return 0.2 * std::cos(x); }), 0.3);
    FlatteningMap m = build_flattening(s, Side::minus, 17);
    StripScalar one = StripScalar::constant(g, m.zgrid_ptr(), Side::minus, 1.0);
    // volume of the lower region: (2 pi)^2 (1 + mean f) with mean f = 0
    CHECK(volume_integral(m, one) == doctest::Approx(two_pi * two_pi).epsilon(1e-10));
}
