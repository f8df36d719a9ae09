// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvs/dno.hpp"

using namespace cvs;

namespace {

TorusScalar make_field(const TorusGrid& g, const std::function<Real(Real, Real)>& f) {
    Array2 v(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) v(i, j) = f(g.x1(i), g.x2(j));
    return TorusScalar(g, v);
}

Real dotL2(const TorusScalar& a, const TorusScalar& b) {
    return a.grid().cell_area() * (a.values() * b.values()).sum();
}

}  // namespace

TEST_CASE("flat-strip DN eigenvalues |k| tanh|k|") {
    TorusGrid g(32, 32);
    DnoOperator dno(Surface(TorusScalar::zero(g), 0.5), 33);

    TorusScalar c1 = make_field(g, [](Real x, Real) { return std::cos(x); });
    for (Side s : {Side::plus, Side::minus}) {
        TorusScalar r = dno.apply(s, c1);
        CHECK((r.values() - std::tanh(1.0) * c1.values()).abs().maxCoeff() < 1e-10);
    }

    TorusScalar c34 = make_field(g, [](Real x, Real y) { return std::cos(3 * x + 4 * y); });
    TorusScalar r34 = dno.apply(Side::minus, c34);
    CHECK((r34.values() - 5.0 * std::tanh(5.0) * c34.values()).abs().maxCoeff() < 1e-8);

    CHECK(dno.apply(Side::plus, TorusScalar::constant(g, 4.2)).max_abs() < 1e-10);

    // spectrum sweep within the dealiased band
    Real worst = 0.0;
    for (int k = 1; k <= 10; ++k) {
        TorusScalar ck = make_field(g, [&](Real x, Real y) { return std::cos(k * x - k * y); });
        Real lam = Real(k) * std::sqrt(2.0);
        Real want = lam * std::tanh(lam);
        TorusScalar r = dno.apply(Side::minus, ck);
        worst = std::max(worst, (r.values() - want * ck.values()).abs().maxCoeff() / want);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("DN self-adjointness and positivity on wavy surfaces") {
    TorusGrid g(32, 32);
    std::vector<TorusScalar> surfaces = {
        TorusScalar::zero(g),
        make_field(g, [](Real x, Real) { return 0.2 * std::cos(x); }),
        make_field(g, [](Real x, Real y) { return 0.15 * std::cos(x + 2 * y); })};
    for (const auto& f : surfaces) {
        DnoOperator dno(Surface(f, 0.3), 33);
        for (Side s : {Side::plus, Side::minus}) {
            Real defect = 0.0;
            Real cmin = std::numeric_limits<Real>::infinity();
            for (unsigned seed = 0; seed < 5; ++seed) {
                TorusScalar psi = mean_project(random_band_limited(g, 6, 100 + seed));
                TorusScalar phi = mean_project(random_band_limited(g, 6, 200 + seed));
                TorusScalar Np = dno.apply(s, psi);
                TorusScalar Nq = dno.apply(s, phi);
                Real a = dotL2(Np, phi), b = dotL2(psi, Nq);
                Real nn = std::sqrt(dotL2(psi, psi) * dotL2(phi, phi));
                defect = std::max(defect, std::abs(a - b) / nn);
                Real quad = dotL2(Np, psi);
                Real h12 = sobolev_norm(psi, SobolevIndex(0.5));
                CHECK(quad >= 0.0);
                cmin = std::min(cmin, quad / (h12 * h12));
            }
            CHECK(defect < 1e-8);
            CHECK(cmin > 0.0);  // coercivity constant on zero-mean data
        }
    }
}

TEST_CASE("DN inverse: flat oracle and wavy round trip") {
    TorusGrid g(32, 32);
    DnoOperator flat(Surface(TorusScalar::zero(g), 0.5), 17);
    CHECK(flat.inverse_sum(TorusScalar::zero(g)).max_abs() == 0.0);

    TorusScalar c1 = make_field(g, [](Real x, Real) { return std::cos(x); });
    TorusScalar inv = flat.inverse_sum(c1);
    CHECK((inv.values() - c1.values() / (2.0 * std::tanh(1.0))).abs().maxCoeff() < 1e-9);

    Surface wavy(make_field(g, [](Real x, Real y) { return 0.15 * std::cos(x) * std::cos(y); }),
                 0.3);
    DnoOperator dno(wavy, 17);
    TorusScalar rhs = mean_project(random_band_limited(g, 5, 77u));
    TorusScalar psi = dno.inverse_sum(rhs);
    TorusScalar back = mean_project(dno.apply_sum(psi));
    CHECK((back.values() - mean_project(rhs).values()).abs().maxCoeff() <
          1e-7 * std::max(1.0, rhs.max_abs()));
    CHECK(std::abs(psi.mean()) < 1e-12);
}

TEST_CASE("principal symbol") {
    TorusGrid g(32, 32);
    Surface flat(TorusScalar::zero(g), 0.5);
    CHECK(principal_symbol(flat, 0, 0, 3, 4) == doctest::Approx(5.0));
    CHECK_THROWS_AS(principal_symbol(flat, 0, 0, 0, 0), DomainError);

    // grad f = (1,0) at x1 = 0 for f = sin(x1)
    Surface s(make_field(g, [](Real x, Real) { return 0.5 * std::sin(x); }), 0.4);
    Surface s2(make_field(g, [](Real x, Real) { return std::sin(x) * 0.49; }), 0.4);
    (void)s2;
    // use f = 0.49 sin so the bound holds; scale the expectation accordingly:
    // lambda^2 = (1+a^2)|xi|^2 - (a xi1)^2 at the point where df/dx1 = a
    Real a = 0.5;
    Real l1 = principal_symbol(s, 0, 0, 1, 0);
    CHECK(l1 == doctest::Approx(std::sqrt((1 + a * a) - a * a)));  // = 1
    Real l2 = principal_symbol(s, 0, 0, 0, 1);
    CHECK(l2 == doctest::Approx(std::sqrt(1 + a * a)));
}

TEST_CASE("DN difference is zeroth order") {
    TorusGrid g(32, 32);
    DnoOperator flat(Surface(TorusScalar::zero(g), 0.5), 17);
    TorusScalar psi = make_field(g, [](Real x, Real y) { return std::cos(2 * x) + std::sin(y); });
    CHECK(flat.difference(psi).max_abs() < 1e-9);
    CHECK(flat.difference(TorusScalar::constant(g, 1.0)).max_abs() < 1e-9);

    DnoOperator dno(Surface(make_field(g, [](Real x, Real) { return 0.2 * std::cos(x); }), 0.3),
                    33);
    // mode sweep: ||(N+ - N-) psi|| / ||psi|| stays bounded while ||N psi||
    // grows linearly with the mode index
    Real r2 = 0, r8 = 0, n2 = 0, n8 = 0;
    {
        TorusScalar p2 = make_field(g, [](Real x, Real) { return std::cos(2 * x); });
        TorusScalar p8 = make_field(g, [](Real x, Real) { return std::cos(8 * x); });
        Real l2n = grid_l2_norm(p2), l8n = grid_l2_norm(p8);
        r2 = grid_l2_norm(dno.difference(p2)) / l2n;
        r8 = grid_l2_norm(dno.difference(p8)) / l8n;
        n2 = grid_l2_norm(dno.apply(Side::plus, p2)) / l2n;
        n8 = grid_l2_norm(dno.apply(Side::plus, p8)) / l8n;
    }
    CHECK(r8 / std::max(r2, 1e-14) < 3.0);  // zeroth order: bounded ratio
    CHECK(n8 / n2 > 3.0);                   // first order: ~ k growth
}

TEST_CASE("leading symbol approximates DN on gentle surfaces") {
    TorusGrid g(32, 32);
    Surface s(make_field(g, [](Real x, Real y) { return 0.05 * std::cos(x) + 0.03 * std::sin(y); }),
              0.3);
    DnoOperator dno(s, 33);
    const int k = 8;
    TorusScalar psi = make_field(g, [](Real x, Real) { return std::cos(k * x); });
    TorusScalar Np = dno.apply(Side::minus, psi);
    Array2 sym(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) {
            Real lam = principal_symbol(s, i, j, k, 0);
            sym(i, j) = lam * std::cos(k * g.x1(i));
        }
    Real rel = (Np.values() - sym).matrix().norm() / sym.matrix().norm();
    CHECK(rel < 0.10);
}
