// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cvs/fields.hpp"
#include "cvs/io.hpp"

using namespace cvs;

namespace {

TorusScalar make_field(const TorusGrid& g, const std::function<Real(Real, Real)>& f) {
    Array2 v(g.nx, g.ny);
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) v(i, j) = f(g.x1(i), g.x2(j));
    return TorusScalar(g, v);
}

Real linf(const TorusScalar& a, const TorusScalar& b) {
    return (a.values() - b.values()).abs().maxCoeff();
}

}  // namespace

TEST_CASE("fourier multiplier eigenfunctions") {
    TorusGrid g(32, 32);
    auto mod = [](Real k1, Real k2) { return Complex(std::sqrt(k1 * k1 + k2 * k2), 0); };

    // single-mode eigenfunction of |k|
    TorusScalar c1 = make_field(g, [](Real x, Real) { return std::cos(x); });
    CHECK(linf(fourier_multiplier(c1, mod), c1) < 1e-12);

    // zero frequency is annihilated
    TorusScalar cc = TorusScalar::constant(g, 3.5);
    CHECK(fourier_multiplier(cc, mod).max_abs() < 1e-12);

    // (1+|k|^2)^(1/2) on cos(2x1+x2): (1+4+1)^(1/2) = sqrt(6)
    TorusScalar c2 = make_field(g, [](Real x, Real y) { return std::cos(2 * x + y); });
    TorusScalar got = fourier_multiplier(c2, [](Real k1, Real k2) {
        return Complex(std::sqrt(1.0 + k1 * k1 + k2 * k2), 0);
    });
    CHECK(linf(got, std::sqrt(6.0) * c2) < 1e-11);
}

TEST_CASE("non-finite symbol is rejected with the mode named") {
    TorusGrid g(16, 16);
    TorusScalar f = make_field(g, [](Real x, Real) { return std::cos(x); });
    try {
        fourier_multiplier(f, [](Real k1, Real k2) {
            Real kk = std::sqrt(k1 * k1 + k2 * k2);
            return Complex(1.0 / kk, 0);  // infinite at the zero mode
        });
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("(0, 0)") != std::string::npos);
    }
}

TEST_CASE("sobolev norm conventions") {
    TorusGrid g(32, 32);
    CHECK(sobolev_norm(TorusScalar::zero(g), SobolevIndex(1.5)) == 0.0);

    TorusScalar c1 = make_field(g, [](Real x, Real) { return std::cos(x); });
    Real h0 = sobolev_norm(c1, SobolevIndex(0.0));
    CHECK(h0 == doctest::Approx(std::sqrt(2.0 * M_PI * M_PI)).epsilon(1e-12));
    CHECK(sobolev_norm(c1, SobolevIndex(1.0)) / h0 ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    TorusScalar c3 = make_field(g, [](Real, Real y) { return std::cos(3 * y); });
    CHECK(sobolev_norm(c3, SobolevIndex(2.0)) / sobolev_norm(c3, SobolevIndex(0.0)) ==
          doctest::Approx(10.0).epsilon(1e-12));

    // Parseval: spectral H^0 equals the grid L2 norm
    TorusScalar r = random_band_limited(g, 9, 7u);
    CHECK(std::abs(sobolev_norm(r, SobolevIndex(0.0)) - grid_l2_norm(r)) <=
          1e-10 * grid_l2_norm(r));
}

TEST_CASE("mean projection") {
    TorusGrid g(16, 16);
    CHECK(mean_project(TorusScalar::constant(g, 5.0)).max_abs() < 1e-14);
    TorusScalar f = make_field(g, [](Real x, Real) { return std::cos(x) + 2.0; });
    TorusScalar expect = make_field(g, [](Real x, Real) { return std::cos(x); });
    CHECK(linf(mean_project(f), expect) < 1e-13);
    TorusScalar r = random_band_limited(g, 5, 3u) + TorusScalar::constant(g, 0.7);
    CHECK(linf(mean_project(mean_project(r)), mean_project(r)) < 1e-14);
}

TEST_CASE("two-thirds dealiasing") {
    TorusGrid g(24, 24);
    TorusScalar low = random_band_limited(g, 24 / 3, 11u);
    CHECK(linf(dealias(low), low) < 1e-12);
    TorusScalar nyq = make_field(g, [](Real x, Real) { return std::cos(12.0 * x); });
    CHECK(dealias(nyq).max_abs() < 1e-12);
}

TEST_CASE("dealiased product equals truncated convolution at Nx=8") {
    TorusGrid g(8, 8);
    TorusScalar a = make_field(g, [](Real x, Real y) { return std::cos(x) + 0.5 * std::sin(2 * y); });
    TorusScalar b = make_field(g, [](Real x, Real y) { return std::sin(x + y) + 0.25 * std::cos(2 * x); });
    TorusScalar got = multiply_dealiased(a, b);

    // direct convolution oracle on the integer lattice
    auto coef = [&](const TorusScalar& f, int k1, int k2) -> Complex {
        Index aidx = Index((k1 % 8 + 8) % 8), bidx = Index((k2 % 8 + 8) % 8);
        return f.spectral()(aidx, bidx);
    };
    CArray2 c = CArray2::Zero(8, 8);
    for (int k1 = -2; k1 <= 2; ++k1)
        for (int k2 = -2; k2 <= 2; ++k2) {  // two-thirds cutoff at 8/3 -> 2
            Complex s(0, 0);
            for (int m1 = -3; m1 <= 3; ++m1)
                for (int m2 = -3; m2 <= 3; ++m2)
                    s += coef(a, m1, m2) * coef(b, k1 - m1, k2 - m2);
            c(Index((k1 + 8) % 8), Index((k2 + 8) % 8)) = s;
        }
    TorusScalar want = TorusScalar::from_spectral(g, c);
    CHECK(linf(got, want) < 1e-12);
}

TEST_CASE("spectral derivative vs 4th-order finite differences") {
    auto fd_error = [](Index n) {
        TorusGrid g(n, n);
        TorusScalar f = make_field(g, [](Real x, Real y) { return std::exp(std::sin(x)) * std::cos(y); });
        TorusScalar d = deriv(f, 1);
        Real h = two_pi / Real(n);
        Real err = 0.0;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                auto v = [&](Index ii) { return f.values()(Index((ii + n) % n), j); };
                Real fd = (-v(i + 2) + 8 * v(i + 1) - 8 * v(i - 1 + n) + v(i - 2 + n)) / (12 * h);
                err = std::max(err, std::abs(fd - d.values()(i, j)));
            }
        return err;
    };
    Real e1 = fd_error(24), e2 = fd_error(48);
    CHECK(e1 / e2 > 8.0);   // 4th order: factor ~16 per doubling
    CHECK(e1 / e2 < 40.0);
}

TEST_CASE("operations preserve reality") {
    TorusGrid g(16, 16);
    TorusScalar r = random_band_limited(g, 5, 42u);
    CHECK(imag_residue(r) < 1e-12 * std::max(1.0, r.max_abs()));
    TorusScalar d = deriv(r, 2);
    CHECK(imag_residue(d) < 1e-12 * std::max(1.0, d.max_abs()));
    TorusScalar m = fourier_multiplier(r, [](Real k1, Real k2) {
        return Complex(std::sqrt(1 + k1 * k1 + k2 * k2), 0);
    });
    CHECK(imag_residue(m) < 1e-12 * std::max(1.0, m.max_abs()));
}

TEST_CASE("grid -> spectral -> grid round trip") {
    TorusGrid g(32, 16);
    TorusScalar r = random_band_limited(g, 5, 9u);
    TorusScalar back = TorusScalar::from_spectral(g, r.spectral());
    CHECK(linf(back, r) <= 1e-12 * std::max(1.0, r.max_abs()));
}

TEST_CASE("strip calculus on Chebyshev levels") {
    TorusGrid g(8, 8);
    auto zg = std::make_shared<const ChebGrid>(Index(9), -1.0, 0.0);
    StripScalar s = StripScalar::zero(g, zg, Side::minus);
    // polynomial in z times a harmonic in x: dz and antiderivative are exact
    for (Index k = 0; k < zg->n; ++k) {
        Real z = zg->z(k);
        Array2 lvl(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j)
                lvl(i, j) = (z * z * z - 0.5 * z) * std::cos(g.x1(i));
        s.set_level(k, lvl);
    }
    StripScalar dz = strip_dz(s);
    Real err = 0.0;
    for (Index k = 0; k < zg->n; ++k) {
        Real z = zg->z(k);
        Array2 want(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j) want(i, j) = (3 * z * z - 0.5) * std::cos(g.x1(i));
        err = std::max(err, (dz.level(k) - want).abs().maxCoeff());
    }
    CHECK(err < 1e-11);

    // interpolation at an off-node point
    TorusScalar at = strip_eval_z(s, -0.3);
    TorusScalar want = make_field(g, [](Real x, Real) {
        Real z = -0.3;
        return (z * z * z - 0.5 * z) * std::cos(x);
    });
    CHECK(linf(at, want) < 1e-11);

    // nodal antiderivative: d/dz of the antiderivative reproduces the profile
    Vec prof(zg->n), dprof(zg->n);
    for (Index k = 0; k < zg->n; ++k) prof(k) = std::pow(zg->z(k), 4);
    dprof = zg->D * (zg->antideriv * prof);
    CHECK((dprof - prof).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("CVS1 round trips") {
    TorusGrid g(8, 6);
    TorusScalar f = random_band_limited(g, 2, 5u);
    std::stringstream ss;
    write_cvs1(ss, f, "height");
    std::string name;
    TorusScalar back = read_cvs1_torus(ss, &name);
    CHECK(name == "height");
    CHECK(linf(back, f) == 0.0);

    auto zg = std::make_shared<const ChebGrid>(Index(5), -1.0, 0.0);
    StripScalar s = StripScalar::constant(g, zg, Side::plus, 1.25);
    s.data()(3, 2) = -7.5;
    std::stringstream s2;
    write_cvs1(s2, s, "omega1");
    StripScalar back2 = read_cvs1_strip(s2, zg, Side::plus, &name);
    CHECK(name == "omega1");
    CHECK((back2.data() - s.data()).abs().maxCoeff() == 0.0);
}
