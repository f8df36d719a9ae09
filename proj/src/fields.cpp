// SPDX-License-Identifier: Apache-2.0

#include "cvs/fields.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace cvs {

TorusScalar TorusScalar::from_spectral(const TorusGrid& grid, const CArray2& coeffs) {
    if (coeffs.rows() != grid.nx || coeffs.cols() != grid.ny)
        throw DomainError("TorusScalar::from_spectral: shape mismatch");
    TorusScalar out(grid, fft2_inverse_real(grid, coeffs));
    out.spectral_ = coeffs;
    out.have_spectral_ = true;
    return out;
}

const CArray2& TorusScalar::spectral() const {
    if (!have_spectral_) {
        spectral_ = fft2_forward(grid_, values_);
        have_spectral_ = true;
    }
    return spectral_;
}

TorusScalar operator+(const TorusScalar& a, const TorusScalar& b) {
    return TorusScalar(a.grid(), a.values() + b.values());
}
TorusScalar operator-(const TorusScalar& a, const TorusScalar& b) {
    return TorusScalar(a.grid(), a.values() - b.values());
}
TorusScalar operator*(Real c, const TorusScalar& a) {
    return TorusScalar(a.grid(), c * a.values());
}
TorusScalar operator*(const TorusScalar& a, const TorusScalar& b) {
    return TorusScalar(a.grid(), a.values() * b.values());
}

TorusScalar fourier_multiplier(const TorusScalar& g,
                               const std::function<Complex(Real, Real)>& m) {
    const TorusGrid& gr = g.grid();
    CArray2 c = g.spectral();
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b) {
            Complex mv = m(Real(gr.k1(a)), Real(gr.k2(b)));
            if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag())) {
                std::ostringstream os;
                os << "fourier_multiplier: non-finite symbol at mode (" << gr.k1(a)
                   << ", " << gr.k2(b) << ")";
                throw DomainError(os.str());
            }
            c(a, b) *= mv;
        }
    return TorusScalar(gr, fft2_inverse_real(gr, c));
}

Real sobolev_norm(const TorusScalar& g, SobolevIndex s) {
    const TorusGrid& gr = g.grid();
    const CArray2& c = g.spectral();
    Real sum = 0.0;
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b) {
            Real k1 = gr.k1(a), k2 = gr.k2(b);
            Real w = std::pow(1.0 + k1 * k1 + k2 * k2, s.s);
            sum += w * std::norm(c(a, b));
        }
    return two_pi * std::sqrt(sum);
}

Real grid_l2_norm(const TorusScalar& g) {
    return std::sqrt(g.grid().cell_area() * g.values().square().sum());
}

TorusScalar mean_project(const TorusScalar& g) {
    return TorusScalar(g.grid(), g.values() - g.mean());
}

TorusScalar dealias(const TorusScalar& g) {
    const TorusGrid& gr = g.grid();
    CArray2 c = g.spectral();
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b)
            if (!gr.keep(a, b)) c(a, b) = Complex(0, 0);
    return TorusScalar::from_spectral(gr, c);
}

TorusScalar multiply_dealiased(const TorusScalar& a, const TorusScalar& b) {
    return dealias(a * b);
}

TorusScalar deriv(const TorusScalar& g, int dim) {
    const TorusGrid& gr = g.grid();
    CArray2 c = g.spectral();
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b) {
            Real k = (dim == 1) ? Real(gr.k1(a)) : Real(gr.k2(b));
            c(a, b) *= Complex(0, k);
        }
    // Kill the unmatched Nyquist mode of the differentiated field.
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b)
            if ((dim == 1 && 2 * a == gr.nx) || (dim == 2 && 2 * b == gr.ny))
                c(a, b) = Complex(0, 0);
    return TorusScalar::from_spectral(gr, c);
}

TorusScalar deriv2(const TorusScalar& g, int di, int dj) {
    const TorusGrid& gr = g.grid();
    CArray2 c = g.spectral();
    for (Index a = 0; a < gr.nx; ++a)
        for (Index b = 0; b < gr.ny; ++b) {
            Real ki = (di == 1) ? Real(gr.k1(a)) : Real(gr.k2(b));
            Real kj = (dj == 1) ? Real(gr.k1(a)) : Real(gr.k2(b));
            c(a, b) *= -ki * kj;
        }
    return TorusScalar::from_spectral(gr, c);
}

TorusScalar random_band_limited(const TorusGrid& grid, int kmax, unsigned seed,
                                Real amplitude) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> gauss(0.0, 1.0);
    CArray2 c = CArray2::Zero(grid.nx, grid.ny);
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = -kmax; k2 <= kmax; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;  // half lattice
            Index a = Index((k1 + grid.nx) % grid.nx);
            Index b = Index((k2 + grid.ny) % grid.ny);
            Complex v(gauss(rng), gauss(rng));
            c(a, b) = v;
            Index am = Index((grid.nx - a) % grid.nx);
            Index bm = Index((grid.ny - b) % grid.ny);
            c(am, bm) = std::conj(v);
        }
    TorusScalar out = TorusScalar::from_spectral(grid, c);
    Real m = out.max_abs();
    if (m > 0) out *= amplitude / m;
    return out;
}

// ---------------------------------------------------------------------------

StripScalar operator+(const StripScalar& a, const StripScalar& b) {
    StripScalar r = a;
    r += b;
    return r;
}
StripScalar operator-(const StripScalar& a, const StripScalar& b) {
    StripScalar r = a;
    r -= b;
    return r;
}
StripScalar operator*(Real c, const StripScalar& a) {
    StripScalar r = a;
    r *= c;
    return r;
}
StripScalar operator*(const StripScalar& a, const StripScalar& b) {
    StripScalar r = a;
    r.data() *= b.data();
    return r;
}

StripScalar strip_dx(const StripScalar& s, int dim) {
    StripScalar out = s;
    const Index nz = s.nz();
    parallel_for(nz, [&](Index k) {
        TorusScalar lv = s.level_scalar(k);
        out.set_level(k, deriv(lv, dim).values());
    });
    return out;
}

StripScalar strip_dz(const StripScalar& s) {
    StripScalar out = s;
    out.data().matrix() = s.data().matrix() * s.zgrid().D.transpose();
    return out;
}

StripScalar strip_dealias(const StripScalar& s) {
    StripScalar out = s;
    parallel_for(s.nz(), [&](Index k) {
        out.set_level(k, dealias(s.level_scalar(k)).values());
    });
    return out;
}

StripScalar strip_multiply_dealiased(const StripScalar& a, const StripScalar& b) {
    return strip_dealias(a * b);
}

TorusScalar strip_eval_z(const StripScalar& s, Real zq) {
    Vec w = s.zgrid().eval_weights(zq);
    Eigen::VectorXd col = s.data().matrix() * w;
    return TorusScalar(s.grid(), Eigen::Map<const Array2>(col.data(), s.grid().nx, s.grid().ny));
}

Real strip_l2_norm(const StripScalar& s) {
    const Vec& w = s.zgrid().w;
    Real sum = 0.0;
    for (Index k = 0; k < s.nz(); ++k)
        sum += w(k) * s.data().col(k).square().sum();
    return std::sqrt(std::max(0.0, sum) * s.grid().cell_area());
}

Real strip_mean(const StripScalar& s) {
    const Vec& w = s.zgrid().w;
    Real sum = 0.0;
    for (Index k = 0; k < s.nz(); ++k) sum += w(k) * s.data().col(k).mean();
    return sum / (s.zgrid().b - s.zgrid().a);
}

StripVector operator+(const StripVector& a, const StripVector& b) {
    return StripVector(a.c1 + b.c1, a.c2 + b.c2, a.c3 + b.c3);
}
StripVector operator-(const StripVector& a, const StripVector& b) {
    return StripVector(a.c1 - b.c1, a.c2 - b.c2, a.c3 - b.c3);
}
StripVector operator*(Real c, const StripVector& a) {
    return StripVector(c * a.c1, c * a.c2, c * a.c3);
}

Real strip_l2_norm(const StripVector& v) {
    Real a = strip_l2_norm(v.c1), b = strip_l2_norm(v.c2), c = strip_l2_norm(v.c3);
    return std::sqrt(a * a + b * b + c * c);
}

}  // namespace cvs
