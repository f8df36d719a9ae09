// SPDX-License-Identifier: Apache-2.0

#include "cvs/diagnostics.hpp"

#include <cmath>

namespace cvs {

namespace {

// Smallest eigenvalue and eigenvector of a symmetric 2x2 [[a,b],[b,c]].
std::pair<Real, Eigen::Vector2d> min_eig_2x2(Real a, Real b, Real c) {
    Real tr = a + c;
    Real disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    Real lam = 0.5 * (tr - disc);
    Eigen::Vector2d v;
    if (std::abs(b) > 1e-300) {
        v << lam - c, b;
    } else {
        v = (a <= c) ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
    }
    Real n = v.norm();
    if (n > 0) v /= n;
    return {lam, v};
}

}  // namespace

StabilityReport lambda_stability(const InterfaceTraces& traces) {
    const TorusGrid& g = traces.u_plus[0].grid();
    StabilityReport rep;
    rep.lambda_min = std::numeric_limits<Real>::infinity();
    for (Index i = 0; i < g.nx; ++i)
        for (Index j = 0; j < g.ny; ++j) {
            Real hp1 = traces.h_plus[0].values()(i, j), hp2 = traces.h_plus[1].values()(i, j);
            Real hm1 = traces.h_minus[0].values()(i, j), hm2 = traces.h_minus[1].values()(i, j);
            Real v1 = 0.5 * (traces.u_plus[0].values()(i, j) - traces.u_minus[0].values()(i, j));
            Real v2 = 0.5 * (traces.u_plus[1].values()(i, j) - traces.u_minus[1].values()(i, j));
            Real a = hp1 * hp1 + hm1 * hm1 - 2.0 * v1 * v1;
            Real b = hp1 * hp2 + hm1 * hm2 - 2.0 * v1 * v2;
            Real c = hp2 * hp2 + hm2 * hm2 - 2.0 * v2 * v2;
            auto [lam, dir] = min_eig_2x2(a, b, c);
            if (lam < rep.lambda_min) {
                rep.lambda_min = lam;
                rep.worst_i = i;
                rep.worst_j = j;
                rep.worst_direction = dir;
            }
        }

    // Planar Syrovatskii flags evaluated with the grid means (meaningful for
    // near-planar traces; the pointwise margin is lambda_min).
    Eigen::Vector3d up, um, hp, hm;
    for (int k = 0; k < 3; ++k) {
        up(k) = traces.u_plus[size_t(k)].mean();
        um(k) = traces.u_minus[size_t(k)].mean();
        hp(k) = traces.h_plus[size_t(k)].mean();
        hm(k) = traces.h_minus[size_t(k)].mean();
    }
    auto fl = syrovatskii_check(up, um, hp, hm);
    rep.syrovatskii_1 = fl.cond1;
    rep.syrovatskii_2 = fl.cond2;
    rep.syrovatskii_strict = fl.strict;
    return rep;
}

SyrovatskiiFlags syrovatskii_check(const Eigen::Vector3d& u_plus,
                                   const Eigen::Vector3d& u_minus,
                                   const Eigen::Vector3d& h_plus,
                                   const Eigen::Vector3d& h_minus) {
    Eigen::Vector3d ju = u_plus - u_minus;
    SyrovatskiiFlags f;
    f.cond1 = ju.squaredNorm() <= 2.0 * (h_plus.squaredNorm() + h_minus.squaredNorm()) + 1e-14;
    Real lhs = ju.cross(h_plus).squaredNorm() + ju.cross(h_minus).squaredNorm();
    Real rhs = 2.0 * h_plus.cross(h_minus).squaredNorm();
    f.cond2 = lhs <= rhs + 1e-14;
    f.strict = lhs < rhs - 1e-14;
    return f;
}

DispersionTable dispersion(const Eigen::Vector2d& v, const Eigen::Vector2d& h_plus,
                           const Eigen::Vector2d& h_minus,
                           const std::vector<Eigen::Vector2d>& modes,
                           const Eigen::Vector2d& w) {
    DispersionTable tab;
    for (const auto& xi : modes) {
        DispersionEntry e;
        e.xi = xi;
        Real vd = v.dot(xi), hp = h_plus.dot(xi), hm = h_minus.dot(xi);
        e.sigma2 = vd * vd - 0.5 * (hp * hp + hm * hm);
        e.growth_rate = std::sqrt(std::max(0.0, e.sigma2));
        e.frequency = std::sqrt(std::max(0.0, -e.sigma2));
        e.doppler = w.dot(xi);
        const Real scale = std::max({1.0, vd * vd, hp * hp, hm * hm});
        if (e.sigma2 > 1e-13 * scale)
            e.classification = DispersionEntry::Class::unstable;
        else if (e.sigma2 < -1e-13 * scale)
            e.classification = DispersionEntry::Class::stable;
        else
            e.classification = DispersionEntry::Class::neutral;
        tab.entries.push_back(e);
    }
    return tab;
}

EnergyReport energy_es(const TorusScalar& f, const TorusScalar& theta,
                       const InterfaceTraces& traces, SobolevIndex s) {
    const TorusGrid& g = f.grid();
    TorusScalar fs = fourier_multiplier(f, [&](Real k1, Real k2) -> Complex {
        return Complex(std::pow(1.0 + k1 * k1 + k2 * k2, s.s / 2.0), 0);
    });
    TorusScalar ths = fourier_multiplier(theta, [&](Real k1, Real k2) -> Complex {
        return Complex(std::pow(1.0 + k1 * k1 + k2 * k2, s.s / 2.0), 0);
    });
    TorusScalar d1 = deriv(fs, 1), d2 = deriv(fs, 2);

    auto wv = [&](int i) {
        return TorusScalar(g, 0.5 * (traces.u_plus[size_t(i)].values() +
                                     traces.u_minus[size_t(i)].values()));
    };
    auto vv = [&](int i) {
        return TorusScalar(g, 0.5 * (traces.u_plus[size_t(i)].values() -
                                     traces.u_minus[size_t(i)].values()));
    };

    TorusScalar transport = ths + wv(0) * d1 + wv(1) * d2;
    TorusScalar jump = vv(0) * d1 + vv(1) * d2;
    TorusScalar hp = traces.h_plus[0] * d1 + traces.h_plus[1] * d2;
    TorusScalar hm = traces.h_minus[0] * d1 + traces.h_minus[1] * d2;

    EnergyReport rep;
    auto sq = [](const TorusScalar& t) {
        Real n = grid_l2_norm(t);
        return n * n;
    };
    rep.term_transport = sq(transport);
    rep.term_jump = sq(jump);
    rep.term_hplus = 0.5 * sq(hp);
    rep.term_hminus = 0.5 * sq(hm);
    rep.value = rep.term_transport - rep.term_jump + rep.term_hplus + rep.term_hminus;

    Real nf = sobolev_norm(f, SobolevIndex(s.s + 0.5));
    Real nth = sobolev_norm(theta, SobolevIndex(std::max(0.0, s.s - 0.5)));
    Real denom = nf * nf + nth * nth;
    Real lower = sq(theta) + sq(f);
    rep.equivalence_ratio = denom > 0 ? (rep.value + lower) / denom : 0.0;
    return rep;
}

Real growth_rate_fit(const std::vector<Real>& times, const std::vector<Real>& amplitudes) {
    const size_t n = times.size();
    if (n != amplitudes.size() || n < 10)
        throw DomainError("growth_rate_fit: need at least 10 samples");
    for (Real a : amplitudes)
        if (!(a > 0.0)) throw DomainError("growth_rate_fit: amplitudes must be positive");
    std::vector<Real> la(n);
    for (size_t i = 0; i < n; ++i) la[i] = std::log(amplitudes[i]);

    // Scan windows from longest to shortest, latest first; accept the first
    // whose RMS fit residual is below 2% of the fitted log-range.
    const size_t min_len = std::max<size_t>(10, n / 8);
    for (size_t len = n; len >= min_len; len = (len * 7) / 8) {
        for (size_t start = n - len;; --start) {
            Real sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (size_t i = start; i < start + len; ++i) {
                sx += times[i];
                sy += la[i];
                sxx += times[i] * times[i];
                sxy += times[i] * la[i];
            }
            Real m = Real(len);
            Real denom = m * sxx - sx * sx;
            if (denom > 0) {
                Real slope = (m * sxy - sx * sy) / denom;
                Real icept = (sy - slope * sx) / m;
                Real ss = 0;
                for (size_t i = start; i < start + len; ++i) {
                    Real r = la[i] - (slope * times[i] + icept);
                    ss += r * r;
                }
                Real rms = std::sqrt(ss / m);
                Real span = std::abs(slope) * (times[start + len - 1] - times[start]);
                if (span > 0.1 && rms <= 0.02 * span) return slope;
            }
            if (start == 0) break;
        }
        if (len == min_len) break;
    }
    throw DomainError(
        "growth_rate_fit: no linear-growth window found (try a smaller perturbation)");
}

}  // namespace cvs
