// SPDX-License-Identifier: Apache-2.0

#include "cvs/divcurl.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace cvs {

namespace {

std::shared_ptr<const ChebGrid> slab_grid(Index nz_slab) {
    static std::map<Index, std::shared_ptr<const ChebGrid>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(nz_slab);
    if (it != cache.end()) return it->second;
    auto g = std::make_shared<const ChebGrid>(nz_slab, -1.0, 1.0);
    cache.emplace(nz_slab, g);
    return g;
}

}  // namespace

SheetGeometry::SheetGeometry(const Surface& surf, Index nz, EllipticConfig cfg,
                             Index nz_slab)
    : surface(surf), plus(surf, Side::plus, nz), minus(surf, Side::minus, nz), ecfg(cfg) {
    if (nz_slab == 0) nz_slab = 2 * nz - 1;
    slab = slab_grid(nz_slab);
    const TorusGrid& g = surface.grid();
    const Index M = g.nx * g.ny;
    const Array2& f = surface.f().values();

    auto build = [&](Sampler& s, const FlatteningMap& src, const ChebGrid& src_z,
                     const ChebGrid& tgt_z, bool side_is_plus) {
        s.weights.assign(size_t(tgt_z.n), Eigen::ArrayXXd::Zero(M, src_z.n));
        s.mask.assign(size_t(tgt_z.n), Eigen::Array<bool, Eigen::Dynamic, 1>::Zero(M));
        for (Index l = 0; l < tgt_z.n; ++l) {
            auto& W = s.weights[size_t(l)];
            auto& mk = s.mask[size_t(l)];
            parallel_for(M, [&](Index m) {
                Index i = m % g.nx, j = m / g.nx;
                Real y = tgt_z.z(l);  // physical height of the slab level
                Real fij = f(i, j);
                bool in_side = side_is_plus ? (y >= fij) : (y <= fij);
                if (!in_side) return;
                Real zr = src.z_of_height(i, j, y);
                W.row(m) = src_z.eval_weights(zr).transpose().array();
                mk(m) = true;
            });
        }
    };
    build(plus_to_slab, plus.map, plus.map.zgrid(), *slab, true);
    build(minus_to_slab, minus.map, minus.map.zgrid(), *slab, false);

    auto build_from_slab = [&](Sampler& s, const FlatteningMap& strip_map) {
        const ChebGrid& strip_z = strip_map.zgrid();
        s.weights.assign(size_t(strip_z.n), Eigen::ArrayXXd::Zero(M, slab->n));
        s.mask.assign(size_t(strip_z.n), Eigen::Array<bool, Eigen::Dynamic, 1>::Ones(M));
        for (Index l = 0; l < strip_z.n; ++l) {
            auto& W = s.weights[size_t(l)];
            parallel_for(M, [&](Index m) {
                Real y = strip_map.rho.data()(m, l);
                W.row(m) = slab->eval_weights(y).transpose().array();
            });
        }
    };
    build_from_slab(slab_to_plus, plus.map);
    build_from_slab(slab_to_minus, minus.map);
}

StripScalar sample_slab_to_strip(const SheetGeometry& sg, Side side, const StripScalar& slab) {
    const auto& sampler = side == Side::plus ? sg.slab_to_plus : sg.slab_to_minus;
    const SideGeometry& geo = sg.geom(side);
    StripScalar out = StripScalar::zero(sg.grid(), geo.map.zgrid_ptr(), side);
    for (Index l = 0; l < out.nz(); ++l)
        out.data().col(l) = (slab.data() * sampler.weights[size_t(l)]).rowwise().sum();
    return out;
}

StripVector sample_slab_to_strip(const SheetGeometry& sg, Side side, const StripVector& slab) {
    return StripVector(sample_slab_to_strip(sg, side, slab.c1),
                       sample_slab_to_strip(sg, side, slab.c2),
                       sample_slab_to_strip(sg, side, slab.c3));
}

StripScalar glue_to_slab(const SheetGeometry& sg, const StripScalar& on_plus,
                         const StripScalar& on_minus) {
    StripScalar out = StripScalar::zero(sg.grid(), sg.slab, Side::minus);
    for (Index l = 0; l < sg.slab->n; ++l) {
        Eigen::ArrayXd vp = (on_plus.data() * sg.plus_to_slab.weights[size_t(l)]).rowwise().sum();
        Eigen::ArrayXd vm = (on_minus.data() * sg.minus_to_slab.weights[size_t(l)]).rowwise().sum();
        const auto& mp = sg.plus_to_slab.mask[size_t(l)];
        out.data().col(l) = mp.select(vp, vm);
    }
    return out;
}

StripVector glue_to_slab(const SheetGeometry& sg, const StripVector& on_plus,
                         const StripVector& on_minus) {
    return StripVector(glue_to_slab(sg, on_plus.c1, on_minus.c1),
                       glue_to_slab(sg, on_plus.c2, on_minus.c2),
                       glue_to_slab(sg, on_plus.c3, on_minus.c3));
}

// ---------------------------------------------------------------------------

namespace {

struct SlabSolver {
    std::map<long, Eigen::PartialPivLU<Mat>> lu;
    const ChebGrid* zg = nullptr;
    std::mutex factor_mtx;

    const Eigen::PartialPivLU<Mat>& factor(long k2) {
        std::lock_guard<std::mutex> lock(factor_mtx);
        auto it = lu.find(k2);
        if (it != lu.end()) return it->second;
        const Index n = zg->n;
        Mat A = zg->D2 - Real(k2) * Mat::Identity(n, n);
        A.row(zg->top()) = Mat::Identity(n, n).row(zg->top());
        A.row(zg->bottom()) = Mat::Identity(n, n).row(zg->bottom());
        return lu.emplace(k2, Eigen::PartialPivLU<Mat>(A)).first->second;
    }
};

std::shared_ptr<SlabSolver> slab_solver_for(const ChebGrid& zg) {
    static std::unordered_map<const ChebGrid*, std::shared_ptr<SlabSolver>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(&zg);
    if (it != cache.end()) return it->second;
    auto s = std::make_shared<SlabSolver>();
    s->zg = &zg;
    cache.emplace(&zg, s);
    return s;
}

CArray2 level_spectral(const StripScalar& s, Index k) {
    return fft2_forward(s.grid(), s.level(k));
}

}  // namespace

StripVector solve_curl_slab(const StripVector& omega_bar, const DivCurlConfig& cfg) {
    const TorusGrid& g = omega_bar.c1.grid();
    const ChebGrid& zg = omega_bar.c1.zgrid();
    const Index nz = zg.n, M = g.nx * g.ny;
    const Real scale = std::max(1.0, omega_bar.max_abs());

    if (cfg.check_compat) {
        // C1 on the flat slab: d1 w1 + d2 w2 + dz w3 = 0.
        StripScalar div = strip_dx(omega_bar.c1, 1) + strip_dx(omega_bar.c2, 2) +
                          strip_dz(omega_bar.c3);
        Real c1 = div.max_abs() / scale;
        if (c1 > cfg.compat_tol)
            throw CompatibilityError("C1", c1,
                                     "solve_curl_slab: omega_bar is not divergence-free "
                                     "(relative defect " + std::to_string(c1) + ")");
        Real top = omega_bar.c3.level(zg.top()).mean();
        Real bot = omega_bar.c3.level(zg.bottom()).mean();
        Real c2 = std::max(std::abs(top), std::abs(bot)) / scale;
        if (c2 > cfg.compat_tol)
            throw CompatibilityError("C2", c2,
                                     "solve_curl_slab: lid flux of omega3 is nonzero "
                                     "(relative defect " + std::to_string(c2) + ")");
    }

    auto solver = slab_solver_for(zg);
    // spectral profiles of the data
    std::vector<CArray2> w1(nz), w2(nz), w3(nz);
    for (Index k = 0; k < nz; ++k) {
        w1[size_t(k)] = level_spectral(omega_bar.c1, k);
        w2[size_t(k)] = level_spectral(omega_bar.c2, k);
        w3[size_t(k)] = level_spectral(omega_bar.c3, k);
    }

    std::vector<CArray2> v1(nz, CArray2::Zero(g.nx, g.ny)), v2 = v1, v3 = v1;
    std::vector<std::pair<Index, Index>> modes;
    for (Index a = 0; a < g.nx; ++a)
        for (Index b = 0; b < g.ny; ++b) modes.emplace_back(a, b);
    std::mutex write_mtx;
    parallel_for(Index(modes.size()), [&](Index mi) {
        auto [a, b] = modes[mi];
        const long k1 = g.k1(a), k2 = g.k2(b);
        const long kk = k1 * k1 + k2 * k2;
        Eigen::VectorXcd p1(nz), p2(nz), p3(nz);
        for (Index k = 0; k < nz; ++k) {
            p1(k) = w1[size_t(k)](a, b);
            p2(k) = w2[size_t(k)](a, b);
            p3(k) = w3[size_t(k)](a, b);
        }
        Eigen::VectorXcd q1(nz), q2(nz), q3(nz);
        if (kk == 0) {
            // zero mode: v3 = 0, v1' = w2, v2' = -w1, zero-mean gauge
            q3.setZero();
            Eigen::VectorXd r1 = (zg.antideriv * p2.real()).eval();
            Eigen::VectorXd i1 = (zg.antideriv * p2.imag()).eval();
            Eigen::VectorXd r2 = (-(zg.antideriv * p1.real())).eval();
            Eigen::VectorXd i2 = (-(zg.antideriv * p1.imag())).eval();
            auto demean = [&](Eigen::VectorXd& v) { v.array() -= zg.w.dot(v) / (zg.b - zg.a); };
            demean(r1);
            demean(i1);
            demean(r2);
            demean(i2);
            for (Index k = 0; k < nz; ++k) {
                q1(k) = Complex(r1(k), i1(k));
                q2(k) = Complex(r2(k), i2(k));
            }
        } else {
            // (D2 - |k|^2) v3 = -(i k1 w2 - i k2 w1), v3(+-1) = 0
            Eigen::VectorXcd rhs =
                -(Complex(0, Real(k1)) * p2 - Complex(0, Real(k2)) * p1);
            rhs(zg.top()) = Complex(0, 0);
            rhs(zg.bottom()) = Complex(0, 0);
            const auto& lu = const_cast<SlabSolver&>(*solver).factor(kk);
            Eigen::VectorXd sr = lu.solve(rhs.real().eval());
            Eigen::VectorXd si = lu.solve(rhs.imag().eval());
            for (Index k = 0; k < nz; ++k) q3(k) = Complex(sr(k), si(k));
            Eigen::VectorXcd dq3 = zg.D * q3;
            // i k1 v2 - i k2 v1 = w3 ; i k1 v1 + i k2 v2 = -v3'
            for (Index k = 0; k < nz; ++k) {
                Complex A = p3(k);
                Complex B = -dq3(k);
                q1(k) = (Complex(0, Real(k2)) * A + Complex(0, Real(k1)) * B) / Real(kk);
                q2(k) = (Complex(0, Real(k2)) * B - Complex(0, Real(k1)) * A) / Real(kk);
            }
        }
        std::lock_guard<std::mutex> lock(write_mtx);
        for (Index k = 0; k < nz; ++k) {
            v1[size_t(k)](a, b) = q1(k);
            v2[size_t(k)](a, b) = q2(k);
            v3[size_t(k)](a, b) = q3(k);
        }
    });

    auto assemble = [&](std::vector<CArray2>& vc) {
        StripScalar out = StripScalar::zero(g, omega_bar.c1.zgrid_ptr(), omega_bar.c1.side());
        for (Index k = 0; k < nz; ++k) out.set_level(k, fft2_inverse_real(g, vc[size_t(k)]));
        return out;
    };
    return StripVector(assemble(v1), assemble(v2), assemble(v3));
}

// ---------------------------------------------------------------------------

namespace {

TorusScalar normal_dot_trace(const SideGeometry& geo, const StripVector& v) {
    const Index top = geo.map.zgrid().top();
    Array2 f1 = geo.map.grad_rho_1.level(top);
    Array2 f2 = geo.map.grad_rho_2.level(top);
    Array2 val = -f1 * v.c1.level(top) - f2 * v.c2.level(top) + v.c3.level(top);
    return TorusScalar(geo.map.grid(), std::move(val));
}

}  // namespace

RecoveredField divcurl_solve(const SheetGeometry& sg, Side side, const DivCurlData& data,
                             const DivCurlConfig& cfg) {
    const TorusGrid& g = sg.grid();
    const SideGeometry& own = sg.geom(side);
    const SideGeometry& other = sg.geom(side == Side::plus ? Side::minus : Side::plus);
    const Real scale = std::max(1.0, data.omega.max_abs());

    if (cfg.check_compat) {
        StripScalar divw = physical_divergence(own.map, data.omega);
        Real c1 = divw.max_abs() / scale;
        if (c1 > cfg.compat_tol)
            throw CompatibilityError("C1", c1, "divcurl_solve: div omega != 0 (relative defect " +
                                                   std::to_string(c1) + ")");
        Real c2 = std::abs(data.omega.c3.level(own.map.zgrid().bottom()).mean()) / scale;
        if (c2 > cfg.compat_tol)
            throw CompatibilityError("C2", c2,
                                     "divcurl_solve: lid flux of omega3 != 0 (relative defect " +
                                         std::to_string(c2) + ")");
        // Neumann solvability: int g dx = int theta dx'
        Real vol = volume_integral(own.map, data.g);
        Real flux = data.theta_bc.mean() * two_pi * two_pi;
        Real defect = std::abs(vol - flux) /
                      std::max({1.0, std::abs(vol), std::abs(flux)});
        if (defect > cfg.compat_tol)
            throw CompatibilityError("neumann", defect,
                                     "divcurl_solve: volume/boundary data imbalance " +
                                         std::to_string(defect));
    }

    // (i) divergence-free extension of omega across the interface: grad phi
    // on the other side with matching normal component.
    TorusScalar n_dot_omega = normal_dot_trace(own, data.omega);
    StripVector ext = StripVector::zero(g, other.map.zgrid_ptr(), other.side());
    if (n_dot_omega.max_abs() > 1e-14 * scale) {
        auto bc = BoundaryCondition::neumann_top(n_dot_omega, TorusScalar::zero(g));
        StripScalar zero_rhs = StripScalar::zero(g, other.map.zgrid_ptr(), other.side());
        StripScalar phi = solve_flattened_laplace(other, zero_rhs, bc, sg.ecfg).psi;
        auto grad = physical_gradient(other.map, phi);
        ext = StripVector(std::move(grad[0]), std::move(grad[1]), std::move(grad[2]));
    }

    // (ii) glue and solve on the slab
    StripVector glued = (side == Side::plus) ? glue_to_slab(sg, data.omega, ext)
                                             : glue_to_slab(sg, ext, data.omega);
    DivCurlConfig slab_cfg = cfg;
    slab_cfg.check_compat = false;  // checked above; glued field carries the seam
    StripVector v_slab = solve_curl_slab(glued, slab_cfg);
    StripVector v = sample_slab_to_strip(sg, side, v_slab);

    // (iii) harmonic-gradient correction of the interface condition
    TorusScalar n_dot_v = normal_dot_trace(own, v);
    StripVector u1 = v;
    {
        auto bc = BoundaryCondition::neumann_top(-1.0 * n_dot_v, TorusScalar::zero(g));
        StripScalar zero_rhs = StripScalar::zero(g, own.map.zgrid_ptr(), own.side());
        StripScalar p = solve_flattened_laplace(own, zero_rhs, bc, sg.ecfg).psi;
        auto grad = physical_gradient(own.map, p);
        u1 = StripVector(v.c1 + grad[0], v.c2 + grad[1], v.c3 + grad[2]);
    }

    // (v) constant tangential shift fixing the lid means (the gradient part
    // of the compensation rides along in the Neumann data below)
    const Index lid = own.map.zgrid().bottom();
    Eigen::Vector2d m1(u1.c1.level(lid).mean(), u1.c2.level(lid).mean());
    Eigen::Vector2d c = data.lid_means - m1;

    // (iv) Neumann potential for the (g, theta) data
    TorusScalar f1 = deriv(sg.surface.f(), 1), f2 = deriv(sg.surface.f(), 2);
    TorusScalar top_data = data.theta_bc - normal_dot_trace(own, u1) +
                           c(0) * f1 + c(1) * f2;
    StripScalar F = data.g;
    F.data() *= own.coeffs.alpha.data();
    auto bc = BoundaryCondition::neumann_top(top_data, TorusScalar::zero(g));
    StripScalar phi = solve_flattened_laplace(own, F, bc, sg.ecfg).psi;
    auto gp = physical_gradient(own.map, phi);

    RecoveredField out;
    out.u = StripVector(u1.c1 + gp[0] + StripScalar::constant(g, own.map.zgrid_ptr(), side, c(0)),
                        u1.c2 + gp[1] + StripScalar::constant(g, own.map.zgrid_ptr(), side, c(1)),
                        u1.c3 + gp[2]);

    const Real unorm = std::max({1.0, out.u.max_abs(), scale});
    StripVector curl_u = physical_curl(own.map, out.u);
    out.curl_residual = (curl_u - data.omega).max_abs() / unorm;
    StripScalar div_u = physical_divergence(own.map, out.u);
    out.div_residual = (div_u - data.g).max_abs() / unorm;
    out.trace_residual = (normal_dot_trace(own, out.u) - data.theta_bc).max_abs() / unorm;
    out.lid_e3_residual = out.u.c3.level(lid).abs().maxCoeff() / unorm;
    Eigen::Vector2d mf(out.u.c1.level(lid).mean(), out.u.c2.level(lid).mean());
    out.lid_mean_defect = (mf - data.lid_means).cwiseAbs().maxCoeff() / unorm;
    return out;
}

}  // namespace cvs
