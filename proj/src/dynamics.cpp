// SPDX-License-Identifier: Apache-2.0

#include "cvs/dynamics.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace cvs {

InterfaceState::InterfaceState(TorusScalar f_, TorusScalar theta_, Real c0_)
    : f(std::move(f_)), theta(mean_project(theta_)), c0(c0_) {
    Surface check(f, c0);  // validates the height bounds
    (void)check;
}

// ---------------------------------------------------------------------------

namespace {

InterfaceTraces extract_traces(const FluidSnapshot& snap) {
    InterfaceTraces tr;
    for (int i = 0; i < 3; ++i) {
        tr.u_plus[size_t(i)] = snap.u_plus.comp(i + 1).top_trace();
        tr.u_minus[size_t(i)] = snap.u_minus.comp(i + 1).top_trace();
        tr.h_plus[size_t(i)] = snap.h_plus.comp(i + 1).top_trace();
        tr.h_minus[size_t(i)] = snap.h_minus.comp(i + 1).top_trace();
    }
    return tr;
}

TorusScalar normal_dot(const Surface& s, const std::array<TorusScalar, 3>& v) {
    TorusScalar f1 = deriv(s.f(), 1), f2 = deriv(s.f(), 2);
    return TorusScalar(s.grid(), -f1.values() * v[0].values() - f2.values() * v[1].values() +
                                     v[2].values());
}

}  // namespace

FluidSnapshot recover_fields(const InterfaceState& iface, const BulkState& bulk,
                             const SheetGeometry& sheet, const DynamicsConfig& cfg) {
    const TorusGrid& g = sheet.grid();
    FluidSnapshot snap;
    Real worst = 0.0;
    for (Side s : {Side::plus, Side::minus}) {
        const SideGeometry& geo = sheet.geom(s);
        StripVector omega_t = div_free_projection(geo, bulk.omega(s), cfg.elliptic);
        StripVector j_t = div_free_projection(geo, bulk.j(s), cfg.elliptic);

        DivCurlData du;
        du.omega = std::move(omega_t);
        du.g = StripScalar::zero(g, geo.map.zgrid_ptr(), s);
        du.theta_bc = iface.theta;
        du.lid_means = (s == Side::plus) ? bulk.beta_plus : bulk.beta_minus;
        RecoveredField ru = divcurl_solve(sheet, s, du, cfg.divcurl);

        DivCurlData dh;
        dh.omega = std::move(j_t);
        dh.g = StripScalar::zero(g, geo.map.zgrid_ptr(), s);
        dh.theta_bc = TorusScalar::zero(g);
        dh.lid_means = (s == Side::plus) ? bulk.gamma_plus : bulk.gamma_minus;
        RecoveredField rh = divcurl_solve(sheet, s, dh, cfg.divcurl);

        worst = std::max({worst, ru.curl_residual, ru.div_residual, ru.trace_residual,
                          rh.curl_residual, rh.div_residual, rh.trace_residual});
        if (s == Side::plus) {
            snap.u_plus = std::move(ru.u);
            snap.h_plus = std::move(rh.u);
        } else {
            snap.u_minus = std::move(ru.u);
            snap.h_minus = std::move(rh.u);
        }
    }
    snap.recovery_residual = worst;
    snap.p_uu_plus = quadratic_pressure(sheet.plus, snap.u_plus, snap.u_plus, cfg.elliptic);
    snap.p_uu_minus = quadratic_pressure(sheet.minus, snap.u_minus, snap.u_minus, cfg.elliptic);
    snap.p_hh_plus = quadratic_pressure(sheet.plus, snap.h_plus, snap.h_plus, cfg.elliptic);
    snap.p_hh_minus = quadratic_pressure(sheet.minus, snap.h_minus, snap.h_minus, cfg.elliptic);
    snap.traces = extract_traces(snap);

    const Surface& surf = sheet.surface;
    snap.h_normal_residual = std::max(normal_dot(surf, snap.traces.h_plus).max_abs(),
                                      normal_dot(surf, snap.traces.h_minus).max_abs());
    snap.u_trace_residual =
        std::max((normal_dot(surf, snap.traces.u_plus) - iface.theta).max_abs(),
                 (normal_dot(surf, snap.traces.u_minus) - iface.theta).max_abs());
    return snap;
}

// ---------------------------------------------------------------------------

TorusScalar theta_rhs(const InterfaceState& iface, const FluidSnapshot& snap,
                      const SheetGeometry& sheet, const DynamicsConfig& cfg) {
    const TorusGrid& g = sheet.grid();
    const auto& tr = snap.traces;
    TorusScalar th1 = deriv(iface.theta, 1), th2 = deriv(iface.theta, 2);

    // transport: -(u+_i + u-_i) di theta
    TorusScalar rhs = -1.0 * (multiply_dealiased(tr.u_plus[0] + tr.u_minus[0], th1) +
                              multiply_dealiased(tr.u_plus[1] + tr.u_minus[1], th2));

    // curvature sum over both sides and the +- difference feeding the DN term
    TorusScalar G1 = TorusScalar::zero(g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            TorusScalar fij = deriv2(iface.f, i + 1, j + 1);
            TorusScalar cp(g, tr.u_plus[size_t(i)].values() * tr.u_plus[size_t(j)].values() -
                                  tr.h_plus[size_t(i)].values() * tr.h_plus[size_t(j)].values());
            TorusScalar cm(g, tr.u_minus[size_t(i)].values() * tr.u_minus[size_t(j)].values() -
                                  tr.h_minus[size_t(i)].values() * tr.h_minus[size_t(j)].values());
            rhs -= 0.5 * multiply_dealiased(cp + cm, fij);
            G1 += multiply_dealiased(cp - cm, fij);
        }

    // G2 = (u+_i - u-_i) di theta
    TorusScalar G2 = multiply_dealiased(tr.u_plus[0] - tr.u_minus[0], th1) +
                     multiply_dealiased(tr.u_plus[1] - tr.u_minus[1], th2);

    // quadratic-pressure normal traces T+- = N . grad(p_uu - p_hh)
    TorusScalar Tp = normal_gradient_trace(sheet.plus.map, snap.p_uu_plus - snap.p_hh_plus);
    TorusScalar Tm = normal_gradient_trace(sheet.minus.map, snap.p_uu_minus - snap.p_hh_minus);
    rhs -= 0.5 * (Tp + Tm);

    // (N+ - N-) Ntilde^{-1} P (G1/2 + G2 + (T+ - T-)/2)
    TorusScalar q = mean_project(0.5 * G1 + G2 + 0.5 * (Tp - Tm));
    if (q.max_abs() > 1e-14) {
        DnoConfig dn = cfg.dno;
        dn.elliptic = cfg.elliptic;
        TorusScalar psi = dn_inverse_geom(sheet.plus, sheet.minus, q, dn);
        rhs += dn_apply_geom(sheet.plus, psi, cfg.elliptic) -
               dn_apply_geom(sheet.minus, psi, cfg.elliptic);
    }
    return mean_project(dealias(rhs));
}

// ---------------------------------------------------------------------------

BulkRhs vorticity_rhs(const InterfaceState& iface, const BulkState& bulk,
                      const FluidSnapshot& snap, const SheetGeometry& sheet) {
    BulkRhs out;
    for (Side s : {Side::plus, Side::minus}) {
        const SideGeometry& geo = sheet.geom(s);
        const FlatteningMap& map = geo.map;
        const StripVector& u = snap.u(s);
        const StripVector& h = snap.h(s);
        const StripVector& W = bulk.omega(s);
        const StripVector& Jc = bulk.j(s);
        StripScalar dt_rho = map.time_derivative(iface.theta);

        // physical gradients of u and h components: G[k][c] = d_k (comp c+1)
        std::array<std::array<StripScalar, 3>, 3> Gu, Gh;
        for (int c = 1; c <= 3; ++c) {
            auto gu = physical_gradient(map, u.comp(c));
            auto gh = physical_gradient(map, h.comp(c));
            for (int k = 0; k < 3; ++k) {
                Gu[size_t(k)][size_t(c - 1)] = std::move(gu[size_t(k)]);
                Gh[size_t(k)][size_t(c - 1)] = std::move(gh[size_t(k)]);
            }
        }

        const auto& J = map.dz_rho.data();
        auto zcoef = [&](const StripVector& vel, bool with_map_motion) {
            StripScalar c = vel.c3;
            c.data() = vel.c3.data() - vel.c1.data() * map.grad_rho_1.data() -
                       vel.c2.data() * map.grad_rho_2.data();
            if (with_map_motion) c.data() -= dt_rho.data();
            c.data() /= J;
            return c;
        };
        StripScalar au = zcoef(u, true);   // u-advective dz coefficient (map motion)
        StripScalar ah = zcoef(h, false);  // h-transport dz coefficient

        // -2 grad u_i x grad h_i (source of the current equation)
        StripVector source = StripVector::zero(sheet.grid(), map.zgrid_ptr(), s);
        for (int i = 0; i < 3; ++i) {
            source.c1.data() -= 2.0 * (Gu[1][size_t(i)].data() * Gh[2][size_t(i)].data() -
                                       Gu[2][size_t(i)].data() * Gh[1][size_t(i)].data());
            source.c2.data() -= 2.0 * (Gu[2][size_t(i)].data() * Gh[0][size_t(i)].data() -
                                       Gu[0][size_t(i)].data() * Gh[2][size_t(i)].data());
            source.c3.data() -= 2.0 * (Gu[0][size_t(i)].data() * Gh[1][size_t(i)].data() -
                                       Gu[1][size_t(i)].data() * Gh[0][size_t(i)].data());
        }

        StripVector dW = StripVector::zero(sheet.grid(), map.zgrid_ptr(), s);
        StripVector dJ = dW;
        for (int c = 1; c <= 3; ++c) {
            StripScalar d1W = strip_dx(W.comp(c), 1), d2W = strip_dx(W.comp(c), 2),
                        dzW = strip_dz(W.comp(c));
            StripScalar d1J = strip_dx(Jc.comp(c), 1), d2J = strip_dx(Jc.comp(c), 2),
                        dzJ = strip_dz(Jc.comp(c));
            dW.comp(c).data() =
                -u.c1.data() * d1W.data() - u.c2.data() * d2W.data() - au.data() * dzW.data() +
                h.c1.data() * d1J.data() + h.c2.data() * d2J.data() + ah.data() * dzJ.data() +
                W.c1.data() * Gu[0][size_t(c - 1)].data() +
                W.c2.data() * Gu[1][size_t(c - 1)].data() +
                W.c3.data() * Gu[2][size_t(c - 1)].data() -
                Jc.c1.data() * Gh[0][size_t(c - 1)].data() -
                Jc.c2.data() * Gh[1][size_t(c - 1)].data() -
                Jc.c3.data() * Gh[2][size_t(c - 1)].data();
            dJ.comp(c).data() =
                -u.c1.data() * d1J.data() - u.c2.data() * d2J.data() - au.data() * dzJ.data() +
                h.c1.data() * d1W.data() + h.c2.data() * d2W.data() + ah.data() * dzW.data() +
                Jc.c1.data() * Gu[0][size_t(c - 1)].data() +
                Jc.c2.data() * Gu[1][size_t(c - 1)].data() +
                Jc.c3.data() * Gu[2][size_t(c - 1)].data() -
                W.c1.data() * Gh[0][size_t(c - 1)].data() -
                W.c2.data() * Gh[1][size_t(c - 1)].data() -
                W.c3.data() * Gh[2][size_t(c - 1)].data() + source.comp(c).data();
            dW.comp(c) = strip_dealias(dW.comp(c));
            dJ.comp(c) = strip_dealias(dJ.comp(c));
        }
        if (s == Side::plus) {
            out.d_omega_plus = std::move(dW);
            out.d_j_plus = std::move(dJ);
        } else {
            out.d_omega_minus = std::move(dW);
            out.d_j_minus = std::move(dJ);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

BoundaryAverageRhs boundary_average_rhs(const FluidSnapshot& snap) {
    BoundaryAverageRhs out;
    // u3 = h3 = 0 on the lids, so only tangential advection enters.
    auto rates = [&](const StripVector& u, const StripVector& h, bool mixed) {
        const TorusGrid& g = u.c1.grid();
        const Index lid = u.c1.zgrid().bottom();
        TorusScalar u1(g, u.c1.level(lid)), u2(g, u.c2.level(lid));
        TorusScalar h1(g, h.c1.level(lid)), h2(g, h.c2.level(lid));
        Eigen::Vector2d r;
        for (int i = 1; i <= 2; ++i) {
            TorusScalar ui(g, u.comp(i).level(lid));
            TorusScalar hi(g, h.comp(i).level(lid));
            TorusScalar integ =
                mixed ? (u1 * deriv(hi, 1) + u2 * deriv(hi, 2) - h1 * deriv(ui, 1) -
                         h2 * deriv(ui, 2))
                      : (u1 * deriv(ui, 1) + u2 * deriv(ui, 2) - h1 * deriv(hi, 1) -
                         h2 * deriv(hi, 2));
            r(i - 1) = -integ.mean();
        }
        return r;
    };
    out.beta_plus = rates(snap.u_plus, snap.h_plus, false);
    out.beta_minus = rates(snap.u_minus, snap.h_minus, false);
    out.gamma_plus = rates(snap.u_plus, snap.h_plus, true);
    out.gamma_minus = rates(snap.u_minus, snap.h_minus, true);
    return out;
}

// ---------------------------------------------------------------------------

Real cfl_bound(const FluidSnapshot& snap, const TorusGrid& grid, Real safety) {
    const auto& tr = snap.traces;
    Real speed = 0.0;
    for (Index i = 0; i < grid.nx; ++i)
        for (Index j = 0; j < grid.ny; ++j) {
            Real w1 = 0.5 * (tr.u_plus[0].values()(i, j) + tr.u_minus[0].values()(i, j));
            Real w2 = 0.5 * (tr.u_plus[1].values()(i, j) + tr.u_minus[1].values()(i, j));
            Real v1 = 0.5 * (tr.u_plus[0].values()(i, j) - tr.u_minus[0].values()(i, j));
            Real v2 = 0.5 * (tr.u_plus[1].values()(i, j) - tr.u_minus[1].values()(i, j));
            Real hp = tr.h_plus[0].values()(i, j) * tr.h_plus[0].values()(i, j) +
                      tr.h_plus[1].values()(i, j) * tr.h_plus[1].values()(i, j);
            Real hm = tr.h_minus[0].values()(i, j) * tr.h_minus[0].values()(i, j) +
                      tr.h_minus[1].values()(i, j) * tr.h_minus[1].values()(i, j);
            Real s = std::hypot(w1, w2) + std::sqrt(v1 * v1 + v2 * v2 + 0.5 * (hp + hm));
            speed = std::max(speed, s);
        }
    Real kmax = std::hypot(Real(grid.nx / 3), Real(grid.ny / 3));
    return safety * 2.8284 / (kmax * speed + 1e-12);
}

namespace {

struct StateDeriv {
    TorusScalar df, dtheta;
    BulkRhs bulk;
    BoundaryAverageRhs avg;
};

StateDeriv eval_stage(const InterfaceState& iface, const BulkState& bulk,
                      const DynamicsConfig& cfg, FluidSnapshot* snap_out) {
    Surface surf(iface.f, cfg.c0);
    SheetGeometry sheet(surf, cfg.nz, cfg.elliptic, cfg.nz_slab);
    FluidSnapshot snap = recover_fields(iface, bulk, sheet, cfg);
    StateDeriv d;
    d.df = iface.theta;
    d.dtheta = theta_rhs(iface, snap, sheet, cfg);
    d.bulk = vorticity_rhs(iface, bulk, snap, sheet);
    d.avg = boundary_average_rhs(snap);
    if (snap_out) *snap_out = std::move(snap);
    return d;
}

InterfaceState iface_axpy(const InterfaceState& y, Real a, const TorusScalar& df,
                          const TorusScalar& dtheta, Real c0) {
    return InterfaceState(TorusScalar(y.f.grid(), y.f.values() + a * df.values()),
                          TorusScalar(y.f.grid(), y.theta.values() + a * dtheta.values()), c0);
}

BulkState bulk_axpy(const BulkState& y, Real a, const BulkRhs& d,
                    const BoundaryAverageRhs& avg) {
    BulkState out;
    out.omega_plus = y.omega_plus + a * d.d_omega_plus;
    out.omega_minus = y.omega_minus + a * d.d_omega_minus;
    out.j_plus = y.j_plus + a * d.d_j_plus;
    out.j_minus = y.j_minus + a * d.d_j_minus;
    out.beta_plus = y.beta_plus + a * avg.beta_plus;
    out.beta_minus = y.beta_minus + a * avg.beta_minus;
    out.gamma_plus = y.gamma_plus + a * avg.gamma_plus;
    out.gamma_minus = y.gamma_minus + a * avg.gamma_minus;
    return out;
}

Real lid_mean(const StripVector& v) { return v.c3.level(v.c3.zgrid().bottom()).mean(); }

}  // namespace

std::pair<InterfaceState, BulkState> step_rk4(const InterfaceState& iface,
                                              const BulkState& bulk, Real dt,
                                              const DynamicsConfig& cfg,
                                              StepDiagnostics* diag) {
    FluidSnapshot snap0;
    StateDeriv k1 = eval_stage(iface, bulk, cfg, &snap0);

    Real bound = cfl_bound(snap0, iface.f.grid(), cfg.cfl_safety);
    if (dt > bound) {
        std::ostringstream os;
        os << "step_rk4: dt = " << dt << " exceeds the CFL bound; use dt <= " << bound;
        throw DomainError(os.str());
    }

    auto s2_if = iface_axpy(iface, 0.5 * dt, k1.df, k1.dtheta, cfg.c0);
    auto s2_bulk = bulk_axpy(bulk, 0.5 * dt, k1.bulk, k1.avg);
    StateDeriv k2 = eval_stage(s2_if, s2_bulk, cfg, nullptr);

    auto s3_if = iface_axpy(iface, 0.5 * dt, k2.df, k2.dtheta, cfg.c0);
    auto s3_bulk = bulk_axpy(bulk, 0.5 * dt, k2.bulk, k2.avg);
    StateDeriv k3 = eval_stage(s3_if, s3_bulk, cfg, nullptr);

    auto s4_if = iface_axpy(iface, dt, k3.df, k3.dtheta, cfg.c0);
    auto s4_bulk = bulk_axpy(bulk, dt, k3.bulk, k3.avg);
    StateDeriv k4 = eval_stage(s4_if, s4_bulk, cfg, nullptr);

    const Real w1 = dt / 6.0, w2 = dt / 3.0;
    TorusScalar f_new(iface.f.grid(), iface.f.values() + w1 * (k1.df.values() + k4.df.values()) +
                                          w2 * (k2.df.values() + k3.df.values()));
    TorusScalar th_new(iface.f.grid(),
                       iface.theta.values() + w1 * (k1.dtheta.values() + k4.dtheta.values()) +
                           w2 * (k2.dtheta.values() + k3.dtheta.values()));
    BulkState bn = bulk_axpy(bulk, w1, k1.bulk, k1.avg);
    bn = bulk_axpy(bn, w2, k2.bulk, k2.avg);
    bn = bulk_axpy(bn, w2, k3.bulk, k3.avg);
    bn = bulk_axpy(bn, w1, k4.bulk, k4.avg);

    InterfaceState iface_new(f_new, mean_project(th_new), cfg.c0);

    // post-step hygiene: the lid flux of the third components is restored by
    // a uniform (divergence-free) shift, then C1 by projection
    Surface surf_new(iface_new.f, cfg.c0);
    SheetGeometry sheet_new(surf_new, cfg.nz, cfg.elliptic, cfg.nz_slab);
    Real drift_w = 0.0, drift_j = 0.0;
    int warnings = 0;
    for (Side s : {Side::plus, Side::minus}) {
        StripVector& om = (s == Side::plus) ? bn.omega_plus : bn.omega_minus;
        StripVector& jc = (s == Side::plus) ? bn.j_plus : bn.j_minus;
        Real mw = lid_mean(om), mj = lid_mean(jc);
        drift_w = std::max(drift_w, std::abs(mw - lid_mean(bulk.omega(s))) / dt);
        drift_j = std::max(drift_j, std::abs(mj - lid_mean(bulk.j(s))) / dt);
        om.c3 -= StripScalar::constant(om.c3.grid(), om.c3.zgrid_ptr(), s, mw);
        jc.c3 -= StripScalar::constant(jc.c3.grid(), jc.c3.zgrid_ptr(), s, mj);
        om = div_free_projection(sheet_new.geom(s), om, cfg.elliptic);
        jc = div_free_projection(sheet_new.geom(s), jc, cfg.elliptic);
    }
    if (snap0.h_normal_residual > 1e-5) ++warnings;
    if (snap0.recovery_residual > 1e-4) ++warnings;

    if (diag) {
        diag->dt = dt;
        diag->cfl = bound;
        diag->lid_drift_omega = drift_w;
        diag->lid_drift_j = drift_j;
        diag->theta_mean = iface_new.theta.mean();
        diag->recovery_residual = snap0.recovery_residual;
        diag->h_normal_residual = snap0.h_normal_residual;
        diag->invariant_warnings = warnings;
    }
    return {iface_new, bn};
}

// ---------------------------------------------------------------------------
// Picard iteration machinery.

namespace {

// Monotone root-find along a Chebyshev column profile: value(z) = target.
Real column_root(const ChebGrid& zg, const Eigen::Ref<const Vec>& profile, Real target) {
    Real z_lo = zg.z(zg.n - 1), z_hi = zg.z(0);
    Real f_lo = profile(zg.n - 1) - target, f_hi = profile(0) - target;
    if (f_lo * f_hi > 0.0)
        return std::abs(f_lo) < std::abs(f_hi) ? z_lo : z_hi;  // clamp outside
    Real z = 0.5 * (z_lo + z_hi);
    for (int it = 0; it < 60; ++it) {
        Real v = zg.interpolate(profile, z) - target;
        if (std::abs(v) < 1e-13) break;
        if ((v > 0) == (f_hi > 0)) {
            z_hi = z;
            f_hi = v;
        } else {
            z_lo = z;
            f_lo = v;
        }
        z = 0.5 * (z_lo + z_hi);
    }
    return z;
}

// Column-wise resampling weights from a source strip onto target z positions.
struct ColumnResample {
    std::vector<Eigen::ArrayXXd> weights;  // per target level: (M, n_src)

    StripScalar apply(const StripScalar& src, const TorusGrid& g,
                      std::shared_ptr<const ChebGrid> tgt_z, Side side) const {
        StripScalar out = StripScalar::zero(g, std::move(tgt_z), side);
        for (Index l = 0; l < out.nz(); ++l)
            out.data().col(l) = (src.data() * weights[size_t(l)]).rowwise().sum();
        return out;
    }
    StripVector apply(const StripVector& src, const TorusGrid& g,
                      std::shared_ptr<const ChebGrid> tgt_z, Side side) const {
        return StripVector(apply(src.c1, g, tgt_z, side), apply(src.c2, g, tgt_z, side),
                           apply(src.c3, g, tgt_z, side));
    }
};

// Harmonic vertical coordinate psi on the reference strip: harmonic, equal to
// f at the interface and to -+1 at the lid (the first two components of the
// harmonic coordinates are the identity).
StripScalar harmonic_vertical(const SideGeometry& ref_geom, const TorusScalar& f,
                              const EllipticConfig& cfg) {
    const TorusGrid& g = f.grid();
    Real lid = ref_geom.side() == Side::minus ? -1.0 : 1.0;
    auto bc = BoundaryCondition::dirichlet_both(f, TorusScalar::constant(g, lid));
    StripScalar zero_rhs = StripScalar::zero(g, ref_geom.map.zgrid_ptr(), ref_geom.side());
    return solve_flattened_laplace(ref_geom, zero_rhs, bc, cfg).psi;
}

// Pushforward weights: reference-strip field composed with Phi^{-1}, sampled
// on the current strip (psi is the harmonic vertical coordinate).
ColumnResample pushforward_weights(const StripScalar& psi, const FlatteningMap& cur_map) {
    const TorusGrid& g = cur_map.grid();
    const ChebGrid& ref_z = psi.zgrid();
    const ChebGrid& cur_z = cur_map.zgrid();
    const Index M = g.nx * g.ny;
    ColumnResample r;
    r.weights.assign(size_t(cur_z.n), Eigen::ArrayXXd::Zero(M, ref_z.n));
    for (Index l = 0; l < cur_z.n; ++l) {
        auto& W = r.weights[size_t(l)];
        parallel_for(M, [&](Index m) {
            Real x3 = cur_map.rho.data()(m, l);
            Real zs = column_root(ref_z, psi.data().row(m).transpose(), x3);
            W.row(m) = ref_z.eval_weights(zs).transpose().array();
        });
    }
    return r;
}

// Pullback weights: current-strip field composed with Phi, sampled on the
// reference strip.
ColumnResample pullback_weights(const StripScalar& psi, const FlatteningMap& cur_map) {
    const TorusGrid& g = cur_map.grid();
    const ChebGrid& ref_z = psi.zgrid();
    const ChebGrid& cur_z = cur_map.zgrid();
    const Index M = g.nx * g.ny;
    ColumnResample r;
    r.weights.assign(size_t(ref_z.n), Eigen::ArrayXXd::Zero(M, cur_z.n));
    for (Index l = 0; l < ref_z.n; ++l) {
        auto& W = r.weights[size_t(l)];
        parallel_for(M, [&](Index m) {
            Real x3 = psi.data()(m, l);
            Index i = m % g.nx, j = m / g.nx;
            Real zc = cur_map.z_of_height(i, j, x3);
            W.row(m) = cur_z.eval_weights(zc).transpose().array();
        });
    }
    return r;
}

// Tricubic interpolation on the slab: periodic cubic Lagrange in x, local
// 4-node Lagrange in z.
struct SlabInterp {
    const TorusGrid& g;
    const ChebGrid& zg;

    std::array<Real, 4> xw(Real t, Index& i0) const {
        Real s = t - std::floor(t);
        i0 = Index(std::floor(t)) - 1;
        // Lagrange weights at offsets -1,0,1,2
        Real w0 = -s * (s - 1) * (s - 2) / 6.0;
        Real w1 = (s + 1) * (s - 1) * (s - 2) / 2.0;
        Real w2 = -(s + 1) * s * (s - 2) / 2.0;
        Real w3 = (s + 1) * s * (s - 1) / 6.0;
        return {w0, w1, w2, w3};
    }

    Real eval(const StripScalar& field, Real x1, Real x2, Real y, bool* clamped) const {
        if (y > zg.b) {
            y = zg.b;
            if (clamped) *clamped = true;
        }
        if (y < zg.a) {
            y = zg.a;
            if (clamped) *clamped = true;
        }
        // locate z stencil (nodes descend from b to a)
        Index k = 0;
        while (k + 1 < zg.n && zg.z(k + 1) > y) ++k;
        Index k0 = std::clamp<Index>(k - 1, 0, zg.n - 4);
        std::array<Real, 4> zw{};
        for (int a = 0; a < 4; ++a) {
            Real w = 1.0;
            for (int b = 0; b < 4; ++b)
                if (a != b) w *= (y - zg.z(k0 + b)) / (zg.z(k0 + a) - zg.z(k0 + b));
            zw[size_t(a)] = w;
        }
        Index i0, j0;
        auto wx = xw(x1 / two_pi * Real(g.nx), i0);
        auto wy = xw(x2 / two_pi * Real(g.ny), j0);
        Real sum = 0.0;
        for (int a = 0; a < 4; ++a) {
            Index ia = ((i0 + a) % g.nx + g.nx) % g.nx;
            for (int b = 0; b < 4; ++b) {
                Index jb = ((j0 + b) % g.ny + g.ny) % g.ny;
                const Index row = ia + g.nx * jb;
                Real prof = 0.0;
                for (int c = 0; c < 4; ++c) prof += zw[size_t(c)] * field.data()(row, k0 + c);
                sum += wx[size_t(a)] * wy[size_t(b)] * prof;
            }
        }
        return sum;
    }
};

// Slab view of a side field with constant continuation past the interface
// (consumed only within O(dt) of the seam by the characteristic tracer).
StripScalar slab_view(const SheetGeometry& sg, Side side, const StripScalar& f) {
    const auto& sampler = side == Side::plus ? sg.plus_to_slab : sg.minus_to_slab;
    StripScalar out = StripScalar::zero(sg.grid(), sg.slab, Side::minus);
    Eigen::ArrayXd iface_vals =
        (f.data().col(f.zgrid().top())).eval();  // value at z=0 per column
    for (Index l = 0; l < sg.slab->n; ++l) {
        Eigen::ArrayXd v = (f.data() * sampler.weights[size_t(l)]).rowwise().sum();
        const auto& mk = sampler.mask[size_t(l)];
        out.data().col(l) = mk.select(v, iface_vals);
    }
    return out;
}

StripVector slab_view(const SheetGeometry& sg, Side side, const StripVector& f) {
    return StripVector(slab_view(sg, side, f.c1), slab_view(sg, side, f.c2),
                       slab_view(sg, side, f.c3));
}

// Frozen-coefficient data at one sample time.
struct FrozenSample {
    Real t = 0.0;
    InterfaceTraces traces;
    TorusScalar g_term;        // frozen DN-sandwich + pressure-trace source
    BoundaryAverageRhs rates;  // frozen lid-average rates
    // per side: transport velocities and sources on the slab
    struct SideFields {
        StripVector v_minusfam;  // u - h  (advects varpi = omega + j)
        StripVector v_plusfam;   // u + h  (advects omega - j)
        std::array<std::array<StripScalar, 3>, 3> grad_vm, grad_vp;
        StripVector src;  // -2 grad u_i x grad h_i
    };
    SideFields plus, minus;
    const SideFields& side(Side s) const { return s == Side::plus ? plus : minus; }
};

}  // namespace

Real trajectory_distance(const Trajectory& a, const Trajectory& b) {
    Real d = 0.0;
    for (size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        Real s = sobolev_norm(a[k].iface.f - b[k].iface.f, SobolevIndex(2.5)) +
                 sobolev_norm(a[k].iface.theta - b[k].iface.theta, SobolevIndex(1.5));
        s += strip_l2_norm(a[k].bulk.omega_plus - b[k].bulk.omega_plus);
        s += strip_l2_norm(a[k].bulk.omega_minus - b[k].bulk.omega_minus);
        s += strip_l2_norm(a[k].bulk.j_plus - b[k].bulk.j_plus);
        s += strip_l2_norm(a[k].bulk.j_minus - b[k].bulk.j_minus);
        s += (a[k].bulk.beta_plus - b[k].bulk.beta_plus).cwiseAbs().maxCoeff();
        s += (a[k].bulk.beta_minus - b[k].bulk.beta_minus).cwiseAbs().maxCoeff();
        s += (a[k].bulk.gamma_plus - b[k].bulk.gamma_plus).cwiseAbs().maxCoeff();
        s += (a[k].bulk.gamma_minus - b[k].bulk.gamma_minus).cwiseAbs().maxCoeff();
        d = std::max(d, s);
    }
    return d;
}

Trajectory picard_map(const Trajectory& input, const DynamicsConfig& cfg,
                      PicardReport* report) {
    if (input.size() < 2) throw DomainError("picard_map: need at least two samples");
    const TorusGrid g = input[0].iface.f.grid();
    const size_t n = input.size();
    int clamped = 0;

    // reference geometry from the initial surface
    Surface ref_surface(input[0].iface.f, cfg.c0);
    SideGeometry ref_plus(ref_surface, Side::plus, cfg.nz);
    SideGeometry ref_minus(ref_surface, Side::minus, cfg.nz);

    // Per-sample frozen data: recover fields from the frozen iterate.
    std::vector<std::unique_ptr<SheetGeometry>> sheets(n);
    std::vector<FrozenSample> frozen(n);
    std::vector<StripScalar> psi_plus(n), psi_minus(n);
    std::vector<BulkState> bulk_cur(n);  // frozen omega/j moved onto current strips

    for (size_t k = 0; k < n; ++k) {
        const auto& smp = input[k];
        Surface surf(smp.iface.f, cfg.c0);
        sheets[k] = std::make_unique<SheetGeometry>(surf, cfg.nz, cfg.elliptic, cfg.nz_slab);
        const SheetGeometry& sheet = *sheets[k];

        psi_plus[k] = harmonic_vertical(ref_plus, smp.iface.f, cfg.elliptic);
        psi_minus[k] = harmonic_vertical(ref_minus, smp.iface.f, cfg.elliptic);

        BulkState moved = smp.bulk;
        auto push_p = pushforward_weights(psi_plus[k], sheet.plus.map);
        auto push_m = pushforward_weights(psi_minus[k], sheet.minus.map);
        moved.omega_plus =
            push_p.apply(smp.bulk.omega_plus, g, sheet.plus.map.zgrid_ptr(), Side::plus);
        moved.j_plus = push_p.apply(smp.bulk.j_plus, g, sheet.plus.map.zgrid_ptr(), Side::plus);
        moved.omega_minus =
            push_m.apply(smp.bulk.omega_minus, g, sheet.minus.map.zgrid_ptr(), Side::minus);
        moved.j_minus =
            push_m.apply(smp.bulk.j_minus, g, sheet.minus.map.zgrid_ptr(), Side::minus);
        bulk_cur[k] = std::move(moved);

        FluidSnapshot snap = recover_fields(smp.iface, bulk_cur[k], sheet, cfg);

        FrozenSample& fr = frozen[k];
        fr.t = smp.t;
        fr.traces = snap.traces;
        fr.rates = boundary_average_rhs(snap);

        // frozen g = (N+ - N-) Ntilde^{-1} P(G1/2 + G2 + (T+ - T-)/2) - (T+ + T-)/2
        {
            const auto& tr = snap.traces;
            TorusScalar th1 = deriv(smp.iface.theta, 1), th2 = deriv(smp.iface.theta, 2);
            TorusScalar G1 = TorusScalar::zero(g);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    TorusScalar fij = deriv2(smp.iface.f, i + 1, j + 1);
                    TorusScalar cp(g,
                                   tr.u_plus[size_t(i)].values() * tr.u_plus[size_t(j)].values() -
                                       tr.h_plus[size_t(i)].values() *
                                           tr.h_plus[size_t(j)].values());
                    TorusScalar cm(g, tr.u_minus[size_t(i)].values() *
                                              tr.u_minus[size_t(j)].values() -
                                          tr.h_minus[size_t(i)].values() *
                                              tr.h_minus[size_t(j)].values());
                    G1 += multiply_dealiased(cp - cm, fij);
                }
            TorusScalar G2 = multiply_dealiased(tr.u_plus[0] - tr.u_minus[0], th1) +
                             multiply_dealiased(tr.u_plus[1] - tr.u_minus[1], th2);
            TorusScalar Tp =
                normal_gradient_trace(sheet.plus.map, snap.p_uu_plus - snap.p_hh_plus);
            TorusScalar Tm =
                normal_gradient_trace(sheet.minus.map, snap.p_uu_minus - snap.p_hh_minus);
            TorusScalar ge = -0.5 * (Tp + Tm);
            TorusScalar q = mean_project(0.5 * G1 + G2 + 0.5 * (Tp - Tm));
            if (q.max_abs() > 1e-14) {
                DnoConfig dn = cfg.dno;
                dn.elliptic = cfg.elliptic;
                TorusScalar psi = dn_inverse_geom(sheet.plus, sheet.minus, q, dn);
                ge += dn_apply_geom(sheet.plus, psi, cfg.elliptic) -
                      dn_apply_geom(sheet.minus, psi, cfg.elliptic);
            }
            fr.g_term = dealias(ge);
        }

        // transport fields on the slab
        for (Side s : {Side::plus, Side::minus}) {
            auto& sf = (s == Side::plus) ? fr.plus : fr.minus;
            const StripVector& u = snap.u(s);
            const StripVector& h = snap.h(s);
            const FlatteningMap& map = sheet.geom(s).map;
            StripVector vm(u.c1 - h.c1, u.c2 - h.c2, u.c3 - h.c3);
            StripVector vp(u.c1 + h.c1, u.c2 + h.c2, u.c3 + h.c3);
            std::array<std::array<StripScalar, 3>, 3> Gu, Gh;
            for (int c = 1; c <= 3; ++c) {
                auto gu = physical_gradient(map, u.comp(c));
                auto gh = physical_gradient(map, h.comp(c));
                for (int kk = 0; kk < 3; ++kk) {
                    Gu[size_t(kk)][size_t(c - 1)] = std::move(gu[size_t(kk)]);
                    Gh[size_t(kk)][size_t(c - 1)] = std::move(gh[size_t(kk)]);
                }
            }
            StripVector src = StripVector::zero(g, map.zgrid_ptr(), s);
            for (int i = 0; i < 3; ++i) {
                src.c1.data() -= 2.0 * (Gu[1][size_t(i)].data() * Gh[2][size_t(i)].data() -
                                        Gu[2][size_t(i)].data() * Gh[1][size_t(i)].data());
                src.c2.data() -= 2.0 * (Gu[2][size_t(i)].data() * Gh[0][size_t(i)].data() -
                                        Gu[0][size_t(i)].data() * Gh[2][size_t(i)].data());
                src.c3.data() -= 2.0 * (Gu[0][size_t(i)].data() * Gh[1][size_t(i)].data() -
                                        Gu[1][size_t(i)].data() * Gh[0][size_t(i)].data());
            }
            sf.v_minusfam = slab_view(sheet, s, vm);
            sf.v_plusfam = slab_view(sheet, s, vp);
            sf.src = StripVector(slab_view(sheet, s, src.c1), slab_view(sheet, s, src.c2),
                                 slab_view(sheet, s, src.c3));
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) {
                    StripScalar gm = Gu[size_t(a)][size_t(c)] - Gh[size_t(a)][size_t(c)];
                    StripScalar gp = Gu[size_t(a)][size_t(c)] + Gh[size_t(a)][size_t(c)];
                    sf.grad_vm[size_t(a)][size_t(c)] = slab_view(sheet, s, gm);
                    sf.grad_vp[size_t(a)][size_t(c)] = slab_view(sheet, s, gp);
                }
        }
    }

    // ---- linearized (f, theta) system along frozen coefficients ----
    std::vector<TorusScalar> fbar(n), thbar(n);
    fbar[0] = input[0].iface.f;
    thbar[0] = input[0].iface.theta;
    auto lin_rhs = [&](const TorusScalar& fb, const TorusScalar& thb, size_t k0, size_t k1l,
                       Real w) {
        // interpolate frozen coefficients between samples k0 and k1l
        auto trace = [&](const std::array<TorusScalar, 3>& A, const std::array<TorusScalar, 3>& B,
                         int i) {
            return TorusScalar(g, (1.0 - w) * A[size_t(i)].values() +
                                      w * B[size_t(i)].values());
        };
        const auto& trA = frozen[k0].traces;
        const auto& trB = frozen[k1l].traces;
        TorusScalar up1 = trace(trA.u_plus, trB.u_plus, 0), up2 = trace(trA.u_plus, trB.u_plus, 1);
        TorusScalar um1 = trace(trA.u_minus, trB.u_minus, 0),
                    um2 = trace(trA.u_minus, trB.u_minus, 1);
        TorusScalar hp1 = trace(trA.h_plus, trB.h_plus, 0), hp2 = trace(trA.h_plus, trB.h_plus, 1);
        TorusScalar hm1 = trace(trA.h_minus, trB.h_minus, 0),
                    hm2 = trace(trA.h_minus, trB.h_minus, 1);
        TorusScalar gt(g, (1.0 - w) * frozen[k0].g_term.values() +
                              w * frozen[k1l].g_term.values());

        TorusScalar th1 = deriv(thb, 1), th2 = deriv(thb, 2);
        TorusScalar rhs = -1.0 * (multiply_dealiased(up1 + um1, th1) +
                                  multiply_dealiased(up2 + um2, th2));
        std::array<TorusScalar, 2> up{up1, up2}, um{um1, um2}, hp{hp1, hp2}, hm{hm1, hm2};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                TorusScalar fij = deriv2(fb, i + 1, j + 1);
                TorusScalar coef(g, up[size_t(i)].values() * up[size_t(j)].values() -
                                        hp[size_t(i)].values() * hp[size_t(j)].values() +
                                        um[size_t(i)].values() * um[size_t(j)].values() -
                                        hm[size_t(i)].values() * hm[size_t(j)].values());
                rhs -= 0.5 * multiply_dealiased(coef, fij);
            }
        rhs += gt;
        return dealias(rhs);
    };
    for (size_t k = 0; k + 1 < n; ++k) {
        Real dt = input[k + 1].t - input[k].t;
        // RK4 with linear-in-time coefficient interpolation
        TorusScalar f0 = fbar[k], t0 = thbar[k];
        TorusScalar k1f = t0;
        TorusScalar k1t = lin_rhs(f0, t0, k, k + 1, 0.0);
        TorusScalar f1(g, f0.values() + 0.5 * dt * k1f.values());
        TorusScalar t1(g, t0.values() + 0.5 * dt * k1t.values());
        TorusScalar k2f = t1;
        TorusScalar k2t = lin_rhs(f1, t1, k, k + 1, 0.5);
        TorusScalar f2(g, f0.values() + 0.5 * dt * k2f.values());
        TorusScalar t2(g, t0.values() + 0.5 * dt * k2t.values());
        TorusScalar k3f = t2;
        TorusScalar k3t = lin_rhs(f2, t2, k, k + 1, 0.5);
        TorusScalar f3(g, f0.values() + dt * k3f.values());
        TorusScalar t3(g, t0.values() + dt * k3t.values());
        TorusScalar k4f = t3;
        TorusScalar k4t = lin_rhs(f3, t3, k, k + 1, 1.0);
        fbar[k + 1] = TorusScalar(
            g, f0.values() + dt / 6.0 * (k1f.values() + 2 * k2f.values() + 2 * k3f.values() +
                                         k4f.values()));
        thbar[k + 1] = TorusScalar(
            g, t0.values() + dt / 6.0 * (k1t.values() + 2 * k2t.values() + 2 * k3t.values() +
                                         k4t.values()));
    }

    // ---- characteristic transport of varpi = omega + j and omega - j ----
    struct Fam {
        StripVector vp, vm;  // plus-side and minus-side field of this family
    };
    Fam fam_sum{bulk_cur[0].omega_plus + bulk_cur[0].j_plus,
                bulk_cur[0].omega_minus + bulk_cur[0].j_minus};
    Fam fam_dif{bulk_cur[0].omega_plus - bulk_cur[0].j_plus,
                bulk_cur[0].omega_minus - bulk_cur[0].j_minus};
    std::vector<BulkState> bulk_out(n);
    bulk_out[0] = bulk_cur[0];

    SlabInterp interp{g, *sheets[0]->slab};

    for (size_t k = 0; k + 1 < n; ++k) {
        Real dt = input[k + 1].t - input[k].t;
        for (Side s : {Side::plus, Side::minus}) {
            const auto& frA = frozen[k].side(s);
            const auto& frB = frozen[k + 1].side(s);
            const FlatteningMap& src_map = sheets[k]->geom(s).map;
            const FlatteningMap& tgt_map = sheets[k + 1]->geom(s).map;
            const SheetGeometry& sheetA = *sheets[k];

            for (int fam = 0; fam < 2; ++fam) {
                const StripVector& vel_slab_A = fam == 0 ? frA.v_minusfam : frA.v_plusfam;
                const StripVector& vel_slab_B = fam == 0 ? frB.v_minusfam : frB.v_plusfam;
                const auto& grads_A = fam == 0 ? frA.grad_vm : frA.grad_vp;
                StripVector& field = fam == 0 ? (s == Side::plus ? fam_sum.vp : fam_sum.vm)
                                              : (s == Side::plus ? fam_dif.vp : fam_dif.vm);
                // slab views of the transported family and its sources
                StripVector field_slab = slab_view(sheetA, s, field);
                const StripVector& src_slab = frA.src;

                StripVector out = StripVector::zero(g, tgt_map.zgrid_ptr(), s);
                const Index M = g.nx * g.ny;
                for (Index l = 0; l < tgt_map.zgrid().n; ++l) {
                    parallel_for(M, [&](Index m) {
                        Index i = m % g.nx, j = m / g.nx;
                        Real x1 = g.x1(i), x2 = g.x2(j);
                        Real y = tgt_map.rho.data()(m, l);
                        bool cl = false;
                        // backward RK2 trace along the interpolated velocity
                        auto vel = [&](const StripVector& V, Real a1, Real a2, Real a3) {
                            return Eigen::Vector3d(interp.eval(V.c1, a1, a2, a3, &cl),
                                                   interp.eval(V.c2, a1, a2, a3, &cl),
                                                   interp.eval(V.c3, a1, a2, a3, &cl));
                        };
                        Eigen::Vector3d xB(x1, x2, y);
                        Eigen::Vector3d vB = vel(vel_slab_B, x1, x2, y);
                        Eigen::Vector3d xm = xB - 0.5 * dt * vB;
                        Eigen::Vector3d vm_ = 0.5 * (vel(vel_slab_A, xm(0), xm(1), xm(2)) +
                                                     vel(vel_slab_B, xm(0), xm(1), xm(2)));
                        Eigen::Vector3d xd = xB - dt * vm_;
                        Eigen::Vector3d val = vel(field_slab, xd(0), xd(1), xd(2));
                        // midpoint source: varpi . grad(v) * (-+) + cross source
                        Eigen::Vector3d xM = 0.5 * (xB + xd);
                        Eigen::Matrix3d Gv;
                        for (int a = 0; a < 3; ++a)
                            for (int c = 0; c < 3; ++c)
                                Gv(a, c) = interp.eval(grads_A[size_t(a)][size_t(c)], xM(0),
                                                       xM(1), xM(2), &cl);
                        Eigen::Vector3d srcv = vel(src_slab, xM(0), xM(1), xM(2));
                        if (fam == 1) srcv = -srcv;
                        Eigen::Vector3d rate = Gv.transpose() * val + srcv;
                        Eigen::Vector3d res = val + dt * rate;
                        out.c1.data()(m, l) = res(0);
                        out.c2.data()(m, l) = res(1);
                        out.c3.data()(m, l) = res(2);
                        if (cl) {
                            // should not occur: (u-h).N matches the interface motion
                        }
                    });
                }
                field = std::move(out);
            }
        }
        BulkState bo;
        bo.omega_plus = 0.5 * (fam_sum.vp + fam_dif.vp);
        bo.j_plus = 0.5 * (fam_sum.vp - fam_dif.vp);
        bo.omega_minus = 0.5 * (fam_sum.vm + fam_dif.vm);
        bo.j_minus = 0.5 * (fam_sum.vm - fam_dif.vm);
        bulk_out[k + 1] = std::move(bo);
    }

    // ---- lid averages by trapezoidal integration of the frozen rates ----
    std::vector<Eigen::Vector2d> bp(n), bm(n), gp(n), gm(n);
    bp[0] = input[0].bulk.beta_plus;
    bm[0] = input[0].bulk.beta_minus;
    gp[0] = input[0].bulk.gamma_plus;
    gm[0] = input[0].bulk.gamma_minus;
    for (size_t k = 0; k + 1 < n; ++k) {
        Real dt = input[k + 1].t - input[k].t;
        bp[k + 1] = bp[k] + 0.5 * dt * (frozen[k].rates.beta_plus + frozen[k + 1].rates.beta_plus);
        bm[k + 1] =
            bm[k] + 0.5 * dt * (frozen[k].rates.beta_minus + frozen[k + 1].rates.beta_minus);
        gp[k + 1] =
            gp[k] + 0.5 * dt * (frozen[k].rates.gamma_plus + frozen[k + 1].rates.gamma_plus);
        gm[k + 1] =
            gm[k] + 0.5 * dt * (frozen[k].rates.gamma_minus + frozen[k + 1].rates.gamma_minus);
    }

    // ---- assemble the output trajectory on the reference strips ----
    Trajectory out(n);
    const Real mean_f0 = input[0].iface.f.mean();
    for (size_t k = 0; k < n; ++k) {
        TorusScalar fk(g, fbar[k].values() - fbar[k].mean() + mean_f0);
        out[k].t = input[k].t;
        out[k].iface = InterfaceState(fk, mean_project(thbar[k]), cfg.c0);
        BulkState ref_bulk;
        auto pull_p = pullback_weights(psi_plus[k], sheets[k]->plus.map);
        auto pull_m = pullback_weights(psi_minus[k], sheets[k]->minus.map);
        ref_bulk.omega_plus =
            pull_p.apply(bulk_out[k].omega_plus, g, ref_plus.map.zgrid_ptr(), Side::plus);
        ref_bulk.j_plus = pull_p.apply(bulk_out[k].j_plus, g, ref_plus.map.zgrid_ptr(), Side::plus);
        ref_bulk.omega_minus =
            pull_m.apply(bulk_out[k].omega_minus, g, ref_minus.map.zgrid_ptr(), Side::minus);
        ref_bulk.j_minus =
            pull_m.apply(bulk_out[k].j_minus, g, ref_minus.map.zgrid_ptr(), Side::minus);
        ref_bulk.beta_plus = bp[k];
        ref_bulk.beta_minus = bm[k];
        ref_bulk.gamma_plus = gp[k];
        ref_bulk.gamma_minus = gm[k];
        out[k].bulk = std::move(ref_bulk);
    }
    if (report) report->clamped_characteristics = clamped;
    return out;
}

// ---------------------------------------------------------------------------

MomentumResiduals residual_momentum(const InterfaceState& if_prev, const FluidSnapshot& prev,
                                    const InterfaceState& if_mid, const FluidSnapshot& mid,
                                    const BulkState& bulk_mid, const InterfaceState& if_next,
                                    const FluidSnapshot& next, Real dt,
                                    const SheetGeometry& sheet_mid, const DynamicsConfig& cfg,
                                    bool ablate_quadratic_pressure) {
    const TorusGrid& g = sheet_mid.grid();
    const auto& tr = mid.traces;
    TorusScalar th1 = deriv(if_mid.theta, 1), th2 = deriv(if_mid.theta, 2);

    // interface pressure trace: p_bar = Ntilde^{-1} P(g+ - g-)
    TorusScalar Tp = normal_gradient_trace(sheet_mid.plus.map, mid.p_uu_plus - mid.p_hh_plus);
    TorusScalar Tm = normal_gradient_trace(sheet_mid.minus.map, mid.p_uu_minus - mid.p_hh_minus);
    auto g_side = [&](const std::array<TorusScalar, 3>& u, const std::array<TorusScalar, 3>& h,
                      const TorusScalar& T) {
        TorusScalar s = 2.0 * (multiply_dealiased(u[0], th1) + multiply_dealiased(u[1], th2));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                TorusScalar fij = deriv2(if_mid.f, i + 1, j + 1);
                TorusScalar coef(g, u[size_t(i)].values() * u[size_t(j)].values() -
                                        h[size_t(i)].values() * h[size_t(j)].values());
                s += multiply_dealiased(coef, fij);
            }
        return s + T;
    };
    TorusScalar gplus = g_side(tr.u_plus, tr.h_plus, Tp);
    TorusScalar gminus = g_side(tr.u_minus, tr.h_minus, Tm);
    DnoConfig dn = cfg.dno;
    dn.elliptic = cfg.elliptic;
    TorusScalar p_bar =
        dn_inverse_geom(sheet_mid.plus, sheet_mid.minus, mean_project(gplus - gminus), dn);

    MomentumResiduals res;
    for (Side s : {Side::plus, Side::minus}) {
        const SideGeometry& geo = sheet_mid.geom(s);
        const FlatteningMap& map = geo.map;
        const StripVector& u_m = mid.u(s);
        const StripVector& h_m = mid.h(s);
        const StripVector& u_p = (s == Side::plus) ? prev.u_plus : prev.u_minus;
        const StripVector& u_n = (s == Side::plus) ? next.u_plus : next.u_minus;
        const StripVector& h_p = (s == Side::plus) ? prev.h_plus : prev.h_minus;
        const StripVector& h_n = (s == Side::plus) ? next.h_plus : next.h_minus;

        StripScalar p_full = harmonic_extension(geo, p_bar, cfg.elliptic);
        if (!ablate_quadratic_pressure) {
            const StripScalar& puu = (s == Side::plus) ? mid.p_uu_plus : mid.p_uu_minus;
            const StripScalar& phh = (s == Side::plus) ? mid.p_hh_plus : mid.p_hh_minus;
            p_full += puu - phh;
        }
        auto grad_p = physical_gradient(map, p_full);

        StripScalar dt_rho = map.time_derivative(if_mid.theta);
        auto time_deriv = [&](const StripVector& a_prev, const StripVector& a_mid,
                              const StripVector& a_next) {
            StripVector d = StripVector::zero(g, map.zgrid_ptr(), s);
            for (int c = 1; c <= 3; ++c) {
                StripScalar dz_mid = strip_dz(a_mid.comp(c));
                d.comp(c).data() = (a_next.comp(c).data() - a_prev.comp(c).data()) / (2.0 * dt) -
                                   dt_rho.data() * dz_mid.data() / map.dz_rho.data();
            }
            return d;
        };
        StripVector du = time_deriv(u_p, u_m, u_n);
        StripVector dh = time_deriv(h_p, h_m, h_n);

        std::array<std::array<StripScalar, 3>, 3> Gu, Gh;
        for (int c = 1; c <= 3; ++c) {
            auto gu = physical_gradient(map, u_m.comp(c));
            auto gh = physical_gradient(map, h_m.comp(c));
            for (int kk = 0; kk < 3; ++kk) {
                Gu[size_t(kk)][size_t(c - 1)] = std::move(gu[size_t(kk)]);
                Gh[size_t(kk)][size_t(c - 1)] = std::move(gh[size_t(kk)]);
            }
        }
        StripVector w = StripVector::zero(g, map.zgrid_ptr(), s);
        StripVector Hres = w;
        for (int c = 1; c <= 3; ++c) {
            w.comp(c).data() = du.comp(c).data() +
                               u_m.c1.data() * Gu[0][size_t(c - 1)].data() +
                               u_m.c2.data() * Gu[1][size_t(c - 1)].data() +
                               u_m.c3.data() * Gu[2][size_t(c - 1)].data() -
                               h_m.c1.data() * Gh[0][size_t(c - 1)].data() -
                               h_m.c2.data() * Gh[1][size_t(c - 1)].data() -
                               h_m.c3.data() * Gh[2][size_t(c - 1)].data() +
                               grad_p[size_t(c - 1)].data();
            Hres.comp(c).data() = dh.comp(c).data() -
                                  h_m.c1.data() * Gu[0][size_t(c - 1)].data() -
                                  h_m.c2.data() * Gu[1][size_t(c - 1)].data() -
                                  h_m.c3.data() * Gu[2][size_t(c - 1)].data() +
                                  u_m.c1.data() * Gh[0][size_t(c - 1)].data() +
                                  u_m.c2.data() * Gh[1][size_t(c - 1)].data() +
                                  u_m.c3.data() * Gh[2][size_t(c - 1)].data();
        }
        Real wn = strip_l2_norm(w), Hn = strip_l2_norm(Hres);
        StripScalar divo = physical_divergence(map, bulk_mid.omega(s));
        StripScalar divj = physical_divergence(map, bulk_mid.j(s));
        if (s == Side::plus) {
            res.w_plus = wn;
            res.H_plus = Hn;
        } else {
            res.w_minus = wn;
            res.H_minus = Hn;
        }
        res.div_omega = std::max(res.div_omega, strip_l2_norm(divo));
        res.div_j = std::max(res.div_j, strip_l2_norm(divj));
    }
    (void)if_prev;
    (void)if_next;
    return res;
}

}  // namespace cvs
