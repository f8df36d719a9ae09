// SPDX-License-Identifier: Apache-2.0

#include "cvs/elliptic.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace cvs {

BoundaryCondition BoundaryCondition::dirichlet_top(const TorusScalar& g,
                                                   const TorusScalar& lid) {
    BoundaryCondition bc;
    bc.top_kind = Kind::dirichlet;
    bc.bottom_kind = Kind::neumann;
    bc.top = g;
    bc.bottom = lid;
    return bc;
}

BoundaryCondition BoundaryCondition::neumann_top(const TorusScalar& g,
                                                 const TorusScalar& lid) {
    BoundaryCondition bc;
    bc.top_kind = Kind::neumann;
    bc.bottom_kind = Kind::neumann;
    bc.top = g;
    bc.bottom = lid;
    return bc;
}

BoundaryCondition BoundaryCondition::dirichlet_both(const TorusScalar& g,
                                                    const TorusScalar& bot) {
    BoundaryCondition bc;
    bc.top_kind = Kind::dirichlet;
    bc.bottom_kind = Kind::dirichlet;
    bc.top = g;
    bc.bottom = bot;
    return bc;
}

SideGeometry::SideGeometry(const Surface& s, Side side, Index nz) : surface(s) {
    map = build_flattening(s, side, nz);
    coeffs = flatten_coefficients(map);
}

namespace {

using LU = Eigen::PartialPivLU<Mat>;

// Per-mode direct solver for the flat-coefficient operator dz^2 - |k|^2 with
// the requested boundary rows. Mode (0,0) of a pure-Neumann pattern is
// factored in bordered form (interior indicator column + mean row) so the
// constant kernel is pinned.
struct FlatSolver {
    Index nz = 0;
    Real sign = 1.0;  // side sign entering the flat interface-Neumann row
    BoundaryCondition::Kind top_kind, bottom_kind;
    bool bordered = false;
    std::map<long, LU> by_k2;  // |k|^2 -> LU of the collocation matrix
    LU mode0_bordered;
    std::mutex factor_mtx;  // factor() runs from parallel mode loops

    const LU& factor(const ChebGrid& zg, long k2) {
        std::lock_guard<std::mutex> lock(factor_mtx);
        auto it = by_k2.find(k2);
        if (it != by_k2.end()) return it->second;
        Mat A = zg.D2 - Real(k2) * Mat::Identity(nz, nz);
        A.row(zg.top()) = (top_kind == BoundaryCondition::Kind::dirichlet)
                              ? Mat::Identity(nz, nz).row(zg.top())
                              : (sign * zg.D.row(zg.top())).eval();
        A.row(zg.bottom()) = (bottom_kind == BoundaryCondition::Kind::dirichlet)
                                 ? Mat::Identity(nz, nz).row(zg.bottom())
                                 : zg.D.row(zg.bottom()).eval();
        return by_k2.emplace(k2, LU(A)).first->second;
    }

    void build_bordered(const ChebGrid& zg) {
        Mat A = Mat::Zero(nz + 1, nz + 1);
        Mat core = zg.D2;
        core.row(zg.top()) = sign * zg.D.row(zg.top());
        core.row(zg.bottom()) = zg.D.row(zg.bottom());
        A.topLeftCorner(nz, nz) = core;
        for (Index r = 0; r < nz; ++r)
            if (r != zg.top() && r != zg.bottom()) A(r, nz) = 1.0;
        A.row(nz).head(nz).setConstant(1.0 / Real(nz));
        mode0_bordered = LU(A);
    }
};

struct FlatKey {
    Index nz;
    int top, bottom;
    int side_sign;
    bool operator==(const FlatKey& o) const {
        return nz == o.nz && top == o.top && bottom == o.bottom && side_sign == o.side_sign;
    }
};

struct FlatKeyHash {
    size_t operator()(const FlatKey& k) const {
        return std::hash<long>()(k.nz * 1000003 + k.top * 101 + k.bottom * 11 +
                                 (k.side_sign > 0 ? 1 : 0));
    }
};

std::shared_ptr<FlatSolver> flat_solver_for(const ChebGrid& zg, Side side,
                                            const BoundaryCondition& bc) {
    static std::unordered_map<FlatKey, std::shared_ptr<FlatSolver>, FlatKeyHash> cache;
    static std::mutex mtx;
    FlatKey key{zg.n, int(bc.top_kind), int(bc.bottom_kind), side == Side::minus ? 1 : -1};
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto fs = std::make_shared<FlatSolver>();
    fs->nz = zg.n;
    fs->sign = side == Side::minus ? 1.0 : -1.0;
    fs->top_kind = bc.top_kind;
    fs->bottom_kind = bc.bottom_kind;
    fs->bordered = bc.pure_neumann();
    if (fs->bordered) fs->build_bordered(zg);
    cache.emplace(key, fs);
    return fs;
}

// Spectral representation of a strip: per-mode complex z-profiles.
// Layout (nx*ny complex rows, nz columns), row index a + nx*b.
using SpectralStrip = Eigen::ArrayXXcd;

SpectralStrip to_spectral(const StripScalar& s) {
    const TorusGrid& g = s.grid();
    SpectralStrip out(g.nx * g.ny, s.nz());
    for (Index k = 0; k < s.nz(); ++k) {
        CArray2 c = fft2_forward(g, s.level(k));
        out.col(k) = Eigen::Map<const Eigen::ArrayXcd>(c.data(), g.nx * g.ny);
    }
    return out;
}

StripScalar from_spectral(const TorusGrid& g, std::shared_ptr<const ChebGrid> zg, Side side,
                          const SpectralStrip& sp) {
    StripScalar out = StripScalar::zero(g, zg, side);
    for (Index k = 0; k < sp.cols(); ++k) {
        CArray2 c = Eigen::Map<const CArray2>(sp.col(k).data(), g.nx, g.ny);
        out.set_level(k, fft2_inverse_real(g, c));
    }
    return out;
}

// Flat preconditioner application: per-mode two-point solves of the vector
// (grid rows + optional border scalar).
struct FlatApply {
    const TorusGrid& g;
    const ChebGrid& zg;
    std::shared_ptr<FlatSolver> fs;

    // x and out are packed grid vectors of length nx*ny*nz (+1 if bordered).
    void solve(const Vec& b, Vec& x) const {
        const Index M = g.nx * g.ny, nz = zg.n;
        StripScalar tmp(g, std::shared_ptr<const ChebGrid>(&zg, [](const ChebGrid*) {}),
                        Side::minus, Eigen::Map<const Eigen::ArrayXXd>(b.data(), M, nz));
        SpectralStrip bs = to_spectral(tmp);
        SpectralStrip xs(M, nz);
        const Real lambda_in = fs->bordered ? b(M * nz) : 0.0;
        Real lambda_out = 0.0;
        std::vector<std::pair<Index, Index>> modes;
        modes.reserve(M);
        for (Index a = 0; a < g.nx; ++a)
            for (Index bb = 0; bb < g.ny; ++bb) modes.emplace_back(a, bb);
        std::mutex lmtx;
        parallel_for(Index(modes.size()), [&](Index mi) {
            auto [a, bb] = modes[mi];
            const Index row = a + g.nx * bb;
            long k1 = g.k1(a), k2 = g.k2(bb);
            long kk = k1 * k1 + k2 * k2;
            Eigen::VectorXcd rhs = bs.row(row).transpose().matrix();
            if (fs->bordered && kk == 0) {
                Eigen::VectorXd rr(nz + 1), ri(nz + 1);
                rr.head(nz) = rhs.real();
                ri.head(nz) = rhs.imag();
                rr(nz) = lambda_in;
                ri(nz) = 0.0;
                Eigen::VectorXd sr = fs->mode0_bordered.solve(rr);
                Eigen::VectorXd si = fs->mode0_bordered.solve(ri);
                for (Index k = 0; k < nz; ++k) xs(row, k) = Complex(sr(k), si(k));
                std::lock_guard<std::mutex> lk(lmtx);
                lambda_out = sr(nz);
            } else {
                const LU& lu = const_cast<FlatSolver&>(*fs).factor(zg, kk);
                Eigen::VectorXd sr = lu.solve(rhs.real());
                Eigen::VectorXd si = lu.solve(rhs.imag());
                for (Index k = 0; k < nz; ++k) xs(row, k) = Complex(sr(k), si(k));
            }
        });
        // Synthesize back to grid space level by level.
        x.resize(b.size());
        for (Index k = 0; k < nz; ++k) {
            CArray2 c = Eigen::Map<const CArray2>(xs.col(k).data(), g.nx, g.ny);
            Array2 lvl = fft2_inverse_real(g, c);
            x.segment(k * M, M) = Eigen::Map<const Vec>(lvl.data(), M);
        }
        if (fs->bordered) x(M * nz) = lambda_out;
    }
};

// The wavy collocation operator with boundary rows substituted in.
struct WavyOperator {
    const SideGeometry& geom;
    const BoundaryCondition& bc;
    bool bordered;

    const TorusGrid& grid() const { return geom.map.grid(); }
    const ChebGrid& zgrid() const { return geom.map.zgrid(); }
    Index size() const {
        return grid().nx * grid().ny * zgrid().n + (bordered ? 1 : 0);
    }

    void apply(const Vec& xv, Vec& out) const {
        const TorusGrid& g = grid();
        const ChebGrid& zg = zgrid();
        const Index M = g.nx * g.ny, nz = zg.n;
        Eigen::Map<const Eigen::ArrayXXd> X(xv.data(), M, nz);

        Eigen::ArrayXXd dz = (X.matrix() * zg.D.transpose()).array();
        Eigen::ArrayXXd res(M, nz);
        // interior rows: D2 X + alpha Lap X + beta . grad dz X - gamma dz X
        res = (X.matrix() * zg.D2.transpose()).array();
        for (Index k = 0; k < nz; ++k) {
            CArray2 xh = fft2_forward(g, Eigen::Map<const Array2>(X.col(k).data(), g.nx, g.ny));
            CArray2 dzh = fft2_forward(g, Eigen::Map<const Array2>(dz.col(k).data(), g.nx, g.ny));
            CArray2 lap = xh, d1z = dzh, d2z = dzh;
            for (Index a = 0; a < g.nx; ++a)
                for (Index b = 0; b < g.ny; ++b) {
                    Real k1 = g.k1(a), k2 = g.k2(b);
                    lap(a, b) *= -(k1 * k1 + k2 * k2);
                    d1z(a, b) *= Complex(0, k1);
                    d2z(a, b) *= Complex(0, k2);
                }
            Eigen::Map<const Vec> alpha(geom.coeffs.alpha.data().col(k).data(), M);
            Eigen::Map<const Vec> beta1(geom.coeffs.beta1.data().col(k).data(), M);
            Eigen::Map<const Vec> beta2(geom.coeffs.beta2.data().col(k).data(), M);
            Eigen::Map<const Vec> gamma(geom.coeffs.gamma.data().col(k).data(), M);
            Array2 lap_g = fft2_inverse_real(g, lap);
            Array2 d1z_g = fft2_inverse_real(g, d1z);
            Array2 d2z_g = fft2_inverse_real(g, d2z);
            res.col(k) += alpha.array() * Eigen::Map<const Vec>(lap_g.data(), M).array() +
                          beta1.array() * Eigen::Map<const Vec>(d1z_g.data(), M).array() +
                          beta2.array() * Eigen::Map<const Vec>(d2z_g.data(), M).array() -
                          gamma.array() * dz.col(k);
        }
        if (bordered) {
            const Real lam = xv(M * nz);
            for (Index k = 1; k + 1 < nz; ++k) res.col(k) += lam;
        }
        // boundary rows
        const Index kt = zg.top(), kb = zg.bottom();
        if (bc.top_kind == BoundaryCondition::Kind::dirichlet) {
            res.col(kt) = X.col(kt);
        } else {
            // N_f . grad Phi trace at z=0
            Eigen::Map<const Vec> f1(geom.map.grad_rho_1.data().col(kt).data(), M);
            Eigen::Map<const Vec> f2(geom.map.grad_rho_2.data().col(kt).data(), M);
            Eigen::Map<const Vec> J0(geom.map.dz_rho.data().col(kt).data(), M);
            CArray2 xh = fft2_forward(g, Eigen::Map<const Array2>(X.col(kt).data(), g.nx, g.ny));
            CArray2 d1 = xh, d2 = xh;
            for (Index a = 0; a < g.nx; ++a)
                for (Index b = 0; b < g.ny; ++b) {
                    d1(a, b) *= Complex(0, Real(g.k1(a)));
                    d2(a, b) *= Complex(0, Real(g.k2(b)));
                }
            Array2 d1g = fft2_inverse_real(g, d1), d2g = fft2_inverse_real(g, d2);
            res.col(kt) = -f1.array() * Eigen::Map<const Vec>(d1g.data(), M).array() -
                          f2.array() * Eigen::Map<const Vec>(d2g.data(), M).array() +
                          (1.0 + f1.array().square() + f2.array().square()) / J0.array() *
                              dz.col(kt);
        }
        if (bc.bottom_kind == BoundaryCondition::Kind::dirichlet)
            res.col(kb) = X.col(kb);
        else
            res.col(kb) = dz.col(kb);

        out.resize(xv.size());
        Eigen::Map<Eigen::ArrayXXd>(out.data(), M, nz) = res;
        if (bordered) {
            out(M * nz) = X.mean();
        }
    }

    Vec assemble_rhs(const StripScalar& F) const {
        const TorusGrid& g = grid();
        const ChebGrid& zg = zgrid();
        const Index M = g.nx * g.ny, nz = zg.n;
        Vec b(size());
        Eigen::Map<Eigen::ArrayXXd> B(b.data(), M, nz);
        B = F.data();
        const Index kt = zg.top(), kb = zg.bottom();
        B.col(kt) = Eigen::Map<const Vec>(bc.top.values().data(), M).array();
        if (bc.bottom_kind == BoundaryCondition::Kind::dirichlet) {
            B.col(kb) = Eigen::Map<const Vec>(bc.bottom.values().data(), M).array();
        } else {
            // physical d3 Phi = nu  <=>  dz Psi = J_bot * nu
            Eigen::Map<const Vec> Jb(geom.map.dz_rho.data().col(kb).data(), M);
            B.col(kb) = Jb.array() * Eigen::Map<const Vec>(bc.bottom.values().data(), M).array();
        }
        if (bordered) b(M * nz) = 0.0;
        return b;
    }
};

// Right-preconditioned restarted GMRES. Returns total inner iterations.
int gmres(const WavyOperator& A, const FlatApply& P, const Vec& b, Vec& x, Real tol,
          int max_iter, int restart, Real* final_res, std::vector<Real>* history) {
    const Real bnorm = std::max(b.norm(), 1e-300);
    Vec r(b.size()), Ax(b.size());
    int total = 0;
    P.solve(b, x);  // initial guess: flat solve
    for (;;) {
        A.apply(x, Ax);
        r = b - Ax;
        Real beta = r.norm();
        if (history) history->push_back(beta / bnorm);
        if (beta / bnorm <= tol) {
            *final_res = beta / bnorm;
            return total;
        }
        if (total >= max_iter) {
            *final_res = beta / bnorm;
            std::ostringstream os;
            os << "elliptic solve: no convergence after " << total
               << " iterations, residual " << beta / bnorm;
            throw ConvergenceError(history ? *history : std::vector<Real>{beta / bnorm},
                                   os.str());
        }
        const int m = restart;
        std::vector<Vec> V;
        V.reserve(m + 1);
        V.push_back(r / beta);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Vec cs = Vec::Zero(m), sn = Vec::Zero(m);
        Vec gvec = Vec::Zero(m + 1);
        gvec(0) = beta;
        int j = 0;
        Vec w(b.size()), pz(b.size());
        for (; j < m && total < max_iter; ++j, ++total) {
            P.solve(V[j], pz);
            A.apply(pz, w);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = w.dot(V[i]);
                w -= H(i, j) * V[i];
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 1e-300) V.push_back(w / H(j + 1, j));
            else V.push_back(w);
            for (int i = 0; i < j; ++i) {
                Real t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
                H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
                H(i, j) = t;
            }
            Real denom = std::hypot(H(j, j), H(j + 1, j));
            cs(j) = H(j, j) / denom;
            sn(j) = H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            gvec(j + 1) = -sn(j) * gvec(j);
            gvec(j) = cs(j) * gvec(j);
            Real est = std::abs(gvec(j + 1)) / bnorm;
            if (history) history->push_back(est);
            if (est <= 0.5 * tol) {
                ++j;
                ++total;
                break;
            }
        }
        Vec y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(gvec.head(j));
        Vec update = Vec::Zero(b.size());
        for (int i = 0; i < j; ++i) update += y(i) * V[i];
        P.solve(update, pz);
        x += pz;
    }
}

}  // namespace

EllipticSolution solve_flattened_laplace(const SideGeometry& geom, const StripScalar& rhs,
                                         const BoundaryCondition& bc,
                                         const EllipticConfig& cfg) {
    const TorusGrid& g = geom.map.grid();
    const ChebGrid& zg = geom.map.zgrid();
    auto fs = flat_solver_for(zg, geom.side(), bc);
    WavyOperator A{geom, bc, fs->bordered};
    FlatApply P{g, zg, fs};
    Vec b = A.assemble_rhs(rhs);

    EllipticSolution sol;
    const Index M = g.nx * g.ny;
    if (geom.coeffs.flat) {
        Vec x;
        P.solve(b, x);
        Vec Ax;
        A.apply(x, Ax);
        sol.residual_norm = (b - Ax).norm() / std::max(b.norm(), 1e-300);
        sol.iterations = 0;
        sol.compat_defect = fs->bordered ? x(M * zg.n) : 0.0;
        sol.psi = StripScalar(g, geom.map.zgrid_ptr(), geom.side(),
                              Eigen::Map<const Eigen::ArrayXXd>(x.data(), M, zg.n));
        return sol;
    }
    Vec x;
    std::vector<Real> history;
    Real final_res = 0.0;
    int iters = gmres(A, P, b, x, cfg.tol, cfg.max_iter, cfg.restart, &final_res, &history);
    sol.residual_norm = final_res;
    sol.iterations = iters;
    sol.compat_defect = fs->bordered ? x(M * zg.n) : 0.0;
    sol.psi = StripScalar(g, geom.map.zgrid_ptr(), geom.side(),
                          Eigen::Map<const Eigen::ArrayXXd>(x.data(), M, zg.n));
    return sol;
}

Real flattened_residual(const SideGeometry& geom, const StripScalar& psi,
                        const StripScalar& rhs, const BoundaryCondition& bc) {
    auto fs = flat_solver_for(geom.map.zgrid(), geom.side(), bc);
    WavyOperator A{geom, bc, fs->bordered};
    Vec b = A.assemble_rhs(rhs);
    Vec x(A.size());
    const Index M = geom.map.grid().nx * geom.map.grid().ny;
    Eigen::Map<Eigen::ArrayXXd>(x.data(), M, geom.map.zgrid().n) = psi.data();
    if (fs->bordered) x(M * geom.map.zgrid().n) = 0.0;
    Vec Ax;
    A.apply(x, Ax);
    return (b - Ax).norm() / std::max(b.norm(), 1e-300);
}

StripScalar harmonic_extension(const SideGeometry& geom, const TorusScalar& psi,
                               const EllipticConfig& cfg) {
    const TorusGrid& g = geom.map.grid();
    StripScalar zero_rhs = StripScalar::zero(g, geom.map.zgrid_ptr(), geom.side());
    auto bc = BoundaryCondition::dirichlet_top(psi, TorusScalar::zero(g));
    return solve_flattened_laplace(geom, zero_rhs, bc, cfg).psi;
}

StripScalar quadratic_pressure(const SideGeometry& geom, const StripVector& u1,
                               const StripVector& u2, const EllipticConfig& cfg) {
    const TorusGrid& g = geom.map.grid();
    // -tr(grad u1 grad u2) = -sum_ij d_i u1_j d_j u2_i (physical derivatives)
    std::array<std::array<StripScalar, 3>, 3> G1, G2;
    for (int j = 1; j <= 3; ++j) {
        auto c1 = physical_gradient(geom.map, u1.comp(j));
        auto c2 = physical_gradient(geom.map, u2.comp(j));
        for (int i = 0; i < 3; ++i) {
            G1[i][j - 1] = std::move(c1[i]);
            G2[i][j - 1] = std::move(c2[i]);
        }
    }
    StripScalar rhs_phys = StripScalar::zero(g, geom.map.zgrid_ptr(), geom.side());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            rhs_phys.data() -= (G1[i][j].data() * G2[j][i].data());
    rhs_phys = strip_dealias(rhs_phys);
    StripScalar F = rhs_phys;
    F.data() *= geom.coeffs.alpha.data();
    auto bc = BoundaryCondition::dirichlet_top(TorusScalar::zero(g), TorusScalar::zero(g));
    return solve_flattened_laplace(geom, F, bc, cfg).psi;
}

StripVector div_free_projection(const SideGeometry& geom, const StripVector& w,
                                const EllipticConfig& cfg) {
    const TorusGrid& g = geom.map.grid();
    StripScalar divw = physical_divergence(geom.map, w);
    StripScalar F = divw;
    F.data() *= geom.coeffs.alpha.data();
    auto bc = BoundaryCondition::dirichlet_top(TorusScalar::zero(g), TorusScalar::zero(g));
    StripScalar phi = solve_flattened_laplace(geom, F, bc, cfg).psi;
    auto grad = physical_gradient(geom.map, phi);
    return StripVector(w.c1 - grad[0], w.c2 - grad[1], w.c3 - grad[2]);
}

StripVector harmonic_coordinates(const Surface& surface, Side side, const Surface& f_star,
                                 Index nz, Real tol) {
    SideGeometry geom(f_star, side, nz);
    const TorusGrid& g = surface.grid();
    // First two components extend the identity; only x3 needs a solve.
    StripScalar c1 = StripScalar::zero(g, geom.map.zgrid_ptr(), side);
    StripScalar c2 = c1;
    for (Index k = 0; k < nz; ++k) {
        Array2 q1(g.nx, g.ny), q2(g.nx, g.ny);
        for (Index i = 0; i < g.nx; ++i)
            for (Index j = 0; j < g.ny; ++j) {
                q1(i, j) = g.x1(i);
                q2(i, j) = g.x2(j);
            }
        c1.set_level(k, q1);
        c2.set_level(k, q2);
    }
    Real lid = side == Side::minus ? -1.0 : 1.0;
    EllipticConfig cfg;
    cfg.tol = tol;
    auto bc = BoundaryCondition::dirichlet_both(surface.f(), TorusScalar::constant(g, lid));
    StripScalar zero_rhs = StripScalar::zero(g, geom.map.zgrid_ptr(), side);
    StripScalar c3 = solve_flattened_laplace(geom, zero_rhs, bc, cfg).psi;
    return StripVector(std::move(c1), std::move(c2), std::move(c3));
}

}  // namespace cvs
