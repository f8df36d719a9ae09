// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_FIELDS_HPP
#define CVS_FIELDS_HPP

#include <memory>

#include "cvs/fourier.hpp"
#include "cvs/grid.hpp"

namespace cvs {

// Exponent of a discrete H^s norm, multiplier (1+|k|^2)^{s/2}.
struct SobolevIndex {
    Real s = 0.0;
    SobolevIndex() = default;
    explicit SobolevIndex(Real s_) : s(s_) {
        if (s < 0.0) throw DomainError("SobolevIndex: s must be >= 0");
    }
};

// Real scalar field on the 2-torus grid with a lazily cached half...full
// spectrum. Values are the ground truth; the cache is rebuilt on demand.
class TorusScalar {
   public:
    TorusScalar() = default;
    TorusScalar(const TorusGrid& grid, Array2 values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.rows() != grid_.nx || values_.cols() != grid_.ny)
            throw DomainError("TorusScalar: value shape mismatch");
    }
    static TorusScalar zero(const TorusGrid& grid) {
        return TorusScalar(grid, Array2::Zero(grid.nx, grid.ny));
    }
    static TorusScalar constant(const TorusGrid& grid, Real c) {
        return TorusScalar(grid, Array2::Constant(grid.nx, grid.ny, c));
    }
    // Builds grid values by synthesis; the imaginary residue of the input
    // coefficients is discarded (callers keep conjugate symmetry).
    static TorusScalar from_spectral(const TorusGrid& grid, const CArray2& coeffs);

    const TorusGrid& grid() const { return grid_; }
    const Array2& values() const { return values_; }
    const CArray2& spectral() const;

    Real mean() const { return values_.mean(); }
    Real max_abs() const { return values_.size() ? values_.abs().maxCoeff() : 0.0; }

    TorusScalar& operator+=(const TorusScalar& o) { values_ += o.values_; dirty(); return *this; }
    TorusScalar& operator-=(const TorusScalar& o) { values_ -= o.values_; dirty(); return *this; }
    TorusScalar& operator*=(Real c) { values_ *= c; dirty(); return *this; }

   private:
    void dirty() { have_spectral_ = false; }
    TorusGrid grid_;
    Array2 values_;
    mutable CArray2 spectral_;
    mutable bool have_spectral_ = false;
};

TorusScalar operator+(const TorusScalar& a, const TorusScalar& b);
TorusScalar operator-(const TorusScalar& a, const TorusScalar& b);
TorusScalar operator*(Real c, const TorusScalar& a);
// Pointwise product without dealiasing; see multiply_dealiased.
TorusScalar operator*(const TorusScalar& a, const TorusScalar& b);

// Mode-wise application of a symbol m(k1,k2). Rejects non-finite symbol
// values with a diagnostic naming the offending mode.
TorusScalar fourier_multiplier(const TorusScalar& g,
                               const std::function<Complex(Real, Real)>& m);

// 2 pi * sqrt(sum (1+|k|^2)^s |ghat|^2); s = 0 reproduces the grid L2 norm.
Real sobolev_norm(const TorusScalar& g, SobolevIndex s);
Real grid_l2_norm(const TorusScalar& g);

TorusScalar mean_project(const TorusScalar& g);
TorusScalar dealias(const TorusScalar& g);
TorusScalar multiply_dealiased(const TorusScalar& a, const TorusScalar& b);

// Spectral partial derivative, dim in {1,2}.
TorusScalar deriv(const TorusScalar& g, int dim);
TorusScalar deriv2(const TorusScalar& g, int dim_i, int dim_j);

// Random band-limited zero-mean field (deterministic in seed); |k|_inf <= kmax.
TorusScalar random_band_limited(const TorusGrid& grid, int kmax, unsigned seed,
                                Real amplitude = 1.0);

inline Real imag_residue(const TorusScalar& g) {
    return fft2_imag_residue(g.grid(), g.spectral());
}

// -------------------------------------------------------------------------
// Strip fields: Fourier in x, CGL collocation in z on [-1,0] (or a slab
// [-1,1] for the curl solve). Data layout (nx*ny, nz), column k = level z_k.
// -------------------------------------------------------------------------

class StripScalar {
   public:
    StripScalar() = default;
    StripScalar(const TorusGrid& grid, std::shared_ptr<const ChebGrid> zgrid,
                Side side, Eigen::ArrayXXd data)
        : grid_(grid), zgrid_(std::move(zgrid)), side_(side), data_(std::move(data)) {
        if (data_.rows() != grid_.nx * grid_.ny || data_.cols() != zgrid_->n)
            throw DomainError("StripScalar: data shape mismatch");
    }
    static StripScalar zero(const TorusGrid& grid, std::shared_ptr<const ChebGrid> zg,
                            Side side) {
        Eigen::ArrayXXd d = Eigen::ArrayXXd::Zero(grid.nx * grid.ny, zg->n);
        return StripScalar(grid, std::move(zg), side, std::move(d));
    }
    static StripScalar constant(const TorusGrid& grid, std::shared_ptr<const ChebGrid> zg,
                                Side side, Real c) {
        Eigen::ArrayXXd d = Eigen::ArrayXXd::Constant(grid.nx * grid.ny, zg->n, c);
        return StripScalar(grid, std::move(zg), side, std::move(d));
    }

    const TorusGrid& grid() const { return grid_; }
    const ChebGrid& zgrid() const { return *zgrid_; }
    const std::shared_ptr<const ChebGrid>& zgrid_ptr() const { return zgrid_; }
    Side side() const { return side_; }
    Index nz() const { return zgrid_->n; }

    const Eigen::ArrayXXd& data() const { return data_; }
    Eigen::ArrayXXd& data() { return data_; }

    Eigen::Map<const Array2> level(Index k) const {
        return Eigen::Map<const Array2>(data_.col(k).data(), grid_.nx, grid_.ny);
    }
    void set_level(Index k, const Array2& v) {
        Eigen::Map<Array2>(data_.col(k).data(), grid_.nx, grid_.ny) = v;
    }
    TorusScalar level_scalar(Index k) const { return TorusScalar(grid_, level(k)); }

    TorusScalar top_trace() const { return level_scalar(zgrid_->top()); }
    TorusScalar bottom_trace() const { return level_scalar(zgrid_->bottom()); }

    Real max_abs() const { return data_.size() ? data_.abs().maxCoeff() : 0.0; }

    bool congruent(const StripScalar& o) const {
        return grid_ == o.grid_ && zgrid_->n == o.zgrid_->n && zgrid_->a == o.zgrid_->a &&
               side_ == o.side_;
    }

    StripScalar& operator+=(const StripScalar& o) { data_ += o.data_; return *this; }
    StripScalar& operator-=(const StripScalar& o) { data_ -= o.data_; return *this; }
    StripScalar& operator*=(Real c) { data_ *= c; return *this; }

   private:
    TorusGrid grid_;
    std::shared_ptr<const ChebGrid> zgrid_;
    Side side_ = Side::minus;
    Eigen::ArrayXXd data_;
};

StripScalar operator+(const StripScalar& a, const StripScalar& b);
StripScalar operator-(const StripScalar& a, const StripScalar& b);
StripScalar operator*(Real c, const StripScalar& a);
StripScalar operator*(const StripScalar& a, const StripScalar& b);

// Spectral x-derivative per level (dim in {1,2}); collocation z-derivative.
StripScalar strip_dx(const StripScalar& s, int dim);
StripScalar strip_dz(const StripScalar& s);
StripScalar strip_dealias(const StripScalar& s);
StripScalar strip_multiply_dealiased(const StripScalar& a, const StripScalar& b);

// Evaluate each horizontal column's z-profile at zq (barycentric).
TorusScalar strip_eval_z(const StripScalar& s, Real zq);

// L2 norm with unit weight on the reference strip (quadrature in z).
Real strip_l2_norm(const StripScalar& s);
Real strip_mean(const StripScalar& s);

struct StripVector {
    StripScalar c1, c2, c3;

    StripVector() = default;
    StripVector(StripScalar a, StripScalar b, StripScalar c)
        : c1(std::move(a)), c2(std::move(b)), c3(std::move(c)) {
        if (!c1.congruent(c2) || !c1.congruent(c3))
            throw DomainError("StripVector: component grids differ");
    }
    static StripVector zero(const TorusGrid& g, std::shared_ptr<const ChebGrid> zg, Side side) {
        return StripVector(StripScalar::zero(g, zg, side), StripScalar::zero(g, zg, side),
                           StripScalar::zero(g, zg, side));
    }

    const StripScalar& comp(int i) const { return i == 1 ? c1 : (i == 2 ? c2 : c3); }
    StripScalar& comp(int i) { return i == 1 ? c1 : (i == 2 ? c2 : c3); }

    Real max_abs() const { return std::max({c1.max_abs(), c2.max_abs(), c3.max_abs()}); }
};

StripVector operator+(const StripVector& a, const StripVector& b);
StripVector operator-(const StripVector& a, const StripVector& b);
StripVector operator*(Real c, const StripVector& a);

Real strip_l2_norm(const StripVector& v);

}  // namespace cvs

#endif
