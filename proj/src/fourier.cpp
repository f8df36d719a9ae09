// SPDX-License-Identifier: Apache-2.0

#include "cvs/fourier.hpp"

#include <map>
#include <mutex>

#include <unsupported/Eigen/FFT>

namespace cvs {

namespace {

bool is_pow2(Index n) { return n >= 2 && (n & (n - 1)) == 0; }

struct Twiddles {
    std::vector<Index> bitrev;
    // twiddle per butterfly stage, forward sign; inverse uses the conjugate
    std::vector<std::vector<Complex>> stage;
};

const Twiddles& twiddles_for(Index n) {
    static std::map<Index, Twiddles> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Twiddles t;
    t.bitrev.resize(n);
    int bits = 0;
    while ((Index(1) << bits) < n) ++bits;
    for (Index i = 0; i < n; ++i) {
        Index r = 0;
        for (int b = 0; b < bits; ++b)
            if (i & (Index(1) << b)) r |= Index(1) << (bits - 1 - b);
        t.bitrev[size_t(i)] = r;
    }
    for (Index len = 2; len <= n; len <<= 1) {
        std::vector<Complex> w(size_t(len / 2));
        for (Index k = 0; k < len / 2; ++k) {
            Real ang = -two_pi * Real(k) / Real(len);
            w[size_t(k)] = Complex(std::cos(ang), std::sin(ang));
        }
        t.stage.push_back(std::move(w));
    }
    return cache.emplace(n, std::move(t)).first->second;
}

// Batched radix-2 DFT of every column (signal runs over the row index).
// forward: X_k = sum_j x_j e^{-2 pi i k j / n}; inverse sum has e^{+...}
// and no normalization.
void fft_rows_pow2(CArray2& a, bool inverse) {
    const Index n = a.rows();
    const Twiddles& tw = twiddles_for(n);
    for (Index i = 0; i < n; ++i) {
        Index r = tw.bitrev[size_t(i)];
        if (r > i) a.row(i).swap(a.row(r));
    }
    size_t s = 0;
    Eigen::ArrayXcd tmp(a.cols());
    for (Index len = 2; len <= n; len <<= 1, ++s) {
        const Index half = len / 2;
        const auto& w = tw.stage[s];
        for (Index start = 0; start < n; start += len) {
            for (Index k = 0; k < half; ++k) {
                Complex wk = inverse ? std::conj(w[size_t(k)]) : w[size_t(k)];
                auto hi = a.row(start + half + k);
                auto lo = a.row(start + k);
                tmp = wk * hi;
                hi = lo - tmp.transpose();
                lo += tmp.transpose();
            }
        }
    }
}

Eigen::FFT<Real>& fft_engine() {
    thread_local Eigen::FFT<Real> fft;
    return fft;
}

void dft_axis_generic(CArray2& a, bool inverse, bool along_rows) {
    auto& fft = fft_engine();
    if (along_rows) {
        const Index nx = a.rows(), ny = a.cols();
        Eigen::VectorXcd in(nx), out(nx);
        for (Index j = 0; j < ny; ++j) {
            in = a.col(j).matrix();
            if (inverse) {
                fft.inv(out, in);
                out *= Real(nx);  // unnormalized inverse
            } else {
                fft.fwd(out, in);
            }
            a.col(j) = out.array();
        }
    } else {
        const Index nx = a.rows(), ny = a.cols();
        Eigen::VectorXcd in(ny), out(ny);
        for (Index i = 0; i < nx; ++i) {
            in = a.row(i).matrix().transpose();
            if (inverse) {
                fft.inv(out, in);
                out *= Real(ny);
            } else {
                fft.fwd(out, in);
            }
            a.row(i) = out.array().transpose();
        }
    }
}

}  // namespace

void dft2_inplace(CArray2& a, bool inverse) {
    if (is_pow2(a.rows()))
        fft_rows_pow2(a, inverse);
    else
        dft_axis_generic(a, inverse, true);
    if (is_pow2(a.cols())) {
        CArray2 t = a.transpose();
        fft_rows_pow2(t, inverse);
        a = t.transpose();
    } else {
        dft_axis_generic(a, inverse, false);
    }
}

CArray2 fft2_forward(const TorusGrid& g, const Array2& values) {
    CArray2 a = values.cast<Complex>();
    dft2_inplace(a, false);
    a /= Real(g.nx * g.ny);
    return a;
}

CArray2 fft2_inverse(const TorusGrid& g, const CArray2& coeffs) {
    (void)g;
    CArray2 a = coeffs;
    dft2_inplace(a, true);
    return a;
}

Array2 fft2_inverse_real(const TorusGrid& g, const CArray2& coeffs) {
    return fft2_inverse(g, coeffs).real();
}

Real fft2_imag_residue(const TorusGrid& g, const CArray2& coeffs) {
    return fft2_inverse(g, coeffs).imag().abs().maxCoeff();
}

}  // namespace cvs
