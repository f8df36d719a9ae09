// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_FOURIER_HPP
#define CVS_FOURIER_HPP

#include "cvs/grid.hpp"

namespace cvs {

// 2-D transforms between grid values and Fourier coefficients on the wrapped
// lattice. Forward carries the 1/(nx*ny) normalization; inverse is the plain
// synthesis sum. inverse_real discards the imaginary part (callers enforce
// conjugate symmetry); imag_residue measures what was discarded.
CArray2 fft2_forward(const TorusGrid& g, const Array2& values);
CArray2 fft2_inverse(const TorusGrid& g, const CArray2& coeffs);
Array2 fft2_inverse_real(const TorusGrid& g, const CArray2& coeffs);
Real fft2_imag_residue(const TorusGrid& g, const CArray2& coeffs);

// Unnormalized in-place 2-D DFT (radix-2 batched when the sizes allow);
// forward kernel e^{-ikx}, inverse e^{+ikx} without the 1/n factors.
void dft2_inplace(CArray2& a, bool inverse);

}  // namespace cvs

#endif
