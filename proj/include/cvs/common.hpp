// SPDX-License-Identifier: Apache-2.0

#ifndef CVS_COMMON_HPP
#define CVS_COMMON_HPP

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cvs {

using Real = double;
using Complex = std::complex<Real>;
using Index = Eigen::Index;

using Array2 = Eigen::ArrayXXd;    // (nx, ny) grid values
using CArray2 = Eigen::ArrayXXcd;  // (nx, ny) Fourier coefficients
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr Real two_pi = 6.283185307179586476925286766559;

// Which fluid region a strip field flattens: plus = {f < x3 < 1},
// minus = {-1 < x3 < f}.
enum class Side { plus, minus };

inline const char* side_name(Side s) { return s == Side::plus ? "plus" : "minus"; }

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Compatibility defects of div-curl data (C1: div omega, C2: lid flux of
// omega3, C3: mean of dt f; neumann: boundary/volume data imbalance).
struct CompatibilityError : std::runtime_error {
    std::string condition;
    Real defect;
    CompatibilityError(std::string cond, Real d, const std::string& what)
        : std::runtime_error(what), condition(std::move(cond)), defect(d) {}
};

struct ConvergenceError : std::runtime_error {
    std::vector<Real> residual_history;
    ConvergenceError(std::vector<Real> hist, const std::string& what)
        : std::runtime_error(what), residual_history(std::move(hist)) {}
};

// Worker count for internal parallel loops; capped by CVSHEET_THREADS.
int worker_count();

// Chunked parallel for over [0, n). Falls back to serial for small n.
void parallel_for(Index n, const std::function<void(Index)>& fn);

}  // namespace cvs

#endif
