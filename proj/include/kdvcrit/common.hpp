#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

namespace kdv {

using cplx = std::complex<double>;
using lcplx = std::complex<long double>;

inline constexpr double PI = 3.14159265358979323846264338327950288;
inline constexpr long double PI_L = 3.14159265358979323846264338327950288L;

/// The degenerate frequency 2/(3*sqrt(3)) at which the characteristic cubic
/// lambda^3 + lambda - i z acquires a double root.
inline double degenerate_z() { return 2.0 / (3.0 * std::sqrt(3.0)); }

// ---------------------------------------------------------------------------
// Small dense complex linear algebra (3x3 is all this project ever needs).
// ---------------------------------------------------------------------------

using cmat3 = std::array<std::array<cplx, 3>, 3>;
using cvec3 = std::array<cplx, 3>;

inline cplx det3(const cmat3& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Solve m x = b by Gaussian elimination with partial pivoting.
cvec3 solve3(cmat3 m, cvec3 b);

/// Minimal-Euclidean-norm solution of the underdetermined 2x3 system
///   r0 . x = b0,  r1 . x = b1
/// (conjugate-transpose least-norm formula; rows assumed independent).
cvec3 solve_min_norm_2x3(const cvec3& r0, const cvec3& r1, cplx b0, cplx b1);

/// Hadamard bound prod_i ||row_i||_2, the natural scale for |det|.
double det_scale(const cmat3& m);

// ---------------------------------------------------------------------------
// Output formatting: all numeric file output uses 17 significant digits.
// ---------------------------------------------------------------------------

std::string fmt17(double v);
std::string fmt17(cplx v); // "re,im"

/// FNV-1a 64-bit, used for run-manifest digests.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t fnv1a64_file(const std::string& path);

} // namespace kdv
