#pragma once

#include "kdvcrit/common.hpp"

#include <array>

namespace kdv {

/// Roots of a monic cubic, canonically ordered (descending real part,
/// then descending imaginary part).
struct CubicRoots {
    std::array<cplx, 3> roots{};
    bool discriminant_degenerate = false; // repeated root detected
};

/// Solve lambda^3 + c2 lambda^2 + c1 lambda + c0 = 0 (complex coefficients)
/// by Cardano's formula with one round of Newton polishing per root.
/// Repeated roots are allowed and flagged, never an error.
CubicRoots cubic_roots(cplx c2, cplx c1, cplx c0);

/// Roots of the characteristic equation lambda^3 + lambda - i z = 0.
CubicRoots lambda_roots(cplx z);

/// Residual of the elementary symmetric functions of `r` against the
/// coefficients, relative to the coefficient scale. Used by tests.
double symmetric_residual(const CubicRoots& r, cplx c2, cplx c1, cplx c0);

/// Long-double root triple of sigma^3 - 3A sigma + 2B = 0 (exact integer
/// coefficients). This is the precision-critical path of the s-sweep: the
/// sum defining s cancels ~11 digits at the sweep minimum, so the roots are
/// polished in extended precision before the phases are formed.
std::array<lcplx, 3> sigma_roots_ld(long long threeA, long long twoB);

} // namespace kdv
