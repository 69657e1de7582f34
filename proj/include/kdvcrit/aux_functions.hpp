#pragma once

#include "kdvcrit/arithmetic.hpp"
#include "kdvcrit/common.hpp"

#include <string>
#include <vector>

namespace kdv {

// ---------------------------------------------------------------------------
// Exponential sums c * x^d * e^{mu x} (d in {0,1}): every function this
// module constructs lives in this class, so values, derivatives and ODE
// residuals are all evaluated from one representation.
// ---------------------------------------------------------------------------

struct Term {
    cplx c{};
    cplx mu{};
    int deg = 0; // 0 or 1
};

struct TermSum {
    std::vector<Term> terms;

    cplx eval(double x) const;
    TermSum derivative() const;
    TermSum& operator+=(const TermSum& o);
    TermSum& add(cplx c, cplx mu, int deg = 0);
};

// ---------------------------------------------------------------------------
// Modes: the eta triple of a pair (or of a synthetic frequency).
// ---------------------------------------------------------------------------

struct Mode {
    double q = 0.0; // frequency (p of the pair)
    cvec3 eta{};    // ascending imaginary part; eta_2 = 0 iff q = 0
    bool synthetic = false;
};

Mode mode_of(const CriticalPair& cp);

/// Mode for an arbitrary frequency q in [0, 2/(3 sqrt 3)): eta are the roots
/// of eta^3 + eta - i q = 0 ordered by ascending imaginary part. Used by
/// tests to reach the resonant/degenerate construction paths, which no
/// integer pair family realizes.
Mode synthetic_mode(double q);

/// psi(x) = sum_j (eta_{j+1} - eta_j) e^{eta_{j+2} x}, as a term sum.
TermSum psi_terms(const Mode& m);
cplx psi(const Mode& m, double x);
cplx psi_x(const Mode& m, double x);
cplx Psi(const Mode& m, double t, double x); // e^{-i q t} psi(x)

/// (psi_{m1} psi_{m2})' or (psi_{m1} conj(psi_{m2}))' as a term sum.
TermSum forcing_derivative(const Mode& m1, const Mode& m2, bool conjugate);

/// E(k,l) = -27 k l (k+l) / ((k+2l)(2k+l)(k-l)), k > l >= 1 (closed form).
double e_value(long long k, long long l);
/// The eta-sum route sum_j (eta_{j+1}-eta_j)/eta_{j+2}; agrees with the
/// closed form to ~1e-15 relative and serves as its independent check.
double e_value_eta_sum(const Mode& m);

/// D (or D-tilde with conjugate=true): the 3x3 double sum over eta products.
/// Rejects modes with q = 0.
cplx d_value(const Mode& m1, const Mode& m2, bool conjugate);

/// chi (or chi-tilde): the particular solution of the forced third-order ODE.
TermSum chi(const Mode& m1, const Mode& m2, bool conjugate);

// ---------------------------------------------------------------------------
// The auxiliary functions phi / phi-tilde
// ---------------------------------------------------------------------------

enum class AuxCase { Generic, Resonant, Degenerate, ZeroP };

struct AuxSolution {
    AuxCase case_tag = AuxCase::Generic;
    bool conjugate = false;       // solves against (psi psi-bar)' when true
    int m1 = -1, m2 = -1;         // pair indices, -1 for synthetic modes
    double L = 0.0;
    cplx z{};                     // frequency of the stationary problem
    cplx D{};                     // unset for the q = 0 closed form
    std::array<cplx, 3> lambda{}; // homogeneous roots (degenerate: l2 == l3)
    cvec3 a{};                    // homogeneous coefficients
    TermSum phi;                  // the full solution
    TermSum forcing;              // the forcing it solves against

    cplx eval(double x) const { return phi.eval(x); }
    cplx deriv(double x) const { return phi.derivative().eval(x); }
};

/// phi_{m1,m2} for two pairs of one critical length. Dispatch:
///   both q = 0            -> closed form 4(L sin x + 1/6 - x sin x - cos(2x)/6)
///   z = p1+p2 degenerate  -> Q1 system on {e^{l1 x}, e^{l2 x}, x e^{l2 x}}
///   z in P_L              -> two-condition system, minimal-norm completion
///   otherwise             -> Q(z) a = D (1, e^{(eta1+eta1)L}, 0)^T
/// The mixed case q1 = 0 != q2 admits no solution and is rejected.
AuxSolution solve_phi(const CriticalLength& len, int m1, int m2);

/// phi-tilde_{m1,m2}: same dispatch against frequencies z = p1 - p2, with
/// the diagonal q != 0 case given by the explicit chi-tilde + D-tilde form.
AuxSolution solve_phi_tilde(const CriticalLength& len, int m1, int m2);

/// Mode-level constructions used by tests and the synthetic coverage of the
/// resonant/degenerate branches. `resonance_p` lists the frequencies playing
/// the role of P_L. The boundary data is evaluated from chi directly, so
/// synthetic modes (which do not satisfy the equal-exponential identity at L)
/// still produce residual-exact solutions.
AuxSolution solve_phi_modes(const Mode& m1, const Mode& m2, double L, bool conjugate,
                            const std::vector<double>& resonance_p);

/// phi'_{m,m}(0). Exactly 4L when p_m = 0; nonzero whenever s_m != 0.
cplx phi_prime_zero(const CriticalLength& len, int m);

/// The coefficient matrices M, N of the boundary-trace expansion:
/// M = phi'(0)/8 entrywise, N = phi-tilde'(0)/8 entrywise.
/// Rejects lengths mixing p = 0 and p != 0 pairs (never needed together).
struct WMatrices {
    int n = 0;
    std::vector<cplx> M; // row-major n x n
    std::vector<cplx> N;
    cplx m(int i, int j) const { return M[static_cast<std::size_t>(i) * n + j]; }
    cplx nn(int i, int j) const { return N[static_cast<std::size_t>(i) * n + j]; }
};

WMatrices w_coefficients(const CriticalLength& len);

// ---------------------------------------------------------------------------
// Residual diagnostics (shared by tests, verify, acceptance)
// ---------------------------------------------------------------------------

struct AuxResiduals {
    double boundary = 0.0; // max of |phi(0)|, |phi(L)|, |phi'(L)|
    double ode = 0.0;      // max of |-iz phi + phi' + phi''' + f| on the grid
    double scale = 1.0;    // max |phi| on the grid
};

AuxResiduals aux_residuals(const AuxSolution& s, int grid_points = 200);

} // namespace kdv
