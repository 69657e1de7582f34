#pragma once

#include "kdvcrit/arithmetic.hpp"
#include "kdvcrit/common.hpp"
#include "kdvcrit/cubic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kdv {

// ---------------------------------------------------------------------------
// The sigma cubic and the quantity s(k,l)
// ---------------------------------------------------------------------------

/// Roots of sigma^3 - 3(k^2+kl+l^2) sigma + 2(2k+l)(2l+k)(k-l) = 0,
/// defined for k > l >= 1 only (the k = l case is rejected).
struct SigmaTriple {
    long long k = 0, l = 0;
    std::array<cplx, 3> sigma{};
};

SigmaTriple sigma_roots(long long k, long long l);

/// s evaluated directly from a sigma triple and the prefactor
/// alpha = e^{4 pi i (k-l)/3}:
///   s = sum_j sigma_j (sigma_{j+2} - sigma_{j+1})
///           (alpha e^{2 pi i sigma_j / 3} + e^{-2 pi i sigma_j / 3}).
/// |s| is invariant under permutations of the triple (s itself is
/// antisymmetric, so odd permutations flip its sign).
cplx s_from_sigma(const std::array<cplx, 3>& sigma, cplx alpha);

/// s(k,l) for k > l >= 1. Root-finding and phase formation run in extended
/// precision: the sum cancels ~11 digits near the sweep minimum.
cplx s_value(long long k, long long l);

/// det K2 for lambda_hat_j = 2 pi i sigma_j / 3, the boundary-system
/// determinant whose vanishing is equivalent to s = 0:
///   det K2 = (4 pi^2 / 9) s.
/// Computed as a literal 3x3 determinant so the identity is a real check.
cplx det_k2(const std::array<cplx, 3>& sigma, cplx alpha);

// ---------------------------------------------------------------------------
// Condition (p != 0 and s != 0 for all pairs)
// ---------------------------------------------------------------------------

enum class Verdict { DimOne, Holds, Fails, Undecided };

struct PairReport {
    long long k = 0, l = 0;
    double p = 0.0;
    cplx s{};       // unset when p == 0
    double abs_s = 0.0;
    bool p_zero = false;
    bool s_decided_nonzero = false;
    bool s_undecided = false;
};

struct ConditionReport {
    Verdict verdict = Verdict::Fails;
    std::vector<PairReport> pairs;
    std::string detail; // offending pair, when any
};

/// Decision procedure: dim M = 1 short-circuits; otherwise every pair must
/// have p != 0 and |s| > tol. |s| in [1e-12, tol] is reported undecided.
ConditionReport check_condition(const CriticalLength& len, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Q matrices
// ---------------------------------------------------------------------------

struct QMatrix {
    cplx z{};
    std::array<cplx, 3> lambda{};
    cmat3 entries{};
    cplx det{};
    double scale = 0.0;     // Hadamard row-norm product
    bool degenerate = false; // z within 1e-9 of +-2/(3 sqrt 3)
};

/// Q(z) with rows (1,1,1), (e^{lambda_j L}), (lambda_j e^{lambda_j L}),
/// lambda_j the roots of lambda^3 + lambda - i z = 0.
QMatrix q_matrix(cplx z, double L);

/// The repeated-root variant at z = 2/(3 sqrt 3), basis
/// {e^{l1 x}, e^{l2 x}, x e^{l2 x}} with l1 = -2i/sqrt3, l2 = i/sqrt3.
QMatrix q1_matrix(double L);

// ---------------------------------------------------------------------------
// The sweep min |s(k,l)| over 1 <= l < k <= kmax
// ---------------------------------------------------------------------------

struct SweepOptions {
    int threads = 0;                  // 0 = hardware concurrency
    std::string csv_path;             // empty = no table output
    std::string checkpoint_path;      // empty = no checkpointing
    long long checkpoint_stride = 100000; // pairs between checkpoint writes
    bool keep_table = false;          // retain rows in memory
};

struct SweepRow {
    long long k = 0, l = 0, A = 0;
    double p = 0.0;
    cplx s{};
    double abs_s = 0.0;
};

struct SweepResult {
    double min_abs_s = 0.0;
    long long argmin_k = 0, argmin_l = 0;
    long long pairs_evaluated = 0;
    long long pairs_skipped = 0; // resumed past these via checkpoint
    std::vector<SweepRow> table; // only when keep_table
};

/// Deterministic parallel sweep: the reduction is an associative min on
/// (abs_s, k, l), merged in k order, so the result is independent of the
/// worker count and schedule. Ties break lexicographically on (k,l).
SweepResult sweep_s(long long k_max, const SweepOptions& opt = {});

} // namespace kdv
