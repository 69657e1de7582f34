#pragma once

#include "kdvcrit/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kdv {

/// One critical pair (k,l), k >= l >= 1, with its derived spectral data.
struct CriticalPair {
    long long k = 0;
    long long l = 0;
    long long A = 0;     // k^2 + k l + l^2, exact
    double L = 0.0;      // 2 pi sqrt(A/3)
    double p = 0.0;      // rotation frequency, zero iff k == l
    cvec3 eta{};         // eta_1, eta_2, eta_3 (purely imaginary)
};

/// A critical length with its full pair family.
struct CriticalLength {
    double L = 0.0;
    long long A = 0;
    std::vector<CriticalPair> pairs; // sorted by descending k
    int n_L = 0;
    int dim_M = 0; // 2 * #{p != 0} + #{p == 0}
};

/// All (k,l) with k >= l >= 1 and k^2 + kl + l^2 = A, descending k.
/// Empty when A is not representable.
std::vector<std::pair<long long, long long>> enumerate_pairs(long long A);

/// p(k,l) = (2k+l)(k-l)(2l+k) / (3 sqrt(3) (k^2+kl+l^2)^{3/2}).
/// Nonnegative, zero iff k == l, always < 2/(3 sqrt 3).
double p_value(long long k, long long l);

/// Spectral data of a single pair.
CriticalPair make_pair(long long k, long long l);

/// The critical length through (k,l), with all companion pairs of the same A.
CriticalLength build_length(long long k, long long l);
CriticalLength build_length_from_A(long long A); // empty pair list if not representable

struct LemmaCounterexample {
    long long k1 = 0, l1 = 0, k2 = 0, l2 = 0; // k2,l2 unused for the single-pair lemma
};

struct LemmaResult {
    bool holds = true;
    std::optional<LemmaCounterexample> counterexample;
};

/// Exhaustive exact-integer check that ((2k+l)(2l+k)(k-l))^2 != (k^2+kl+l^2)^3
/// for all 1 <= l <= k <= bound. 128-bit arithmetic; bound is width-checked.
LemmaResult verify_lemma_half(long long bound);

/// Exhaustive exact-integer check that no two pairs (k1,l1), (k2,l2) with
/// k > l sharing the same A satisfy B(k2,l2) = 2 B(k1,l1), for A <= A_max.
LemmaResult verify_lemma_double(long long A_max);

/// Canonical JSON record of a CriticalLength (see README for the schema).
std::string to_json(const CriticalLength& len);

} // namespace kdv
