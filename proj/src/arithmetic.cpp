#include "kdvcrit/arithmetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace kdv {

namespace {

using i128 = __int128;

long long isqrt_ll(long long v) {
    if (v < 0) return -1;
    auto r = static_cast<long long>(std::sqrt(static_cast<double>(v)));
    while (r > 0 && r * r > v) r--;
    while ((r + 1) * (r + 1) <= v) r++;
    return r;
}

i128 B_of(long long k, long long l) {
    return i128(2 * k + l) * i128(2 * l + k) * i128(k - l);
}

} // namespace

std::vector<std::pair<long long, long long>> enumerate_pairs(long long A) {
    if (A < 3) throw std::invalid_argument("enumerate_pairs: A must be >= 3");
    std::vector<std::pair<long long, long long>> out;
    for (long long l = 1; 3 * l * l <= A; l++) {
        long long disc = 4 * A - 3 * l * l;
        long long m = isqrt_ll(disc);
        if (m * m != disc) continue;
        if ((m - l) % 2 != 0) continue;
        long long k = (m - l) / 2;
        if (k >= l && k * k + k * l + l * l == A) out.emplace_back(k, l);
    }
    // l ascending means k descending; keep the contract explicit anyway
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.first > b.first; });
    return out;
}

double p_value(long long k, long long l) {
    if (l < 1 || k < l) throw std::invalid_argument("p_value: need k >= l >= 1");
    long double A = static_cast<long double>(k) * k + static_cast<long double>(k) * l
                  + static_cast<long double>(l) * l;
    long double B = static_cast<long double>(2 * k + l) * static_cast<long double>(2 * l + k)
                  * static_cast<long double>(k - l);
    long double p = B / (3.0L * std::sqrt(3.0L) * std::pow(A, 1.5L));
    return static_cast<double>(p);
}

CriticalPair make_pair(long long k, long long l) {
    if (l < 1 || k < l) throw std::invalid_argument("make_pair: need k >= l >= 1");
    if (k > 1000000000LL) throw std::invalid_argument("make_pair: k beyond the 64-bit range of A");
    CriticalPair cp;
    cp.k = k;
    cp.l = l;
    cp.A = k * k + k * l + l * l;
    cp.L = 2.0 * PI * std::sqrt(static_cast<double>(cp.A) / 3.0);
    cp.p = (k == l) ? 0.0 : p_value(k, l);
    // eta_j = i c_j / sqrt(3A) with integer c_1 = -(2k+l), c_2 = k-l, c_3 = k+2l
    double s = 1.0 / std::sqrt(3.0 * static_cast<double>(cp.A));
    cp.eta[0] = cplx(0.0, -static_cast<double>(2 * k + l) * s);
    cp.eta[1] = cplx(0.0, static_cast<double>(k - l) * s);
    cp.eta[2] = cplx(0.0, static_cast<double>(k + 2 * l) * s);
    return cp;
}

CriticalLength build_length(long long k, long long l) {
    if (l < 1 || k < l) throw std::invalid_argument("build_length: need k >= l >= 1");
    return build_length_from_A(k * k + k * l + l * l);
}

CriticalLength build_length_from_A(long long A) {
    CriticalLength len;
    len.A = A;
    len.L = 2.0 * PI * std::sqrt(static_cast<double>(A) / 3.0);
    for (auto [k, l] : enumerate_pairs(A)) len.pairs.push_back(make_pair(k, l));
    len.n_L = static_cast<int>(len.pairs.size());
    for (const auto& p : len.pairs) len.dim_M += (p.k == p.l) ? 1 : 2;
    return len;
}

LemmaResult verify_lemma_half(long long bound) {
    if (bound < 2) throw std::invalid_argument("verify_lemma_half: bound must be >= 2");
    if (bound > 1000000)
        throw std::invalid_argument("verify_lemma_half: bound too large for 128-bit arithmetic");
    for (long long k = 1; k <= bound; k++) {
        for (long long l = 1; l <= k; l++) {
            i128 B = B_of(k, l);
            i128 A = i128(k) * k + i128(k) * l + i128(l) * l;
            if (B * B == A * A * A) {
                return {false, LemmaCounterexample{k, l, 0, 0}};
            }
        }
    }
    return {true, std::nullopt};
}

LemmaResult verify_lemma_double(long long A_max) {
    if (A_max < 3) throw std::invalid_argument("verify_lemma_double: A_max must be >= 3");
    if (A_max > 2000000000000LL)
        throw std::invalid_argument("verify_lemma_double: A_max too large for 128-bit arithmetic");
    std::map<long long, std::vector<std::pair<long long, long long>>> families;
    for (long long l = 1; 3 * l * l <= A_max; l++) {
        for (long long k = l + 1;; k++) {
            long long A = k * k + k * l + l * l;
            if (A > A_max) break;
            families[A].emplace_back(k, l);
        }
    }
    for (const auto& [A, pairs] : families) {
        if (pairs.size() < 2) continue;
        for (const auto& p1 : pairs) {
            for (const auto& p2 : pairs) {
                if (p1 == p2) continue;
                if (B_of(p2.first, p2.second) == 2 * B_of(p1.first, p1.second)) {
                    return {false, LemmaCounterexample{p1.first, p1.second, p2.first, p2.second}};
                }
            }
        }
    }
    return {true, std::nullopt};
}

std::string to_json(const CriticalLength& len) {
    std::ostringstream os;
    os << "{\"L\":" << fmt17(len.L) << ",\"A\":" << len.A << ",\"pairs\":[";
    for (std::size_t i = 0; i < len.pairs.size(); i++) {
        const auto& p = len.pairs[i];
        if (i) os << ",";
        os << "{\"k\":" << p.k << ",\"l\":" << p.l << ",\"p\":" << fmt17(p.p) << ",\"eta\":[";
        for (int j = 0; j < 3; j++) {
            if (j) os << ",";
            os << "[" << fmt17(p.eta[j].real()) << "," << fmt17(p.eta[j].imag()) << "]";
        }
        os << "]}";
    }
    os << "],\"n_L\":" << len.n_L << ",\"dim_M\":" << len.dim_M;
    bool has_zero_p = false;
    for (const auto& p : len.pairs) has_zero_p |= (p.k == p.l);
    if (has_zero_p)
        os << ",\"note\":\"pair with k=l contributes 1 to dim_M (its real mode vanishes)\"";
    os << "}";
    return os.str();
}

} // namespace kdv
