#include "kdvcrit/cubic.hpp"

#include <algorithm>

namespace kdv {

namespace {

template <typename C>
std::array<C, 3> cardano(C c2, C c1, C c0) {
    using R = typename C::value_type;
    // depressed cubic t^3 + p t + q with lambda = t - c2/3
    C shift = c2 / R(3);
    C p = c1 - c2 * c2 / R(3);
    C q = c2 * (R(2) * c2 * c2 - R(9) * c1) / R(27) + c0;

    C w = std::sqrt(q * q / R(4) + p * p * p / R(27));
    C u3 = -q / R(2) + w;
    if (std::abs(u3) < std::abs(-q / R(2) - w)) u3 = -q / R(2) - w;

    std::array<C, 3> t;
    if (std::abs(u3) == R(0)) {
        // p = q = 0: triple root of the depressed cubic
        t = {C(0), C(0), C(0)};
    } else {
        C u = std::pow(u3, R(1) / R(3));
        const C omega(R(-0.5), std::sqrt(R(3)) / R(2));
        C w0 = u, w1 = u * omega, w2 = u * std::conj(omega);
        t = {w0 - p / (R(3) * w0), w1 - p / (R(3) * w1), w2 - p / (R(3) * w2)};
    }

    for (auto& x : t) {
        x -= shift;
        for (int it = 0; it < 3; it++) {
            C f = ((x + c2) * x + c1) * x + c0;
            C df = (R(3) * x + R(2) * c2) * x + c1;
            if (std::abs(df) <= R(1e-3) * (R(3) * std::abs(x) * std::abs(x) + std::abs(c1) + R(1e-300)))
                break; // near-degenerate: Newton would amplify, keep Cardano value
            x -= f / df;
        }
    }
    return t;
}

} // namespace

CubicRoots cubic_roots(cplx c2, cplx c1, cplx c0) {
    CubicRoots out;
    auto r = cardano<cplx>(c2, c1, c0);
    std::sort(r.begin(), r.end(), [](const cplx& a, const cplx& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    out.roots = r;

    // discriminant of the monic cubic, tested against its own term scale
    cplx d = 18.0 * c2 * c1 * c0 - 4.0 * c2 * c2 * c2 * c0 + c2 * c2 * c1 * c1
           - 4.0 * c1 * c1 * c1 - 27.0 * c0 * c0;
    double scale = 18.0 * std::abs(c2 * c1 * c0) + 4.0 * std::abs(c2 * c2 * c2 * c0)
                 + std::abs(c2 * c2 * c1 * c1) + 4.0 * std::abs(c1 * c1 * c1)
                 + 27.0 * std::abs(c0 * c0);
    out.discriminant_degenerate = std::abs(d) <= 1e-9 * std::max(scale, 1e-300);
    return out;
}

CubicRoots lambda_roots(cplx z) {
    return cubic_roots(cplx(0.0), cplx(1.0), cplx(0.0, -1.0) * z);
}

double symmetric_residual(const CubicRoots& r, cplx c2, cplx c1, cplx c0) {
    const auto& x = r.roots;
    cplx e1 = x[0] + x[1] + x[2];
    cplx e2 = x[0] * x[1] + x[0] * x[2] + x[1] * x[2];
    cplx e3 = x[0] * x[1] * x[2];
    double m = std::max({std::abs(c2), std::abs(c1), std::abs(c0),
                         std::abs(x[0]) * std::abs(x[0]) * std::abs(x[0]), 1.0});
    return (std::abs(e1 + c2) + std::abs(e2 - c1) + std::abs(e3 + c0)) / m;
}

std::array<lcplx, 3> sigma_roots_ld(long long threeA, long long twoB) {
    auto t = cardano<lcplx>(lcplx(0), lcplx(static_cast<long double>(-threeA)),
                            lcplx(static_cast<long double>(twoB)));
    // extra Newton passes in long double; integer coefficients are exact here
    long double p = static_cast<long double>(-threeA);
    long double q = static_cast<long double>(twoB);
    for (auto& x : t) {
        for (int it = 0; it < 4; it++) {
            lcplx f = (x * x + p) * x + q;
            lcplx df = 3.0L * x * x + p;
            if (std::abs(df) == 0.0L) break;
            x -= f / df;
        }
    }
    std::sort(t.begin(), t.end(), [](const lcplx& a, const lcplx& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return {t[0], t[1], t[2]};
}

} // namespace kdv
