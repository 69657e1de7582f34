#include "kdvcrit/aux_functions.hpp"

#include "kdvcrit/cubic.hpp"
#include "kdvcrit/condition.hpp"

#include <algorithm>
#include <stdexcept>

namespace kdv {

cplx TermSum::eval(double x) const {
    cplx s(0);
    for (const auto& t : terms) {
        cplx v = t.c * std::exp(t.mu * x);
        if (t.deg == 1) v *= x;
        s += v;
    }
    return s;
}

TermSum TermSum::derivative() const {
    TermSum d;
    d.terms.reserve(terms.size() * 2);
    for (const auto& t : terms) {
        if (t.deg == 0) {
            d.add(t.c * t.mu, t.mu, 0);
        } else {
            d.add(t.c, t.mu, 0);
            d.add(t.c * t.mu, t.mu, 1);
        }
    }
    return d;
}

TermSum& TermSum::operator+=(const TermSum& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

TermSum& TermSum::add(cplx c, cplx mu, int deg) {
    terms.push_back({c, mu, deg});
    return *this;
}

Mode mode_of(const CriticalPair& cp) { return {cp.p, cp.eta, false}; }

Mode synthetic_mode(double q) {
    if (q < 0.0 || q >= degenerate_z())
        throw std::invalid_argument("synthetic_mode: q must lie in [0, 2/(3 sqrt 3))");
    auto r = lambda_roots(cplx(q)).roots;
    std::sort(r.begin(), r.end(),
              [](const cplx& a, const cplx& b) { return a.imag() < b.imag(); });
    // the roots are purely imaginary on this range; drop rounding dust
    for (auto& v : r) v = cplx(0.0, v.imag());
    return {q, {r[0], r[1], r[2]}, true};
}

namespace {

inline cplx eta_of(const Mode& m, int j, bool conj) { // cyclic, j >= 0
    cplx e = m.eta[static_cast<std::size_t>(j % 3)];
    return conj ? std::conj(e) : e;
}

inline cplx delta_eta(const Mode& m, int j, bool conj) {
    return eta_of(m, j + 1, conj) - eta_of(m, j, conj);
}

} // namespace

TermSum psi_terms(const Mode& m) {
    TermSum s;
    for (int j = 0; j < 3; j++) s.add(delta_eta(m, j, false), eta_of(m, j + 2, false));
    return s;
}

cplx psi(const Mode& m, double x) { return psi_terms(m).eval(x); }
cplx psi_x(const Mode& m, double x) { return psi_terms(m).derivative().eval(x); }
cplx Psi(const Mode& m, double t, double x) {
    return std::exp(cplx(0, -m.q * t)) * psi(m, x);
}

TermSum forcing_derivative(const Mode& m1, const Mode& m2, bool conjugate) {
    TermSum f;
    for (int j = 0; j < 3; j++) {
        for (int k = 0; k < 3; k++) {
            cplx mu = eta_of(m1, j + 2, false) + eta_of(m2, k + 2, conjugate);
            cplx c = delta_eta(m1, j, false) * delta_eta(m2, k, conjugate) * mu;
            f.add(c, mu);
        }
    }
    return f;
}

double e_value(long long k, long long l) {
    if (l < 1 || k <= l) throw std::invalid_argument("e_value: need k > l >= 1");
    long double num = -27.0L * k * l * (k + l);
    long double den = static_cast<long double>(k + 2 * l) * (2 * k + l) * (k - l);
    double closed = static_cast<double>(num / den);
    // the eta-sum route must reproduce the closed form; disagreement would
    // mean corrupted spectral data
    double via_sum = e_value_eta_sum(mode_of(make_pair(k, l)));
    if (std::abs(closed - via_sum) > 1e-12 * std::abs(closed))
        throw std::logic_error("e_value: eta-sum route disagrees with the closed form");
    return closed;
}

double e_value_eta_sum(const Mode& m) {
    if (m.q == 0.0) throw std::invalid_argument("e_value_eta_sum: q must be nonzero");
    cplx e(0);
    for (int j = 0; j < 3; j++) e += delta_eta(m, j, false) / eta_of(m, j + 2, false);
    return e.real();
}

cplx d_value(const Mode& m1, const Mode& m2, bool conjugate) {
    if (m1.q == 0.0 || m2.q == 0.0)
        throw std::invalid_argument("d_value: defined only for p != 0 on both modes");
    cplx d(0);
    for (int j = 0; j < 3; j++)
        for (int k = 0; k < 3; k++)
            d += delta_eta(m1, j, false) * delta_eta(m2, k, conjugate)
               / (3.0 * eta_of(m1, j + 2, false) * eta_of(m2, k + 2, conjugate));
    return d;
}

TermSum chi(const Mode& m1, const Mode& m2, bool conjugate) {
    if (m1.q == 0.0 || m2.q == 0.0)
        throw std::invalid_argument("chi: defined only for p != 0 on both modes");
    TermSum c;
    for (int j = 0; j < 3; j++) {
        for (int k = 0; k < 3; k++) {
            cplx ej = eta_of(m1, j + 2, false), ek = eta_of(m2, k + 2, conjugate);
            cplx coef = -delta_eta(m1, j, false) * delta_eta(m2, k, conjugate) / (3.0 * ej * ek);
            c.add(coef, ej + ek);
        }
    }
    return c;
}

namespace {

// closed form 4(L sin x + 1/6 - x sin x - cos(2x)/6) as exponential terms
TermSum zero_p_phi(double L, double sign) {
    const cplx I(0, 1);
    TermSum t;
    t.add(sign * -2.0 * I * L, I);         // 4L sin x
    t.add(sign * 2.0 * I * L, -I);
    t.add(cplx(sign * 2.0 / 3.0), cplx(0)); // 4/6
    t.add(sign * 2.0 * I, I, 1);            // -4 x sin x
    t.add(sign * -2.0 * I, -I, 1);
    t.add(cplx(sign * -1.0 / 3.0), 2.0 * I); // -4 cos(2x)/6
    t.add(cplx(sign * -1.0 / 3.0), -2.0 * I);
    return t;
}

enum class RhsStyle { FromEta, FromChi };

AuxSolution solve_core(const Mode& m1, const Mode& m2, double L, bool conjugate,
                       const std::vector<double>& resonance_p, RhsStyle rhs_style,
                       int idx1, int idx2) {
    AuxSolution out;
    out.conjugate = conjugate;
    out.m1 = idx1;
    out.m2 = idx2;
    out.L = L;

    const bool z1 = m1.q == 0.0, z2 = m2.q == 0.0;
    if (z1 != z2)
        throw std::domain_error("solve_phi: mixed p = 0 / p != 0 pair admits no solution");

    if (z1 && z2) {
        out.case_tag = AuxCase::ZeroP;
        out.z = 0.0;
        out.phi = zero_p_phi(L, conjugate ? -1.0 : 1.0);
        out.forcing = forcing_derivative(m1, m2, conjugate);
        return out;
    }

    double z = conjugate ? m1.q - m2.q : m1.q + m2.q;
    out.z = z;
    out.D = d_value(m1, m2, conjugate);
    out.forcing = forcing_derivative(m1, m2, conjugate);
    TermSum chi_part = chi(m1, m2, conjugate);

    if (conjugate && z == 0.0) {
        // diagonal conjugate pair: chi-tilde plus the matching constant
        out.case_tag = AuxCase::Generic;
        out.phi = chi_part;
        out.phi.add(out.D, cplx(0));
        out.lambda = {cplx(0), cplx(0, 1), cplx(0, -1)};
        out.a = {out.D, cplx(0), cplx(0)};
        return out;
    }

    const double tol = 1e-9;
    const bool degenerate = std::abs(std::abs(z) - degenerate_z()) < tol;
    bool resonant = false;
    for (double p : resonance_p) resonant |= (p > 0.0 && std::abs(std::abs(z) - p) < tol);

    // boundary data: phi = chi + homogeneous must vanish at 0 and L and have
    // zero slope at L
    cplx b0, b1, b2;
    if (rhs_style == RhsStyle::FromEta) {
        cplx e = std::exp((eta_of(m1, 0, false) + eta_of(m2, 0, conjugate)) * L);
        b0 = out.D;
        b1 = out.D * e;
        b2 = 0.0;
    } else {
        b0 = -chi_part.eval(0.0);
        b1 = -chi_part.eval(L);
        b2 = -chi_part.derivative().eval(L);
    }

    if (degenerate) {
        out.case_tag = AuxCase::Degenerate;
        QMatrix q1 = q1_matrix(L);
        out.lambda = q1.lambda;
        out.a = solve3(q1.entries, {b0, b1, b2});
        out.phi = chi_part;
        out.phi.add(out.a[0], out.lambda[0], 0);
        out.phi.add(out.a[1], out.lambda[1], 0);
        out.phi.add(out.a[2], out.lambda[1], 1);
        return out;
    }

    auto lam = lambda_roots(cplx(z)).roots;
    out.lambda = lam;
    if (resonant) {
        // only two independent conditions survive; fix the minimal-norm choice
        out.case_tag = AuxCase::Resonant;
        out.a = solve_min_norm_2x3({cplx(1), cplx(1), cplx(1)}, {lam[0], lam[1], lam[2]},
                                   b0, cplx(0));
    } else {
        out.case_tag = AuxCase::Generic;
        QMatrix q = q_matrix(cplx(z), L);
        out.lambda = q.lambda;
        lam = q.lambda;
        out.a = solve3(q.entries, {b0, b1, b2});
    }
    out.phi = chi_part;
    for (int j = 0; j < 3; j++) out.phi.add(out.a[j], lam[j], 0);
    return out;
}

std::vector<double> freqs_of(const CriticalLength& len) {
    std::vector<double> p;
    for (const auto& cp : len.pairs) p.push_back(cp.p);
    return p;
}

} // namespace

AuxSolution solve_phi(const CriticalLength& len, int m1, int m2) {
    const auto& a = len.pairs.at(static_cast<std::size_t>(m1));
    const auto& b = len.pairs.at(static_cast<std::size_t>(m2));
    return solve_core(mode_of(a), mode_of(b), len.L, false, freqs_of(len),
                      RhsStyle::FromEta, m1, m2);
}

AuxSolution solve_phi_tilde(const CriticalLength& len, int m1, int m2) {
    const auto& a = len.pairs.at(static_cast<std::size_t>(m1));
    const auto& b = len.pairs.at(static_cast<std::size_t>(m2));
    return solve_core(mode_of(a), mode_of(b), len.L, true, freqs_of(len),
                      RhsStyle::FromEta, m1, m2);
}

AuxSolution solve_phi_modes(const Mode& m1, const Mode& m2, double L, bool conjugate,
                            const std::vector<double>& resonance_p) {
    return solve_core(m1, m2, L, conjugate, resonance_p, RhsStyle::FromChi, -1, -1);
}

cplx phi_prime_zero(const CriticalLength& len, int m) {
    auto sol = solve_phi(len, m, m);
    cplx v = sol.deriv(0.0);
    const auto& cp = len.pairs.at(static_cast<std::size_t>(m));
    if (cp.k != cp.l) {
        // the derivative vanishes exactly when s does; catch any mismatch
        double s_abs = std::abs(s_value(cp.k, cp.l));
        if (s_abs > 1e-9 && std::abs(v) <= 1e-12 * std::abs(sol.D))
            throw std::logic_error("phi_prime_zero: derivative vanished although s != 0");
    }
    return v;
}

WMatrices w_coefficients(const CriticalLength& len) {
    int zero_count = 0;
    for (const auto& cp : len.pairs) zero_count += (cp.k == cp.l);
    if (zero_count > 0 && len.n_L > 1)
        throw std::domain_error(
            "w_coefficients: length mixes p = 0 and p != 0 pairs; the mixed "
            "auxiliary systems admit no solution");
    WMatrices w;
    w.n = len.n_L;
    w.M.resize(static_cast<std::size_t>(w.n) * w.n);
    w.N.resize(static_cast<std::size_t>(w.n) * w.n);
    for (int i = 0; i < w.n; i++) {
        for (int j = 0; j < w.n; j++) {
            w.M[static_cast<std::size_t>(i) * w.n + j] = solve_phi(len, i, j).deriv(0.0) / 8.0;
            w.N[static_cast<std::size_t>(i) * w.n + j] =
                solve_phi_tilde(len, i, j).deriv(0.0) / 8.0;
        }
    }
    return w;
}

AuxResiduals aux_residuals(const AuxSolution& s, int grid_points) {
    AuxResiduals r;
    TermSum d1 = s.phi.derivative();
    TermSum d3 = d1.derivative().derivative();
    r.boundary = std::max({std::abs(s.phi.eval(0.0)), std::abs(s.phi.eval(s.L)),
                           std::abs(d1.eval(s.L))});
    double scale = 0.0, ode = 0.0;
    for (int i = 0; i <= grid_points; i++) {
        double x = s.L * i / grid_points;
        cplx v = s.phi.eval(x);
        scale = std::max(scale, std::abs(v));
        cplx res = -cplx(0, 1) * s.z * v + d1.eval(x) + d3.eval(x) + s.forcing.eval(x);
        ode = std::max(ode, std::abs(res));
    }
    r.scale = std::max(scale, 1e-300);
    r.ode = ode;
    return r;
}

} // namespace kdv
