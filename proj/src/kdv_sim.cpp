#include "kdvcrit/kdv_sim.hpp"

#include "kdvcrit/quasi_trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kdv {

// ---------------------------------------------------------------------------
// Band / BandLU
// ---------------------------------------------------------------------------

Band::Band(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), a_(static_cast<std::size_t>(n) * (kl + ku + 1), 0.0) {}

double& Band::at(int i, int j) {
    return a_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + (j - i + kl_)];
}

double Band::get(int i, int j) const {
    int off = j - i + kl_;
    if (off < 0 || off >= kl_ + ku_ + 1) return 0.0;
    return a_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1) + off];
}

void Band::mul(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; i++) {
        double s = 0.0;
        int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
        const double* row = &a_[static_cast<std::size_t>(i) * (kl_ + ku_ + 1)];
        for (int j = j0; j <= j1; j++) s += row[j - i + kl_] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
}

BandLU::BandLU(const Band& b)
    : n_(b.n()), kl_(b.kl()), ku_(b.ku()),
      ab_(static_cast<std::size_t>(2 * b.kl() + b.ku() + 1) * b.n(), 0.0),
      piv_(static_cast<std::size_t>(b.n())) {
    const int ldab = 2 * kl_ + ku_ + 1;
    auto AB = [&](int i, int j) -> double& {
        return ab_[static_cast<std::size_t>(j) * ldab + (kl_ + ku_ + i - j)];
    };
    for (int j = 0; j < n_; j++)
        for (int i = std::max(0, j - ku_); i <= std::min(n_ - 1, j + kl_); i++)
            AB(i, j) = b.get(i, j);
    for (int j = 0; j < n_; j++) {
        int ip = j;
        double mx = std::fabs(AB(j, j));
        for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); i++)
            if (std::fabs(AB(i, j)) > mx) {
                mx = std::fabs(AB(i, j));
                ip = i;
            }
        if (mx == 0.0) throw std::runtime_error("BandLU: singular matrix");
        piv_[static_cast<std::size_t>(j)] = ip;
        if (ip != j)
            for (int c = j; c <= std::min(n_ - 1, j + kl_ + ku_); c++) std::swap(AB(j, c), AB(ip, c));
        double d = AB(j, j);
        for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); i++) {
            double m = AB(i, j) / d;
            AB(i, j) = m;
            for (int c = j + 1; c <= std::min(n_ - 1, j + kl_ + ku_); c++) AB(i, c) -= m * AB(j, c);
        }
    }
}

void BandLU::solve(std::vector<double>& rhs) const {
    const int ldab = 2 * kl_ + ku_ + 1;
    auto AB = [&](int i, int j) -> const double& {
        return ab_[static_cast<std::size_t>(j) * ldab + (kl_ + ku_ + i - j)];
    };
    for (int j = 0; j < n_; j++) {
        if (piv_[static_cast<std::size_t>(j)] != j) std::swap(rhs[static_cast<std::size_t>(j)], rhs[static_cast<std::size_t>(piv_[static_cast<std::size_t>(j)])]);
        for (int i = j + 1; i <= std::min(n_ - 1, j + kl_); i++)
            rhs[static_cast<std::size_t>(i)] -= AB(i, j) * rhs[static_cast<std::size_t>(j)];
    }
    for (int j = n_ - 1; j >= 0; j--) {
        rhs[static_cast<std::size_t>(j)] /= AB(j, j);
        for (int i = std::max(0, j - kl_ - ku_); i < j; i++)
            rhs[static_cast<std::size_t>(i)] -= AB(i, j) * rhs[static_cast<std::size_t>(j)];
    }
}

// ---------------------------------------------------------------------------
// Spatial operator
// ---------------------------------------------------------------------------

namespace {

Band build_operator(const SimGrid& g) {
    const int n = g.n_x;
    const double h = g.dx();
    const double c1 = 1.0 / (2 * h), c3 = 1.0 / (2 * h * h * h);
    Band A(n, 3, 3);
    // u_x: central differences; the boundary values u_0 = u_{n+1} = 0 drop out,
    // so the matrix is exactly skew-symmetric
    for (int i = 0; i < n; i++) {
        if (i - 1 >= 0) A.at(i, i - 1) += -c1;
        if (i + 1 < n) A.at(i, i + 1) += c1;
    }
    // u_xxx
    for (int i = 0; i < n; i++) {
        if (i == 0) {
            // one-sided second-order stencil through x_0 = 0 (value pinned)
            A.at(0, 0) += 10 * c3;
            A.at(0, 1) += -12 * c3;
            A.at(0, 2) += 6 * c3;
            A.at(0, 3) += -c3;
        } else if (i == n - 1) {
            // ghost point from u_x(L) = 0: u_{n+2} = u_n
            A.at(i, i) += c3;
            A.at(i, i - 1) += 2 * c3;
            A.at(i, i - 2) += -c3;
        } else {
            if (i - 2 >= 0) A.at(i, i - 2) += -c3;
            A.at(i, i - 1) += 2 * c3;
            A.at(i, i + 1) += -2 * c3;
            if (i + 2 < n) A.at(i, i + 2) += c3;
        }
    }
    return A;
}

Band lhs_matrix(const SimGrid& g, const Band& A) {
    Band M(g.n_x, 3, 3);
    double half_dt = g.step() * g.theta;
    for (int i = 0; i < g.n_x; i++)
        for (int j = std::max(0, i - 3); j <= std::min(g.n_x - 1, i + 3); j++)
            M.at(i, j) = (i == j ? 1.0 : 0.0) + half_dt * A.get(i, j);
    return M;
}

Band rhs_matrix(const SimGrid& g, const Band& A) {
    Band M(g.n_x, 3, 3);
    double half_dt = g.step() * (1.0 - g.theta);
    for (int i = 0; i < g.n_x; i++)
        for (int j = std::max(0, i - 3); j <= std::min(g.n_x - 1, i + 3); j++)
            M.at(i, j) = (i == j ? 1.0 : 0.0) - half_dt * A.get(i, j);
    return M;
}

} // namespace

KdvSolver::KdvSolver(const SimGrid& grid)
    : grid_(grid), A_(build_operator(grid)), rhs_mat_(rhs_matrix(grid, A_)),
      lu_(lhs_matrix(grid, A_)) {
    if (grid.n_x < 8) throw std::invalid_argument("KdvSolver: n_x too small");
}

SimState KdvSolver::make_state(const std::function<double(double)>& u0) const {
    std::vector<double> u(static_cast<std::size_t>(grid_.n_x));
    for (int i = 0; i < grid_.n_x; i++) u[static_cast<std::size_t>(i)] = u0(grid_.x(i));
    return make_state(std::move(u));
}

SimState KdvSolver::make_state(std::vector<double> u0) const {
    SimState s;
    s.u = std::move(u0);
    double tr = trace_ux0(s.u);
    s.last_trace_sq = tr * tr;
    return s;
}

double KdvSolver::l2_norm(const std::vector<double>& u) const {
    double acc = 0.0;
    for (double v : u) acc += v * v;
    return std::sqrt(acc * grid_.dx());
}

double KdvSolver::trace_ux0(const std::vector<double>& u) const {
    return (4.0 * u[0] - u[1]) / (2.0 * grid_.dx());
}

void KdvSolver::nonlinearity(const std::vector<double>& u, std::vector<double>& out) const {
    const int n = grid_.n_x;
    const double c1 = 1.0 / (2.0 * grid_.dx());
    out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) {
        double up = i + 1 < n ? u[static_cast<std::size_t>(i + 1)] : 0.0;
        double um = i - 1 >= 0 ? u[static_cast<std::size_t>(i - 1)] : 0.0;
        double dsq = (up * up - um * um) * c1;
        double du = (up - um) * c1;
        out[static_cast<std::size_t>(i)] = (dsq + u[static_cast<std::size_t>(i)] * du) / 3.0;
    }
}

void KdvSolver::finish_step(SimState& s, std::vector<double>&& unew) const {
    s.u = std::move(unew);
    s.t += grid_.step();
    double tr = trace_ux0(s.u);
    double tr_sq = tr * tr;
    s.trace_accumulator += 0.5 * grid_.step() * (s.last_trace_sq + tr_sq);
    s.last_trace_sq = tr_sq;
}

void KdvSolver::step_linear(SimState& s) const {
    std::vector<double> rhs;
    rhs_mat_.mul(s.u, rhs);
    lu_.solve(rhs);
    finish_step(s, std::move(rhs));
}

void KdvSolver::step_forced(SimState& s, const std::vector<double>& forcing_mid) const {
    std::vector<double> rhs;
    rhs_mat_.mul(s.u, rhs);
    const double dt = grid_.step();
    for (int i = 0; i < grid_.n_x; i++) rhs[static_cast<std::size_t>(i)] -= dt * forcing_mid[static_cast<std::size_t>(i)];
    lu_.solve(rhs);
    finish_step(s, std::move(rhs));
}

void KdvSolver::step_nonlinear(SimState& s) const {
    const int n = grid_.n_x;
    const double dt = grid_.step();
    std::vector<double> base, unew = s.u, mid(static_cast<std::size_t>(n)), nl, rhs;
    rhs_mat_.mul(s.u, base);
    bool converged = false;
    for (int it = 0; it < 50; it++) {
        for (int i = 0; i < n; i++)
            mid[static_cast<std::size_t>(i)] = 0.5 * (s.u[static_cast<std::size_t>(i)] + unew[static_cast<std::size_t>(i)]);
        nonlinearity(mid, nl);
        rhs = base;
        for (int i = 0; i < n; i++) rhs[static_cast<std::size_t>(i)] -= dt * nl[static_cast<std::size_t>(i)];
        lu_.solve(rhs);
        double diff = 0.0;
        for (int i = 0; i < n; i++) {
            double d = std::fabs(rhs[static_cast<std::size_t>(i)] - unew[static_cast<std::size_t>(i)]);
            if (!std::isfinite(d)) {
                diff = std::numeric_limits<double>::infinity();
                break;
            }
            diff = std::max(diff, d);
        }
        unew.swap(rhs);
        if (!std::isfinite(diff)) break; // blew up, no point iterating further
        if (diff < 1e-12) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw std::runtime_error("step_nonlinear: fixed point stalled, reduce dt");
    finish_step(s, std::move(unew));
}

// ---------------------------------------------------------------------------
// Projection onto M
// ---------------------------------------------------------------------------

MProjection project_M(const std::vector<double>& u0, const SimGrid& grid,
                      const CriticalLength& len) {
    const int n = grid.n_x;
    if (static_cast<int>(u0.size()) != n) throw std::invalid_argument("project_M: size mismatch");
    const double dx = grid.dx();

    MProjection P;
    struct Entry {
        int pair;
        bool real_part;
    };
    std::vector<Entry> entries;
    for (int m = 0; m < len.n_L; m++) {
        Mode mode = mode_of(len.pairs[static_cast<std::size_t>(m)]);
        TermSum ps = psi_terms(mode);
        std::vector<double> re(static_cast<std::size_t>(n)), im(static_cast<std::size_t>(n));
        for (int i = 0; i < n; i++) {
            cplx v = ps.eval(grid.x(i));
            re[static_cast<std::size_t>(i)] = v.real();
            im[static_cast<std::size_t>(i)] = v.imag();
        }
        if (mode.q != 0.0) { // Re psi vanishes identically when p = 0
            P.basis.push_back(std::move(re));
            entries.push_back({m, true});
        }
        P.basis.push_back(std::move(im));
        entries.push_back({m, false});
    }

    const int nb = static_cast<int>(P.basis.size());
    P.gram.assign(static_cast<std::size_t>(nb) * nb, 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(nb), 0.0);
    for (int a = 0; a < nb; a++) {
        for (int b = a; b < nb; b++) {
            double s = 0.0;
            for (int i = 0; i < n; i++)
                s += P.basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * P.basis[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
            P.gram[static_cast<std::size_t>(a) * nb + b] = P.gram[static_cast<std::size_t>(b) * nb + a] = s * dx;
        }
        double s = 0.0;
        for (int i = 0; i < n; i++) s += P.basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * u0[static_cast<std::size_t>(i)];
        rhs[static_cast<std::size_t>(a)] = s * dx;
    }

    // Cholesky with a conditioning guard
    std::vector<double> Lc = P.gram;
    auto at = [&](int i, int j) -> double& { return Lc[static_cast<std::size_t>(i) * nb + j]; };
    double max_diag = 0.0;
    for (int i = 0; i < nb; i++) max_diag = std::max(max_diag, at(i, i));
    for (int c = 0; c < nb; c++) {
        for (int r = c; r < nb; r++) {
            double s = at(r, c);
            for (int k2 = 0; k2 < c; k2++) s -= at(r, k2) * at(c, k2);
            if (r == c) {
                if (s <= 1e-12 * max_diag)
                    throw std::runtime_error("project_M: Gram matrix ill-conditioned (refine the grid)");
                at(c, c) = std::sqrt(s);
            } else {
                at(r, c) = s / at(c, c);
            }
        }
    }
    std::vector<double> coef = rhs;
    for (int r = 0; r < nb; r++) {
        for (int c = 0; c < r; c++) coef[static_cast<std::size_t>(r)] -= at(r, c) * coef[static_cast<std::size_t>(c)];
        coef[static_cast<std::size_t>(r)] /= at(r, r);
    }
    for (int r = nb - 1; r >= 0; r--) {
        for (int c = r + 1; c < nb; c++) coef[static_cast<std::size_t>(r)] -= at(c, r) * coef[static_cast<std::size_t>(c)];
        coef[static_cast<std::size_t>(r)] /= at(r, r);
    }

    P.u01.assign(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < nb; a++)
        for (int i = 0; i < n; i++)
            P.u01[static_cast<std::size_t>(i)] += coef[static_cast<std::size_t>(a)] * P.basis[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
    P.u02.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) P.u02[static_cast<std::size_t>(i)] = u0[static_cast<std::size_t>(i)] - P.u01[static_cast<std::size_t>(i)];

    // u01 = Re( sum alpha_m psi_m ): coefficient of Re psi is Re alpha,
    // coefficient of Im psi is -Im alpha
    P.alpha.assign(static_cast<std::size_t>(len.n_L), cplx(0));
    for (int e = 0; e < nb; e++) {
        const auto& en = entries[static_cast<std::size_t>(e)];
        if (en.real_part)
            P.alpha[static_cast<std::size_t>(en.pair)] += coef[static_cast<std::size_t>(e)];
        else
            P.alpha[static_cast<std::size_t>(en.pair)] -= cplx(0, 1) * coef[static_cast<std::size_t>(e)];
    }
    return P;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need matching series of length >= 2");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); i++) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

PowerSeriesResult power_series_experiment(const CriticalLength& len,
                                          const std::vector<double>& epsilon_list,
                                          double T, const SimGrid& grid) {
    if (epsilon_list.empty()) throw std::invalid_argument("power_series_experiment: empty epsilon list");
    KdvSolver solver(grid);
    const int n = grid.n_x;
    const double dt = grid.step();
    const int nsteps = static_cast<int>(std::ceil(T / dt));

    // normalized M-data: alpha = i for a p = 0 mode, 1 otherwise, then scaled
    std::vector<double> u0(static_cast<std::size_t>(n));
    {
        Mode mode = mode_of(len.pairs.front());
        cplx a = mode.q == 0.0 ? cplx(0, 1) : cplx(1, 0);
        TermSum ps = psi_terms(mode);
        for (int i = 0; i < n; i++) u0[static_cast<std::size_t>(i)] = (a * ps.eval(grid.x(i))).real();
    }
    {
        double nu = solver.l2_norm(u0);
        for (auto& v : u0) v /= nu;
    }

    // linear and forced runs are epsilon-independent: record their traces once
    std::vector<double> tr1(static_cast<std::size_t>(nsteps + 1)), tr2(static_cast<std::size_t>(nsteps + 1));
    {
        SimState s1 = solver.make_state(u0);
        SimState s2 = solver.make_state(std::vector<double>(static_cast<std::size_t>(n), 0.0));
        tr1[0] = solver.trace_ux0(s1.u);
        tr2[0] = solver.trace_ux0(s2.u);
        std::vector<double> mid(static_cast<std::size_t>(n)), f;
        for (int k2 = 0; k2 < nsteps; k2++) {
            std::vector<double> prev = s1.u;
            solver.step_linear(s1);
            for (int i = 0; i < n; i++)
                mid[static_cast<std::size_t>(i)] = 0.5 * (prev[static_cast<std::size_t>(i)] + s1.u[static_cast<std::size_t>(i)]);
            solver.nonlinearity(mid, f);
            solver.step_forced(s2, f);
            tr1[static_cast<std::size_t>(k2 + 1)] = solver.trace_ux0(s1.u);
            tr2[static_cast<std::size_t>(k2 + 1)] = solver.trace_ux0(s2.u);
        }
    }

    PowerSeriesResult res;
    for (double eps : epsilon_list) {
        std::vector<double> ue(static_cast<std::size_t>(n));
        for (int i = 0; i < n; i++) ue[static_cast<std::size_t>(i)] = eps * u0[static_cast<std::size_t>(i)];
        SimState s = solver.make_state(std::move(ue));
        double acc = 0.0;
        double prev_sq = 0.0;
        {
            double d0 = eps * tr1[0] + eps * eps * tr2[0] - solver.trace_ux0(s.u);
            prev_sq = d0 * d0;
        }
        for (int k2 = 0; k2 < nsteps; k2++) {
            solver.step_nonlinear(s);
            double d = eps * tr1[static_cast<std::size_t>(k2 + 1)] + eps * eps * tr2[static_cast<std::size_t>(k2 + 1)]
                     - solver.trace_ux0(s.u);
            double dsq = d * d;
            acc += 0.5 * dt * (prev_sq + dsq);
            prev_sq = dsq;
        }
        res.epsilon.push_back(eps);
        res.trace_error.push_back(std::sqrt(acc));
    }
    if (res.epsilon.size() >= 2) res.slope = loglog_slope(res.epsilon, res.trace_error);
    return res;
}

namespace {

DecayResult run_instrumented(KdvSolver& solver, SimState s, bool nonlinear, double T,
                             int sample_stride) {
    const double dt = solver.grid().step();
    const int nsteps = static_cast<int>(std::ceil(T / dt));
    DecayResult r;
    r.u0_norm = solver.l2_norm(s.u);
    const double E0 = r.u0_norm * r.u0_norm;
    double Eprev = E0;
    r.series.push_back({0.0, r.u0_norm, 0.0});
    r.trace_samples.push_back(solver.trace_ux0(s.u));
    for (int k2 = 1; k2 <= nsteps; k2++) {
        if (nonlinear)
            solver.step_nonlinear(s);
        else
            solver.step_linear(s);
        double nrm = solver.l2_norm(s.u);
        double E = nrm * nrm;
        r.max_step_growth = std::max(r.max_step_growth, E - Eprev);
        r.max_energy_defect = std::max(r.max_energy_defect, std::fabs(E + s.trace_accumulator - E0));
        if (r.T_half < 0 && nrm <= 0.5 * r.u0_norm) r.T_half = s.t;
        Eprev = E;
        if (k2 % sample_stride == 0 || k2 == nsteps) {
            r.series.push_back({s.t, nrm, s.trace_accumulator});
            r.trace_samples.push_back(solver.trace_ux0(s.u));
        }
    }
    // tail fit on [T/4, T]
    std::vector<double> xs, ys;
    for (const auto& p : r.series)
        if (p.t >= T / 4 && p.norm > 0) {
            xs.push_back(p.t);
            ys.push_back(p.norm);
        }
    if (xs.size() >= 2) r.tail_slope = loglog_slope(xs, ys);
    return r;
}

} // namespace

DecayResult decay_experiment(const CriticalLength& len, double eps, double T,
                             const SimGrid& grid, int sample_stride) {
    KdvSolver solver(grid);
    const int n = grid.n_x;
    Mode mode = mode_of(len.pairs.front());
    cplx a = mode.q == 0.0 ? cplx(0, 1) : cplx(1, 0);
    TermSum ps = psi_terms(mode);
    std::vector<double> u0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) u0[static_cast<std::size_t>(i)] = (a * ps.eval(grid.x(i))).real();
    double nu = solver.l2_norm(u0);
    for (auto& v : u0) v *= eps / nu;
    return run_instrumented(solver, solver.make_state(std::move(u0)), true, T, sample_stride);
}

DecayResult evolve(const std::function<double(double)>& u0, bool nonlinear, double T,
                   const SimGrid& grid, int sample_stride) {
    KdvSolver solver(grid);
    return run_instrumented(solver, solver.make_state(u0), nonlinear, T, sample_stride);
}

LowerBoundResult lower_bound_experiment(const CriticalLength& len, int m, double eps,
                                        double T, const SimGrid& grid,
                                        LowerBoundProfile profile) {
    if (eps <= 0.0) throw std::invalid_argument("lower_bound_experiment: eps must be > 0");
    KdvSolver solver(grid);
    const int n = grid.n_x;
    const auto& cp = len.pairs.at(static_cast<std::size_t>(m));
    Mode mode = mode_of(cp);

    AuxSolution phi = solve_phi(len, m, m);
    AuxSolution phit = solve_phi_tilde(len, m, m);

    cplx a;
    TermSum u1_profile;
    if (profile == LowerBoundProfile::Phi) {
        a = cplx(1, 0); // Re(a phi) nontrivial: phi'(0) != 0
        u1_profile = phi.phi;
    } else {
        a = mode.q == 0.0 ? cplx(0, 1) : cplx(1, 0);
        u1_profile = psi_terms(mode);
    }

    std::vector<double> u0(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) {
        double x = grid.x(i);
        cplx u1 = a * u1_profile.eval(x);
        cplx u2 = (a * a * phi.eval(x) + std::conj(a * a * phi.eval(x))
                   + 2.0 * std::norm(a) * phit.eval(x)) / 8.0;
        u0[static_cast<std::size_t>(i)] = eps * u1.real() + eps * eps * u2.real();
    }

    DecayResult run = run_instrumented(solver, solver.make_state(std::move(u0)), true, T, 16);

    LowerBoundResult res;
    res.eps = eps;
    res.tau_star = std::log(1.0 / eps) / eps;
    res.series = run.series;
    res.floor = std::numeric_limits<double>::infinity();
    double best_t_gap = std::numeric_limits<double>::infinity();
    for (const auto& p : run.series) {
        if (p.t >= 1.0)
            res.floor = std::min(res.floor, p.norm * p.t / std::log(p.t + 2.0));
        double gap = std::fabs(p.t - res.tau_star);
        if (gap < best_t_gap) {
            best_t_gap = gap;
            res.norm_at_tau_star = p.norm;
        }
    }
    if (!std::isfinite(res.floor)) res.floor = 0.0;
    return res;
}

double w_consistency_defect(const CriticalLength& len, const std::vector<cplx>& alpha,
                            const SimGrid& grid, double t0) {
    if (static_cast<int>(alpha.size()) != len.n_L)
        throw std::invalid_argument("w_consistency_defect: alpha size mismatch");
    KdvSolver solver(grid);
    const int n = grid.n_x;
    const double dt = grid.step();

    // W(t,x) = (V1 + conj V1 + 2 V2)/8 built from the auxiliary functions
    std::vector<AuxSolution> phis, phits;
    for (int i = 0; i < len.n_L; i++)
        for (int j = 0; j < len.n_L; j++) {
            phis.push_back(solve_phi(len, i, j));
            phits.push_back(solve_phi_tilde(len, i, j));
        }
    auto W_at = [&](double t, double x) {
        cplx v1(0), v2(0);
        for (int i = 0; i < len.n_L; i++)
            for (int j = 0; j < len.n_L; j++) {
                const auto& pi = len.pairs[static_cast<std::size_t>(i)];
                const auto& pj = len.pairs[static_cast<std::size_t>(j)];
                const auto& f = phis[static_cast<std::size_t>(i * len.n_L + j)];
                const auto& ft = phits[static_cast<std::size_t>(i * len.n_L + j)];
                cplx ai = alpha[static_cast<std::size_t>(i)], aj = alpha[static_cast<std::size_t>(j)];
                v1 += ai * aj * f.eval(x) * std::exp(cplx(0, -(pi.p + pj.p) * t));
                v2 += ai * std::conj(aj) * ft.eval(x) * std::exp(cplx(0, -(pi.p - pj.p) * t));
            }
        return ((v1 + std::conj(v1) + 2.0 * v2) / 8.0).real();
    };
    auto U_at = [&](double t, double x) {
        cplx u(0);
        for (int i = 0; i < len.n_L; i++) {
            Mode mode = mode_of(len.pairs[static_cast<std::size_t>(i)]);
            u += alpha[static_cast<std::size_t>(i)] * Psi(mode, t, x);
        }
        return u.real();
    };

    std::vector<double> w0(static_cast<std::size_t>(n)), w1(static_cast<std::size_t>(n)), umid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; i++) {
        double x = grid.x(i);
        w0[static_cast<std::size_t>(i)] = W_at(t0, x);
        w1[static_cast<std::size_t>(i)] = W_at(t0 + dt, x);
        umid[static_cast<std::size_t>(i)] = U_at(t0 + dt / 2, x);
    }
    std::vector<double> Aw0, Aw1, f;
    solver.spatial_operator().mul(w0, Aw0);
    solver.spatial_operator().mul(w1, Aw1);
    solver.nonlinearity(umid, f);
    double defect = 0.0;
    for (int i = 0; i < n; i++) {
        double d = (w1[static_cast<std::size_t>(i)] - w0[static_cast<std::size_t>(i)]) / dt
                 + 0.5 * (Aw0[static_cast<std::size_t>(i)] + Aw1[static_cast<std::size_t>(i)])
                 + f[static_cast<std::size_t>(i)];
        defect = std::max(defect, std::fabs(d));
    }
    return defect;
}

} // namespace kdv
