#pragma once

#include "kdvcrit/aux_functions.hpp"
#include "kdvcrit/common.hpp"

#include <string>
#include <vector>

namespace kdv {

/// The quasi-periodic boundary trace
///   g(t) = sum_{j1,j2} ( a_{j1} a_{j2} M_{j1,j2} e^{-i(q_{j1}+q_{j2}) t}
///                      + conj(...) e^{+i(q_{j1}+q_{j2}) t}
///                      + 2 a_{j1} conj(a_{j2}) N_{j1,j2} e^{-i(q_{j1}-q_{j2}) t} ).
struct TraceSignal {
    int n = 0;
    std::vector<cplx> alpha;
    std::vector<double> q; // strictly increasing after canonicalize()
    std::vector<cplx> M;   // row-major n x n
    std::vector<cplx> N;

    cplx m(int i, int j) const { return M[static_cast<std::size_t>(i) * n + j]; }
    cplx nn(int i, int j) const { return N[static_cast<std::size_t>(i) * n + j]; }

    /// Sort by ascending q, permuting alpha and both matrices consistently.
    void canonicalize();

    /// Hypothesis check (distinct q; M_jj != 0; the q = 0 row real/imaginary
    /// structure; sum |a|^2 > 0). Returns human-readable violations; an
    /// empty list means the non-vanishing guarantees apply.
    std::vector<std::string> admissibility_violations() const;

    /// Largest angular frequency appearing in g (max over q_i + q_j and
    /// |q_i - q_j|); zero for a constant signal.
    double max_frequency() const;
};

/// Signal of one critical length: q_m = p_m, M and N from the auxiliary
/// construction, the given mode amplitudes.
TraceSignal make_trace_signal(const CriticalLength& len, const std::vector<cplx>& alpha);

cplx g_eval(const TraceSignal& s, double t);

/// Minimum Simpson point count resolving every oscillation of g on a
/// window of width tau (20 points per shortest period, floor 64).
int window_floor_points(const TraceSignal& s, double tau);

/// sqrt( int_tau^{2 tau} |g|^2 dt ) by composite Simpson. quad_points <= 0
/// selects the per-period floor automatically; explicit values below the
/// floor are honored (the CLI warns).
double window_norm(const TraceSignal& s, double tau, int quad_points = 0);

struct ScanResult {
    double t = 0.0;
    double value = 0.0; // |g(t)|
};

/// Grid scan of |g| on [0, t_max] at 40 points per fastest period, with
/// golden-section refinement around the best grid point.
ScanResult find_nonvanishing(const TraceSignal& s, double t_max);

struct GammaFloorOptions {
    double gamma1 = 0.5;
    double gamma2 = 2.0;
    int sample_count = 1000;
    std::uint64_t seed = 20240901;
    int threads = 1;
};

/// The seeded coefficient sampler behind gamma_floor: sample `index` of the
/// family keeps q, M, N and draws alpha with gamma1 <= sum |a|^2 <= gamma2,
/// purely imaginary on zero-frequency rows.
TraceSignal gamma_sample(const TraceSignal& base, const GammaFloorOptions& opt, int index);

/// Empirical floor of the window norms over random admissible coefficient
/// vectors with gamma1 <= sum |a|^2 <= gamma2 and tau in tau_list. This is
/// an estimate of the uniform lower bound, not a proof; samples are seeded
/// per index so the result is independent of the thread count.
double gamma_floor(const TraceSignal& base, const std::vector<double>& tau_list,
                   const GammaFloorOptions& opt = {});

} // namespace kdv
