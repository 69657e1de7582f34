#pragma once

#include "kdvcrit/arithmetic.hpp"
#include "kdvcrit/aux_functions.hpp"
#include "kdvcrit/common.hpp"

#include <functional>
#include <vector>

namespace kdv {

// ---------------------------------------------------------------------------
// Grid and state
// ---------------------------------------------------------------------------

struct SimGrid {
    double L = 2.0 * PI;
    int n_x = 511;        // interior points
    double dt = 0.0;      // 0 selects dt = dx
    double theta = 0.5;   // time centering; 0.5 is the implicit midpoint rule

    double dx() const { return L / (n_x + 1); }
    double step() const { return dt > 0.0 ? dt : dx(); }
    double x(int i) const { return (i + 1) * dx(); } // i in [0, n_x)
};

struct SimState {
    double t = 0.0;
    std::vector<double> u;          // interior values; u(0)=u(L)=0 are implicit
    double trace_accumulator = 0.0; // int_0^t |u_x(s,0)|^2 ds, trapezoid in t
    double last_trace_sq = 0.0;
};

// ---------------------------------------------------------------------------
// Banded matrices (bandwidth 3 covers the third-derivative closures)
// ---------------------------------------------------------------------------

class Band {
public:
    Band() = default;
    Band(int n, int kl, int ku);
    double& at(int i, int j);
    double get(int i, int j) const;
    void mul(const std::vector<double>& x, std::vector<double>& y) const;
    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

private:
    int n_ = 0, kl_ = 0, ku_ = 0;
    std::vector<double> a_;
};

/// LU factorization with partial pivoting in LAPACK-style band storage.
class BandLU {
public:
    explicit BandLU(const Band& b);
    void solve(std::vector<double>& rhs) const;

private:
    int n_, kl_, ku_;
    std::vector<double> ab_;
    std::vector<int> piv_;
};

// ---------------------------------------------------------------------------
// The solver: one implicit-midpoint step of
//   u_t + u_x + u_xxx (+ u u_x) (+ forcing) = 0,  u(0)=u(L)=0, u_x(L)=0.
// Spatial operator: second-order central differences, one-sided second-order
// closure at the left end, ghost elimination of u_x(L)=0 at the right end.
// The nonlinearity is the skew-symmetric split (1/3)( (u^2)_x + u u_x ), so
// the discrete energy law has no spurious convective production.
// ---------------------------------------------------------------------------

class KdvSolver {
public:
    explicit KdvSolver(const SimGrid& grid);

    const SimGrid& grid() const { return grid_; }
    const Band& spatial_operator() const { return A_; }

    SimState make_state(const std::function<double(double)>& u0) const;
    SimState make_state(std::vector<double> u0) const;

    void step_linear(SimState& s) const;
    /// Fixed-point resolution of the midpoint nonlinearity to 1e-12;
    /// throws after 50 iterations (dt too large for the data).
    void step_nonlinear(SimState& s) const;
    /// Linear step with a source term sampled at the half step.
    void step_forced(SimState& s, const std::vector<double>& forcing_mid) const;

    double l2_norm(const std::vector<double>& u) const;
    /// Second-order one-sided boundary trace u_x(t, 0).
    double trace_ux0(const std::vector<double>& u) const;
    /// The skew-split nonlinearity N(u), exactly energy-neutral in the
    /// discrete inner product.
    void nonlinearity(const std::vector<double>& u, std::vector<double>& out) const;

private:
    void finish_step(SimState& s, std::vector<double>&& unew) const;

    SimGrid grid_;
    Band A_;        // u_x + u_xxx
    Band rhs_mat_;  // I - dt/2 A
    BandLU lu_;     // I + dt/2 A
};

// ---------------------------------------------------------------------------
// Projection onto the uncontrollable subspace
// ---------------------------------------------------------------------------

struct MProjection {
    std::vector<std::vector<double>> basis; // grid samples, zero modes dropped
    std::vector<double> gram;               // row-major, basis.size()^2
    std::vector<double> u01, u02;           // u0 = u01 + u02, u02 orthogonal
    std::vector<cplx> alpha;                // one per pair of the length
};

/// Gram least-squares projection of u0 onto span{Re psi_m, Im psi_m}.
/// Throws when the Gram matrix is numerically singular (under-resolved grid).
MProjection project_M(const std::vector<double>& u0, const SimGrid& grid,
                      const CriticalLength& len);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct SeriesPoint {
    double t = 0.0;
    double norm = 0.0;
    double trace_accum = 0.0;
};

struct PowerSeriesResult {
    std::vector<double> epsilon;
    std::vector<double> trace_error; // e(eps) = ||(eps u1 + eps^2 u2 - u)_x(.,0)||_{L2(0,T)}
    double slope = 0.0;              // least-squares fit of log e vs log eps
};

/// The cubic-remainder law: solves the linear, forced and nonlinear systems
/// on a shared grid and fits the trace-error exponent.
PowerSeriesResult power_series_experiment(const CriticalLength& len,
                                          const std::vector<double>& epsilon_list,
                                          double T, const SimGrid& grid);

struct DecayResult {
    std::vector<SeriesPoint> series;          // sampled each `sample_stride` steps
    std::vector<double> trace_samples;        // u_x(t,0) at the same samples
    double T_half = -1.0;                     // first t with ||u|| <= ||u0||/2
    double tail_slope = 0.0;                  // log-log fit on [T/4, T]
    double max_step_growth = 0.0;             // max over steps of ||u||^2 increase
    double max_energy_defect = 0.0;           // max |‖u‖^2 + trace_acc - ‖u0‖^2|
    double u0_norm = 0.0;
};

DecayResult decay_experiment(const CriticalLength& len, double eps, double T,
                             const SimGrid& grid, int sample_stride = 16);

/// Same instrumentation for arbitrary initial data and linear/nonlinear mode;
/// the building block of the decay/observability comparisons.
DecayResult evolve(const std::function<double(double)>& u0, bool nonlinear, double T,
                   const SimGrid& grid, int sample_stride = 16);

enum class LowerBoundProfile { Phi, Psi };

struct LowerBoundResult {
    double eps = 0.0;
    double tau_star = 0.0;       // eps^{-1} ln(1/eps), the certified-time scale
    double norm_at_tau_star = 0.0;
    double floor = 0.0;          // min over t >= 1 of ||u(t)|| t / ln(t+2)
    std::vector<SeriesPoint> series;
};

LowerBoundResult lower_bound_experiment(const CriticalLength& len, int m, double eps,
                                        double T, const SimGrid& grid,
                                        LowerBoundProfile profile = LowerBoundProfile::Phi);

/// Defect of the closed-form boundary-layer solution W(t,x) under one
/// discrete step; second-order small and used as a consistency ladder.
double w_consistency_defect(const CriticalLength& len, const std::vector<cplx>& alpha,
                            const SimGrid& grid, double t0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kdv
