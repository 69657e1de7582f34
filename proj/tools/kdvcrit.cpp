// kdvcrit: critical-length arithmetic, the s-condition sweep, auxiliary
// function construction, quasi-periodic trace evaluation and the KdV
// decay experiments, behind one subcommand-style binary.

#include "kdvcrit/arithmetic.hpp"
#include "kdvcrit/aux_functions.hpp"
#include "kdvcrit/condition.hpp"
#include "kdvcrit/kdv_sim.hpp"
#include "kdvcrit/quasi_trace.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.2.0";

int thread_count(int cli_threads) {
    if (const char* env = std::getenv("KDVCRIT_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    if (cli_threads > 0) return cli_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// every run emits one manifest: command line, config hash, version,
// wall time, and digests of the files it read and wrote
struct Manifest {
    std::string command_line;
    std::string explicit_path; // --manifest
    std::vector<std::string> inputs, outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void emit() const {
        json j;
        j["tool"] = std::string("kdvcrit ") + kVersion;
        j["command_line"] = command_line;
        std::uint64_t cfg = kdv::fnv1a64(command_line.data(), command_line.size());
        json in = json::array(), out = json::array();
        for (const auto& p : inputs) {
            std::uint64_t h = kdv::fnv1a64_file(p);
            cfg ^= h;
            in.push_back({{"path", p}, {"fnv1a64", h}});
        }
        j["config_hash"] = cfg;
        for (const auto& p : outputs)
            out.push_back({{"path", p}, {"fnv1a64", kdv::fnv1a64_file(p)}});
        j["inputs"] = in;
        j["outputs"] = out;
        j["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        std::string path = explicit_path;
        if (path.empty() && !outputs.empty()) path = outputs.front() + ".manifest.json";
        if (!path.empty()) {
            std::ofstream f(path, std::ios::trunc);
            f << j.dump(2) << "\n";
        } else {
            std::cerr << j.dump() << "\n";
        }
    }
};

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; i++) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

void write_series_csv(const std::string& path, const kdv::DecayResult& r) {
    std::ofstream f(path, std::ios::trunc);
    f << "t,norm,trace_accum\n";
    for (const auto& p : r.series)
        f << kdv::fmt17(p.t) << ',' << kdv::fmt17(p.norm) << ',' << kdv::fmt17(p.trace_accum)
          << '\n';
}

void write_trace_csv(const std::string& path, const kdv::DecayResult& r) {
    std::ofstream f(path, std::ios::trunc);
    f << "t,ux0\n";
    for (std::size_t i = 0; i < r.series.size(); i++)
        f << kdv::fmt17(r.series[i].t) << ',' << kdv::fmt17(r.trace_samples[i]) << '\n';
}

json length_report(const kdv::CriticalLength& len) { return json::parse(kdv::to_json(len)); }

// --------------------------------------------------------------------------
// verify: the invariant suite
// --------------------------------------------------------------------------

struct VerifyRunner {
    int failures = 0;
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
        if (!ok) failures++;
    }
};

int run_verify(bool full, int threads) {
    using namespace kdv;
    VerifyRunner v;

    { // integer lemmas, exact arithmetic
        long long b = full ? 5000 : 300;
        auto r = verify_lemma_half(b);
        v.check("lemma: (2k+l)(2l+k)(k-l) never equals A^{3/2}, k,l <= " + std::to_string(b),
                r.holds);
        long long am = full ? 20000 : 2000;
        auto r2 = verify_lemma_double(am);
        v.check("lemma: B2 = 2 B1 has no same-A solution, A <= " + std::to_string(am), r2.holds);
    }

    { // |s| permutation invariance and the det K2 identity
        auto st = sigma_roots(11, 2);
        cplx alpha = std::exp(cplx(0, 4 * PI * 9.0 / 3.0));
        double base = std::abs(s_from_sigma(st.sigma, alpha));
        double worst = 0.0;
        int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (auto& pm : perm) {
            std::array<cplx, 3> ss{st.sigma[static_cast<std::size_t>(pm[0])],
                                   st.sigma[static_cast<std::size_t>(pm[1])],
                                   st.sigma[static_cast<std::size_t>(pm[2])]};
            worst = std::max(worst, std::abs(std::abs(s_from_sigma(ss, alpha)) - base));
        }
        v.check("|s| invariant under all sigma permutations", worst < 1e-10 * base);
        std::array<cplx, 3> syn{cplx(1.3, 0.2), cplx(-0.9, 0.4), cplx(-0.4, -0.6)};
        cplx lhs = det_k2(syn, alpha);
        cplx rhs = 4.0 * PI * PI / 9.0 * s_from_sigma(syn, alpha);
        v.check("det K2 = (4 pi^2/9) s on synthetic sigma",
                std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }

    { // E identity and D = E^2/3
        bool ok = true;
        for (long long k = 2; k <= 40 && ok; k += 3)
            for (long long l = 1; l < k && ok; l += 2) {
                Mode m = mode_of(make_pair(k, l));
                double e_closed = e_value(k, l);
                double e_sum = e_value_eta_sum(m);
                ok = std::abs(e_closed - e_sum) <= 1e-12 * std::abs(e_closed);
                cplx d = d_value(m, m, false);
                ok = ok && std::abs(d - cplx(e_closed * e_closed / 3.0)) <= 1e-12 * std::abs(d);
            }
        v.check("E eta-sum equals closed form; D = E^2/3", ok);
    }

    { // auxiliary residuals across the construction cases
        double worst_b = 0.0, worst_o = 0.0;
        auto absorb = [&](const AuxSolution& s) {
            auto r = aux_residuals(s);
            worst_b = std::max(worst_b, r.boundary / r.scale);
            worst_o = std::max(worst_o, r.ode / r.scale);
        };
        auto l21 = build_length(2, 1);
        auto l11 = build_length(1, 1);
        auto l91 = build_length(9, 1); // n_L = 2, both p != 0
        absorb(solve_phi(l21, 0, 0));
        absorb(solve_phi_tilde(l21, 0, 0));
        absorb(solve_phi(l11, 0, 0));
        absorb(solve_phi_tilde(l11, 0, 0));
        for (int i = 0; i < l91.n_L; i++)
            for (int j = 0; j < l91.n_L; j++) {
                absorb(solve_phi(l91, i, j));
                absorb(solve_phi_tilde(l91, i, j));
            }
        Mode s1 = synthetic_mode(0.15), s2 = synthetic_mode(degenerate_z() - 0.15);
        absorb(solve_phi_modes(s1, s2, 2 * PI, false, {}));
        v.check("aux boundary residuals < 1e-9 scale", worst_b < 1e-9,
                "worst " + fmt17(worst_b));
        v.check("aux ODE residuals < 1e-8 scale", worst_o < 1e-8, "worst " + fmt17(worst_o));
    }

    { // det Q zero set, spot
        auto len = build_length(2, 1);
        auto q0 = q_matrix(cplx(len.pairs[0].p), len.L);
        v.check("det Q(p_m) vanishes", std::abs(q0.det) < 1e-8 * q0.scale);
        auto q1 = q_matrix(cplx(0.05), len.L);
        v.check("det Q off the zero set stays away from 0", std::abs(q1.det) > 1e-6 * q1.scale);
        auto qq1 = q1_matrix(len.L);
        v.check("Q1 invertible", std::abs(qq1.det) > 1e-6 * qq1.scale);
    }

    { // quasi-trace basics
        TraceSignal s;
        s.n = 1;
        s.q = {0.0};
        s.alpha = {cplx(0, 0.7)};
        s.M = {cplx(0.0)};
        s.N = {cplx(-PI)};
        cplx g0 = g_eval(s, 0.0), g7 = g_eval(s, 7.3);
        cplx expect = 2.0 * 0.49 * cplx(-PI);
        v.check("constant signal: g = 2|c|^2 N11",
                std::abs(g0 - expect) < 1e-12 && std::abs(g7 - expect) < 1e-12);
        double w1 = window_norm(s, 10.0);
        v.check("constant signal window norm = |g| sqrt(tau)",
                std::abs(w1 - std::abs(expect) * std::sqrt(10.0)) < 1e-8 * w1);
    }

    { // simulation: M-data exactness and the energy identity, desk size
        int nx = full ? 511 : 127;
        double T = full ? 50.0 : 10.0;
        SimGrid grid{2 * PI, nx, 0.0, 0.5};
        auto lin = evolve([](double x) { return 2.0 * (std::cos(x) - 1.0); }, false, T, grid);
        double u0n = lin.u0_norm;
        double drift = 0.0, maxtr = 0.0;
        for (std::size_t i = 0; i < lin.series.size(); i++) {
            drift = std::max(drift, std::fabs(lin.series[i].norm - u0n));
            maxtr = std::max(maxtr, std::fabs(lin.trace_samples[i]));
        }
        v.check("linear solver keeps M-data stationary", drift < 1e-3 * u0n,
                "drift " + fmt17(drift / u0n));
        v.check("M-data trace stays near zero", maxtr < 1e-3 * u0n,
                "max " + fmt17(maxtr / u0n));
        auto len = build_length(1, 1);
        auto nl = decay_experiment(len, 0.05, full ? 100.0 : 30.0, grid);
        v.check("nonlinear norm never increases", nl.max_step_growth <= 1e-12 * 0.05 * 0.05);
        v.check("discrete energy identity", nl.max_energy_defect < 1e-6 * 0.05 * 0.05 * (full ? 100.0 : 30.0),
                "defect " + fmt17(nl.max_energy_defect));
    }

    if (full) { // full-range sweep against its known minimum
        SweepOptions opt;
        opt.threads = threads;
        auto r = sweep_s(2000, opt);
        bool ok = r.argmin_k == 736 && r.argmin_l == 611
               && std::fabs(r.min_abs_s - 1.64e-5) <= 0.02 * 1.64e-5;
        v.check("sweep kmax=2000 matches min |s| = 1.64e-5 at (736,611)", ok,
                fmt17(r.min_abs_s) + " at (" + std::to_string(r.argmin_k) + ","
                    + std::to_string(r.argmin_l) + ")");
    }

    std::cout << (v.failures ? "verify: FAILURES " : "verify: all green ")
              << "(" << v.failures << " failed)\n";
    return v.failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical-length KdV toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Manifest manifest;
    manifest.command_line = join_args(argc, argv);
    std::string manifest_path;
    app.add_option("--manifest", manifest_path, "write the run manifest to this path");

    // ---- lengths ----
    auto* c_len = app.add_subcommand("lengths", "critical length record for a pair or an A");
    long long kl_k = 0, kl_l = 0, kl_A = 0;
    c_len->add_option("--k", kl_k);
    c_len->add_option("--l", kl_l);
    c_len->add_option("--A", kl_A);

    // ---- check ----
    auto* c_chk = app.add_subcommand("check", "decide the decay condition for a length");
    long long ck_k = 0, ck_l = 0;
    double ck_tol = 1e-9;
    c_chk->add_option("--k", ck_k)->required();
    c_chk->add_option("--l", ck_l)->required();
    c_chk->add_option("--tol", ck_tol);

    // ---- sweep ----
    auto* c_swp = app.add_subcommand("sweep", "min |s(k,l)| over 1 <= l < k <= kmax");
    long long sw_kmax = 2000;
    std::string sw_out, sw_ckpt;
    int sw_threads = 0;
    c_swp->add_option("--kmax", sw_kmax)->required();
    c_swp->add_option("--out", sw_out, "CSV table (k,l,A,p,re_s,im_s,abs_s)");
    c_swp->add_option("--threads", sw_threads);
    c_swp->add_option("--checkpoint", sw_ckpt, "resume file, updated every 1e5 pairs");

    // ---- aux ----
    auto* c_aux = app.add_subcommand("aux", "sample an auxiliary function to CSV");
    long long ax_k = 0, ax_l = 0;
    std::vector<int> ax_pair;
    bool ax_conj = false;
    int ax_samples = 400;
    std::string ax_out;
    c_aux->add_option("--k", ax_k)->required();
    c_aux->add_option("--l", ax_l)->required();
    c_aux->add_option("--pair", ax_pair, "pair indices m1 m2 (1-based), default 1 1")->expected(2);
    c_aux->add_flag("--conjugate", ax_conj, "construct the conjugated variant");
    c_aux->add_option("--samples", ax_samples);
    c_aux->add_option("--out", ax_out)->required();

    // ---- trace ----
    auto* c_trc = app.add_subcommand("trace", "evaluate a quasi-periodic trace signal");
    std::string tr_config, tr_out, tr_emit;
    double tr_tau = 10.0;
    int tr_samples = 2000, tr_points = 0;
    long long tr_k = 0, tr_l = 0;
    c_trc->add_option("--config", tr_config, "signal JSON {alpha,q,M,N}");
    c_trc->add_option("--tau", tr_tau);
    c_trc->add_option("--out", tr_out, "CSV t,re_g,im_g on [0, 2 tau]");
    c_trc->add_option("--samples", tr_samples);
    c_trc->add_option("--points", tr_points, "Simpson points (0 = per-period floor)");
    c_trc->add_option("--emit-config", tr_emit, "write the signal JSON of a length instead");
    c_trc->add_option("--k", tr_k, "with --emit-config: pair k");
    c_trc->add_option("--l", tr_l, "with --emit-config: pair l");

    // ---- simulate ----
    auto* c_sim = app.add_subcommand("simulate", "KdV initial-boundary-value experiments");
    long long sm_k = 1, sm_l = 1;
    double sm_eps = 0.05, sm_T = -1.0, sm_dt = 0.0;
    int sm_nx = 511, sm_stride = 16, sm_pair = 1;
    std::string sm_mode = "nonlinear", sm_out = "simout", sm_profile = "phi", sm_eps_list;
    c_sim->add_option("--k", sm_k);
    c_sim->add_option("--l", sm_l);
    c_sim->add_option("--eps", sm_eps);
    c_sim->add_option("--eps-list", sm_eps_list, "comma-separated, power-series mode");
    c_sim->add_option("--T", sm_T);
    c_sim->add_option("--nx", sm_nx);
    c_sim->add_option("--dt", sm_dt, "0 selects dt = dx");
    c_sim->add_option("--mode", sm_mode)
        ->check(CLI::IsMember({"linear", "nonlinear", "forced", "power-series", "decay", "lower-bound"}));
    c_sim->add_option("--out", sm_out, "output directory");
    c_sim->add_option("--sample-stride", sm_stride);
    c_sim->add_option("--profile", sm_profile)->check(CLI::IsMember({"phi", "psi"}));
    c_sim->add_option("--pair-index", sm_pair, "1-based pair index (lower-bound mode)");

    // ---- verify ----
    auto* c_vfy = app.add_subcommand("verify", "run the invariant suite");
    bool vf_quick = false, vf_full = false;
    int vf_threads = 0;
    c_vfy->add_flag("--quick", vf_quick);
    c_vfy->add_flag("--full", vf_full);
    c_vfy->add_option("--threads", vf_threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    manifest.explicit_path = manifest_path;

    try {
        if (*c_len) {
            if ((kl_k > 0) != (kl_l > 0)) {
                std::cerr << "lengths: --k and --l go together\n";
                return 2;
            }
            kdv::CriticalLength len;
            if (kl_k > 0) {
                if (kl_l > kl_k) {
                    std::cerr << "lengths: need k >= l >= 1\n";
                    return 2;
                }
                len = kdv::build_length(kl_k, kl_l);
            } else if (kl_A >= 3) {
                len = kdv::build_length_from_A(kl_A);
            } else {
                std::cerr << "lengths: give --k/--l or --A\n";
                return 2;
            }
            std::cout << length_report(len).dump(2) << "\n";
            manifest.emit();
            return 0;
        }

        if (*c_chk) {
            if (ck_l < 1 || ck_k < ck_l) {
                std::cerr << "check: need k >= l >= 1\n";
                return 2;
            }
            auto len = kdv::build_length(ck_k, ck_l);
            auto rep = kdv::check_condition(len, ck_tol);
            for (const auto& p : rep.pairs) {
                std::cout << "pair (" << p.k << "," << p.l << ")  p=" << kdv::fmt17(p.p);
                if (!p.p_zero)
                    std::cout << "  |s|=" << (p.abs_s >= 1e300 ? ">1e300" : kdv::fmt17(p.abs_s))
                              << (p.s_decided_nonzero ? "  s != 0"
                                                      : (p.s_undecided ? "  undecided" : "  s ~ 0"));
                std::cout << "\n";
            }
            int code = 1;
            switch (rep.verdict) {
            case kdv::Verdict::DimOne:
                std::cout << "verdict: dim M = 1 (decay guarantee applies)\n";
                code = 0;
                break;
            case kdv::Verdict::Holds:
                std::cout << "verdict: condition holds (decay guarantee applies)\n";
                code = 0;
                break;
            case kdv::Verdict::Undecided:
                std::cout << "verdict: undecided: " << rep.detail << "\n";
                code = 3;
                break;
            case kdv::Verdict::Fails:
                std::cout << "verdict: condition fails: " << rep.detail << "\n";
                code = 1;
                break;
            }
            manifest.emit();
            return code;
        }

        if (*c_swp) {
            kdv::SweepOptions opt;
            opt.threads = thread_count(sw_threads);
            opt.csv_path = sw_out;
            opt.checkpoint_path = sw_ckpt;
            auto r = kdv::sweep_s(sw_kmax, opt);
            std::cout << "pairs evaluated: " << r.pairs_evaluated;
            if (r.pairs_skipped) std::cout << " (resumed past " << r.pairs_skipped << ")";
            std::cout << "\nmin |s| = " << kdv::fmt17(r.min_abs_s) << " at (k,l) = ("
                      << r.argmin_k << "," << r.argmin_l << ")\n";
            if (!sw_out.empty()) manifest.outputs.push_back(sw_out);
            manifest.emit();
            return 0;
        }

        if (*c_aux) {
            auto len = kdv::build_length(ax_k, ax_l);
            int m1 = ax_pair.size() == 2 ? ax_pair[0] - 1 : 0;
            int m2 = ax_pair.size() == 2 ? ax_pair[1] - 1 : 0;
            if (m1 < 0 || m2 < 0 || m1 >= len.n_L || m2 >= len.n_L) {
                std::cerr << "aux: pair index out of range (1.." << len.n_L << ")\n";
                return 2;
            }
            auto sol = ax_conj ? kdv::solve_phi_tilde(len, m1, m2) : kdv::solve_phi(len, m1, m2);
            auto d1 = sol.phi.derivative();
            std::ofstream f(ax_out, std::ios::trunc);
            if (!f) {
                std::cerr << "aux: cannot open " << ax_out << "\n";
                return 2;
            }
            f << "x,re_phi,im_phi,re_dphi,im_dphi\n";
            for (int i = 0; i <= ax_samples; i++) {
                double x = len.L * i / ax_samples;
                kdv::cplx v = sol.eval(x), d = d1.eval(x);
                f << kdv::fmt17(x) << ',' << kdv::fmt17(v.real()) << ',' << kdv::fmt17(v.imag())
                  << ',' << kdv::fmt17(d.real()) << ',' << kdv::fmt17(d.imag()) << '\n';
            }
            auto res = kdv::aux_residuals(sol);
            std::cout << "case " << static_cast<int>(sol.case_tag) << ", boundary residual "
                      << kdv::fmt17(res.boundary / res.scale) << ", ode residual "
                      << kdv::fmt17(res.ode / res.scale) << " (relative)\n";
            manifest.outputs.push_back(ax_out);
            manifest.emit();
            return 0;
        }

        if (*c_trc) {
            if (!tr_emit.empty()) {
                if (tr_l < 1 || tr_k < tr_l) {
                    std::cerr << "trace: --emit-config needs --k/--l\n";
                    return 2;
                }
                auto len = kdv::build_length(tr_k, tr_l);
                std::vector<kdv::cplx> alpha(static_cast<std::size_t>(len.n_L));
                for (int m = 0; m < len.n_L; m++)
                    alpha[static_cast<std::size_t>(m)] =
                        len.pairs[static_cast<std::size_t>(m)].p == 0.0 ? kdv::cplx(0, 1) : kdv::cplx(1, 0);
                auto sig = kdv::make_trace_signal(len, alpha);
                json j;
                j["alpha"] = json::array();
                j["q"] = json::array();
                j["M"] = json::array();
                j["N"] = json::array();
                for (int i = 0; i < sig.n; i++) {
                    j["alpha"].push_back({sig.alpha[static_cast<std::size_t>(i)].real(),
                                          sig.alpha[static_cast<std::size_t>(i)].imag()});
                    j["q"].push_back(sig.q[static_cast<std::size_t>(i)]);
                    json mrow = json::array(), nrow = json::array();
                    for (int c = 0; c < sig.n; c++) {
                        mrow.push_back({sig.m(i, c).real(), sig.m(i, c).imag()});
                        nrow.push_back({sig.nn(i, c).real(), sig.nn(i, c).imag()});
                    }
                    j["M"].push_back(mrow);
                    j["N"].push_back(nrow);
                }
                std::ofstream f(tr_emit, std::ios::trunc);
                f << j.dump(2) << "\n";
                std::cout << "signal config written to " << tr_emit << "\n";
                manifest.outputs.push_back(tr_emit);
                manifest.emit();
                return 0;
            }

            if (tr_config.empty()) {
                std::cerr << "trace: --config required (or --emit-config)\n";
                return 2;
            }
            std::ifstream cf(tr_config);
            if (!cf) {
                std::cerr << "trace: cannot read " << tr_config << "\n";
                return 2;
            }
            json j = json::parse(cf);
            kdv::TraceSignal s;
            s.n = static_cast<int>(j.at("q").size());
            for (auto& qv : j.at("q")) s.q.push_back(qv.get<double>());
            for (auto& av : j.at("alpha"))
                s.alpha.emplace_back(av.at(0).get<double>(), av.at(1).get<double>());
            for (auto& row : j.at("M"))
                for (auto& e : row) s.M.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
            for (auto& row : j.at("N"))
                for (auto& e : row) s.N.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
            s.canonicalize();
            for (const auto& w : s.admissibility_violations())
                std::cerr << "warning: " << w << "\n";
            int floor_pts = kdv::window_floor_points(s, tr_tau);
            if (tr_points > 0 && tr_points < floor_pts)
                std::cerr << "warning: --points " << tr_points << " below the per-period floor "
                          << floor_pts << "\n";
            manifest.inputs.push_back(tr_config);
            if (!tr_out.empty()) {
                std::ofstream f(tr_out, std::ios::trunc);
                f << "t,re_g,im_g\n";
                for (int i = 0; i <= tr_samples; i++) {
                    double t = 2.0 * tr_tau * i / tr_samples;
                    kdv::cplx g = kdv::g_eval(s, t);
                    f << kdv::fmt17(t) << ',' << kdv::fmt17(g.real()) << ',' << kdv::fmt17(g.imag())
                      << '\n';
                }
                manifest.outputs.push_back(tr_out);
            }
            std::cout << "window norm ||g||_{L2(tau,2tau)} at tau=" << kdv::fmt17(tr_tau) << ": "
                      << kdv::fmt17(kdv::window_norm(s, tr_tau, tr_points)) << "\n";
            auto scan = kdv::find_nonvanishing(s, 2.0 * tr_tau);
            std::cout << "max |g| on [0," << kdv::fmt17(2.0 * tr_tau) << "] = "
                      << kdv::fmt17(scan.value) << " at t = " << kdv::fmt17(scan.t) << "\n";
            manifest.emit();
            return 0;
        }

        if (*c_sim) {
            if (sm_l < 1 || sm_k < sm_l) {
                std::cerr << "simulate: need k >= l >= 1\n";
                return 2;
            }
            auto len = kdv::build_length(sm_k, sm_l);
            kdv::SimGrid grid{len.L, sm_nx, sm_dt, 0.5};
            fs::create_directories(sm_out);
            json fit;
            fit["mode"] = sm_mode;
            fit["L"] = len.L;
            fit["eps"] = sm_eps;
            fit["nx"] = sm_nx;
            fit["dt"] = grid.step();

            auto emit_runs = [&](const kdv::DecayResult& r) {
                write_series_csv(sm_out + "/energy.csv", r);
                write_trace_csv(sm_out + "/trace.csv", r);
                manifest.outputs.push_back(sm_out + "/energy.csv");
                manifest.outputs.push_back(sm_out + "/trace.csv");
            };

            if (sm_mode == "power-series") {
                double T = sm_T > 0 ? sm_T : 20.0;
                std::vector<double> eps_list;
                if (!sm_eps_list.empty()) {
                    std::stringstream ss(sm_eps_list);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) eps_list.push_back(std::stod(tok));
                } else {
                    eps_list = {0.02, 0.01, 0.005, 0.0025};
                }
                auto r = kdv::power_series_experiment(len, eps_list, T, grid);
                fit["T"] = T;
                fit["slope"] = r.slope;
                fit["epsilon"] = r.epsilon;
                fit["trace_error"] = r.trace_error;
                std::cout << "trace-error exponent: " << kdv::fmt17(r.slope) << "\n";
            } else if (sm_mode == "decay") {
                double T = sm_T > 0 ? sm_T : 20000.0;
                auto r = kdv::decay_experiment(len, sm_eps, T, grid, sm_stride);
                emit_runs(r);
                fit["T"] = T;
                fit["T_half"] = r.T_half;
                fit["tail_slope"] = r.tail_slope;
                fit["max_step_growth"] = r.max_step_growth;
                fit["max_energy_defect"] = r.max_energy_defect;
                std::cout << "T_half = " << kdv::fmt17(r.T_half)
                          << ", tail slope = " << kdv::fmt17(r.tail_slope) << "\n";
            } else if (sm_mode == "lower-bound") {
                double T = sm_T > 0 ? sm_T : 2000.0;
                auto prof = sm_profile == "phi" ? kdv::LowerBoundProfile::Phi
                                                : kdv::LowerBoundProfile::Psi;
                auto r = kdv::lower_bound_experiment(len, sm_pair - 1, sm_eps, T, grid, prof);
                fit["T"] = T;
                fit["profile"] = sm_profile;
                fit["tau_star"] = r.tau_star;
                fit["norm_at_tau_star"] = r.norm_at_tau_star;
                fit["floor"] = r.floor;
                kdv::DecayResult shim;
                shim.series = r.series;
                shim.trace_samples.assign(r.series.size(), 0.0);
                write_series_csv(sm_out + "/energy.csv", shim);
                manifest.outputs.push_back(sm_out + "/energy.csv");
                std::cout << "floor min ||u|| t/ln(t+2) = " << kdv::fmt17(r.floor)
                          << ", ||u(tau*)|| = " << kdv::fmt17(r.norm_at_tau_star) << "\n";
            } else if (sm_mode == "forced") {
                double T = sm_T > 0 ? sm_T : 50.0;
                // u2 driven by the quadratic interaction of the normalized M-mode
                kdv::KdvSolver solver(grid);
                kdv::Mode mode = kdv::mode_of(len.pairs.front());
                kdv::cplx a = mode.q == 0.0 ? kdv::cplx(0, 1) : kdv::cplx(1, 0);
                auto ps = kdv::psi_terms(mode);
                std::vector<double> u0(static_cast<std::size_t>(sm_nx));
                for (int i = 0; i < sm_nx; i++)
                    u0[static_cast<std::size_t>(i)] = (a * ps.eval(grid.x(i))).real();
                double nu = solver.l2_norm(u0);
                for (auto& vv : u0) vv /= nu;
                kdv::SimState s1 = solver.make_state(u0);
                kdv::SimState s2 = solver.make_state(
                    std::vector<double>(static_cast<std::size_t>(sm_nx), 0.0));
                kdv::DecayResult r;
                r.u0_norm = 0.0;
                std::vector<double> mid(static_cast<std::size_t>(sm_nx)), fterm;
                int nsteps = static_cast<int>(std::ceil(T / grid.step()));
                r.series.push_back({0.0, 0.0, 0.0});
                r.trace_samples.push_back(0.0);
                for (int k2 = 1; k2 <= nsteps; k2++) {
                    auto prev = s1.u;
                    solver.step_linear(s1);
                    for (int i = 0; i < sm_nx; i++)
                        mid[static_cast<std::size_t>(i)] =
                            0.5 * (prev[static_cast<std::size_t>(i)] + s1.u[static_cast<std::size_t>(i)]);
                    solver.nonlinearity(mid, fterm);
                    solver.step_forced(s2, fterm);
                    if (k2 % sm_stride == 0 || k2 == nsteps) {
                        r.series.push_back({s2.t, solver.l2_norm(s2.u), s2.trace_accumulator});
                        r.trace_samples.push_back(solver.trace_ux0(s2.u));
                    }
                }
                emit_runs(r);
                fit["T"] = T;
            } else {
                double T = sm_T > 0 ? sm_T : 50.0;
                bool nonlinear = sm_mode == "nonlinear";
                kdv::Mode mode = kdv::mode_of(len.pairs.front());
                kdv::cplx a = mode.q == 0.0 ? kdv::cplx(0, 1) : kdv::cplx(1, 0);
                auto ps = kdv::psi_terms(mode);
                // normalized M-profile scaled to ||u0|| = eps, as in decay mode
                double norm = 0.0;
                {
                    kdv::KdvSolver solver(grid);
                    std::vector<double> tmp(static_cast<std::size_t>(sm_nx));
                    for (int i = 0; i < sm_nx; i++)
                        tmp[static_cast<std::size_t>(i)] = (a * ps.eval(grid.x(i))).real();
                    norm = solver.l2_norm(tmp);
                }
                double scale = sm_eps / norm;
                auto r = kdv::evolve(
                    [&](double x) { return scale * (a * ps.eval(x)).real(); }, nonlinear, T, grid,
                    sm_stride);
                emit_runs(r);
                fit["T"] = T;
                fit["T_half"] = r.T_half;
                fit["max_step_growth"] = r.max_step_growth;
                fit["max_energy_defect"] = r.max_energy_defect;
            }
            {
                std::ofstream f(sm_out + "/fit.json", std::ios::trunc);
                f << fit.dump(2) << "\n";
                manifest.outputs.push_back(sm_out + "/fit.json");
            }
            manifest.emit();
            return 0;
        }

        if (*c_vfy) {
            bool full = vf_full && !vf_quick;
            int rc = run_verify(full, thread_count(vf_threads));
            manifest.emit();
            return rc;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
