#include "kdvcrit/quasi_trace.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace kdv {

void TraceSignal::canonicalize() {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return q[static_cast<std::size_t>(a)] < q[static_cast<std::size_t>(b)]; });
    std::vector<cplx> a2(alpha.size()), M2(M.size()), N2(N.size());
    std::vector<double> q2(q.size());
    for (int i = 0; i < n; i++) {
        a2[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        q2[static_cast<std::size_t>(i)] = q[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        for (int j = 0; j < n; j++) {
            M2[static_cast<std::size_t>(i) * n + j] = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            N2[static_cast<std::size_t>(i) * n + j] = nn(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
    }
    alpha = std::move(a2);
    q = std::move(q2);
    M = std::move(M2);
    N = std::move(N2);
}

std::vector<std::string> TraceSignal::admissibility_violations() const {
    std::vector<std::string> v;
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++)
            if (q[static_cast<std::size_t>(i)] == q[static_cast<std::size_t>(j)])
                v.push_back("q[" + std::to_string(i) + "] == q[" + std::to_string(j) + "]");
    double sum_a = 0.0;
    for (int j = 0; j < n; j++) {
        sum_a += std::norm(alpha[static_cast<std::size_t>(j)]);
        if (std::abs(m(j, j)) == 0.0) v.push_back("M[" + std::to_string(j) + "][" + std::to_string(j) + "] == 0");
        if (q[static_cast<std::size_t>(j)] == 0.0) {
            if (std::abs(m(j, j).imag()) > 1e-12 * std::abs(m(j, j)))
                v.push_back("M diagonal not real at zero frequency");
            if (std::abs(nn(j, j)) == 0.0) v.push_back("N diagonal zero at zero frequency");
            if (std::abs(alpha[static_cast<std::size_t>(j)].real()) > 1e-12 * std::abs(alpha[static_cast<std::size_t>(j)]))
                v.push_back("alpha not purely imaginary at zero frequency");
        }
    }
    if (sum_a == 0.0) v.push_back("sum |alpha|^2 == 0");
    return v;
}

double TraceSignal::max_frequency() const {
    double f = 0.0;
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            f = std::max(f, q[static_cast<std::size_t>(i)] + q[static_cast<std::size_t>(j)]);
            f = std::max(f, std::abs(q[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(j)]));
        }
    return f;
}

TraceSignal make_trace_signal(const CriticalLength& len, const std::vector<cplx>& alpha) {
    if (static_cast<int>(alpha.size()) != len.n_L)
        throw std::invalid_argument("make_trace_signal: alpha size must equal n_L");
    WMatrices w = w_coefficients(len);
    TraceSignal s;
    s.n = len.n_L;
    s.alpha = alpha;
    for (const auto& cp : len.pairs) s.q.push_back(cp.p);
    s.M = w.M;
    s.N = w.N;
    s.canonicalize();
    return s;
}

cplx g_eval(const TraceSignal& s, double t) {
    cplx g(0);
    for (int i = 0; i < s.n; i++) {
        for (int j = 0; j < s.n; j++) {
            cplx ai = s.alpha[static_cast<std::size_t>(i)], aj = s.alpha[static_cast<std::size_t>(j)];
            double qi = s.q[static_cast<std::size_t>(i)], qj = s.q[static_cast<std::size_t>(j)];
            cplx plus = ai * aj * s.m(i, j) * std::exp(cplx(0, -(qi + qj) * t));
            g += plus + std::conj(ai * aj * s.m(i, j)) * std::exp(cplx(0, (qi + qj) * t));
            g += 2.0 * ai * std::conj(aj) * s.nn(i, j) * std::exp(cplx(0, -(qi - qj) * t));
        }
    }
    return g;
}

int window_floor_points(const TraceSignal& s, double tau) {
    double f = s.max_frequency();
    if (f <= 0.0) return 64;
    // 80 points per shortest period puts composite Simpson safely past the
    // 1e-8 relative convergence contract (error ~ h^4); evaluation is cheap
    double shortest_period = 2.0 * PI / f;
    int pts = static_cast<int>(std::ceil(80.0 * tau / shortest_period));
    return std::max(pts, 256);
}

double window_norm(const TraceSignal& s, double tau, int quad_points) {
    if (tau <= 0.0) throw std::invalid_argument("window_norm: tau must be > 0");
    int n = quad_points > 0 ? std::max(quad_points, 64) : window_floor_points(s, tau);
    if (n % 2) n++;
    double h = tau / n;
    double acc = std::norm(g_eval(s, tau)) + std::norm(g_eval(s, 2 * tau));
    for (int i = 1; i < n; i++)
        acc += std::norm(g_eval(s, tau + i * h)) * (i % 2 ? 4.0 : 2.0);
    return std::sqrt(acc * h / 3.0);
}

ScanResult find_nonvanishing(const TraceSignal& s, double t_max) {
    if (t_max <= 0.0) throw std::invalid_argument("find_nonvanishing: t_max must be > 0");
    double f = s.max_frequency();
    double step = f > 0.0 ? (2.0 * PI / f) / 40.0 : t_max / 100.0;
    int n = static_cast<int>(std::ceil(t_max / step));
    double best_t = 0.0, best = -1.0;
    for (int i = 0; i <= n; i++) {
        double t = std::min(i * step, t_max);
        double v = std::abs(g_eval(s, t));
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    // golden-section refinement of |g| on the bracketing interval
    double lo = std::max(0.0, best_t - step), hi = std::min(t_max, best_t + step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = std::abs(g_eval(s, c)), fd = std::abs(g_eval(s, d));
    for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, t_max); it++) {
        if (fc > fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = std::abs(g_eval(s, c));
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = std::abs(g_eval(s, d));
        }
    }
    double t_ref = (lo + hi) / 2, v_ref = std::abs(g_eval(s, t_ref));
    if (v_ref >= best) return {t_ref, v_ref};
    return {best_t, best};
}

TraceSignal gamma_sample(const TraceSignal& base, const GammaFloorOptions& opt, int index) {
    std::mt19937_64 rng(opt.seed + static_cast<std::uint64_t>(index));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(opt.gamma1, opt.gamma2);
    TraceSignal s = base;
    double norm2 = 0.0;
    for (int j = 0; j < s.n; j++) {
        cplx a;
        if (s.q[static_cast<std::size_t>(j)] == 0.0)
            a = cplx(0.0, gauss(rng)); // zero-frequency amplitudes stay imaginary
        else
            a = cplx(gauss(rng), gauss(rng));
        s.alpha[static_cast<std::size_t>(j)] = a;
        norm2 += std::norm(a);
    }
    double target = unif(rng);
    double scale = std::sqrt(target / std::max(norm2, 1e-300));
    for (auto& a : s.alpha) a *= scale;
    return s;
}

double gamma_floor(const TraceSignal& base, const std::vector<double>& tau_list,
                   const GammaFloorOptions& opt) {
    if (!(0.0 < opt.gamma1 && opt.gamma1 < opt.gamma2))
        throw std::invalid_argument("gamma_floor: need 0 < gamma1 < gamma2");
    if (tau_list.empty()) throw std::invalid_argument("gamma_floor: tau_list empty");

    auto sample_min = [&](int index) {
        TraceSignal s = gamma_sample(base, opt, index);
        double mn = std::numeric_limits<double>::infinity();
        for (double tau : tau_list) mn = std::min(mn, window_norm(s, tau));
        return mn;
    };

    int nthreads = std::max(opt.threads, 1);
    std::vector<double> mins(static_cast<std::size_t>(opt.sample_count));
    if (nthreads == 1) {
        for (int i = 0; i < opt.sample_count; i++) mins[static_cast<std::size_t>(i)] = sample_min(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < nthreads; t++)
            pool.emplace_back([&]() {
                while (true) {
                    int i = next.fetch_add(1);
                    if (i >= opt.sample_count) break;
                    mins[static_cast<std::size_t>(i)] = sample_min(i);
                }
            });
        for (auto& t : pool) t.join();
    }
    return *std::min_element(mins.begin(), mins.end());
}

} // namespace kdv
