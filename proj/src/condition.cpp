#include "kdvcrit/condition.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace kdv {

namespace {

lcplx s_core_ld(long long k, long long l) {
    long long A = k * k + k * l + l * l;
    long long B = (2 * k + l) * (2 * l + k) * (k - l);
    auto sig = sigma_roots_ld(3 * A, 2 * B);
    lcplx alpha = std::exp(lcplx(0, 4 * PI_L * static_cast<long double>(k - l) / 3));
    lcplx s(0);
    const lcplx i2pi3(0, 2 * PI_L / 3);
    for (int j = 0; j < 3; j++) {
        lcplx sj = sig[j], s1 = sig[(j + 1) % 3], s2 = sig[(j + 2) % 3];
        s += sj * (s2 - s1) * (alpha * std::exp(i2pi3 * sj) + std::exp(-i2pi3 * sj));
    }
    return s;
}

cplx saturate(lcplx s) {
    long double a = std::abs(s);
    if (!(a < 1e300L)) return cplx(1e300, 0.0);
    return {static_cast<double>(s.real()), static_cast<double>(s.imag())};
}

} // namespace

SigmaTriple sigma_roots(long long k, long long l) {
    if (l < 1 || k <= l)
        throw std::invalid_argument("sigma_roots: need k > l >= 1 (s is defined only for p != 0)");
    if (k > 500000) throw std::invalid_argument("sigma_roots: k beyond the 64-bit product range");
    long long A = k * k + k * l + l * l;
    long long B = (2 * k + l) * (2 * l + k) * (k - l);
    auto r = cubic_roots(cplx(0.0), cplx(static_cast<double>(-3 * A)), cplx(static_cast<double>(2 * B)));
    SigmaTriple out;
    out.k = k;
    out.l = l;
    out.sigma = r.roots;
    return out;
}

cplx s_from_sigma(const std::array<cplx, 3>& sigma, cplx alpha) {
    cplx s(0);
    const cplx i2pi3(0, 2 * PI / 3);
    for (int j = 0; j < 3; j++) {
        cplx sj = sigma[j], s1 = sigma[(j + 1) % 3], s2 = sigma[(j + 2) % 3];
        s += sj * (s2 - s1) * (alpha * std::exp(i2pi3 * sj) + std::exp(-i2pi3 * sj));
    }
    return s;
}

cplx s_value(long long k, long long l) {
    if (l < 1 || k <= l) throw std::invalid_argument("s_value: need k > l >= 1");
    if (k > 500000) throw std::invalid_argument("s_value: k beyond the 64-bit product range");
    // complex sigma pairs with large imaginary part push |s| beyond double
    // range; saturate, the magnitude only ever feeds nonzero-ness decisions
    return saturate(s_core_ld(k, l));
}

cplx det_k2(const std::array<cplx, 3>& sigma, cplx alpha) {
    cmat3 K{};
    const cplx i2pi3(0, 2 * PI / 3);
    for (int j = 0; j < 3; j++) {
        cplx lh = i2pi3 * sigma[j];
        cplx e = std::exp(lh);
        K[0][j] = lh;
        K[1][j] = lh * e;
        K[2][j] = e - alpha;
    }
    return det3(K);
}

ConditionReport check_condition(const CriticalLength& len, double tol) {
    if (tol <= 0) throw std::invalid_argument("check_condition: tol must be > 0");
    ConditionReport rep;
    for (const auto& cp : len.pairs) {
        PairReport pr;
        pr.k = cp.k;
        pr.l = cp.l;
        pr.p = cp.p;
        pr.p_zero = (cp.k == cp.l);
        if (!pr.p_zero) {
            pr.s = s_value(cp.k, cp.l);
            pr.abs_s = std::abs(pr.s);
            pr.s_decided_nonzero = pr.abs_s > tol;
            pr.s_undecided = !pr.s_decided_nonzero && pr.abs_s >= 1e-12;
        }
        rep.pairs.push_back(pr);
    }

    if (len.dim_M == 1) {
        rep.verdict = Verdict::DimOne;
        return rep;
    }
    for (const auto& pr : rep.pairs) {
        if (pr.p_zero) {
            rep.verdict = Verdict::Fails;
            rep.detail = "pair (" + std::to_string(pr.k) + "," + std::to_string(pr.l) + ") has p = 0";
            return rep;
        }
    }
    for (const auto& pr : rep.pairs) {
        if (pr.s_undecided) {
            rep.verdict = Verdict::Undecided;
            rep.detail = "pair (" + std::to_string(pr.k) + "," + std::to_string(pr.l)
                       + ") has |s| = " + fmt17(pr.abs_s) + " within the undecided band";
            return rep;
        }
        if (!pr.s_decided_nonzero) {
            rep.verdict = Verdict::Fails;
            rep.detail = "pair (" + std::to_string(pr.k) + "," + std::to_string(pr.l)
                       + ") has |s| = " + fmt17(pr.abs_s) + " below 1e-12";
            return rep;
        }
    }
    rep.verdict = Verdict::Holds;
    return rep;
}

QMatrix q_matrix(cplx z, double L) {
    QMatrix q;
    q.z = z;
    double zd = degenerate_z();
    q.degenerate = std::abs(z - cplx(zd)) < 1e-9 || std::abs(z + cplx(zd)) < 1e-9;
    q.lambda = lambda_roots(z).roots;
    for (int j = 0; j < 3; j++) {
        cplx e = std::exp(q.lambda[j] * L);
        q.entries[0][j] = 1.0;
        q.entries[1][j] = e;
        q.entries[2][j] = q.lambda[j] * e;
    }
    q.det = det3(q.entries);
    q.scale = det_scale(q.entries);
    return q;
}

QMatrix q1_matrix(double L) {
    QMatrix q;
    q.z = degenerate_z();
    q.degenerate = true;
    cplx l1(0.0, -2.0 / std::sqrt(3.0));
    cplx l2(0.0, 1.0 / std::sqrt(3.0));
    q.lambda = {l1, l2, l2};
    cplx e1 = std::exp(l1 * L), e2 = std::exp(l2 * L);
    q.entries = {{{cplx(1.0), cplx(1.0), cplx(0.0)},
                  {e1, e2, L * e2},
                  {l1 * e1, l2 * e2, (l2 * L + 1.0) * e2}}};
    q.det = det3(q.entries);
    q.scale = det_scale(q.entries);
    return q;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

struct KChunk {
    long long k = 0;
    double min_abs = 0.0;
    long long min_l = 0;
    std::vector<SweepRow> rows; // populated only when csv or keep_table
};

KChunk eval_k(long long k, bool want_rows) {
    KChunk c;
    c.k = k;
    c.min_abs = std::numeric_limits<double>::infinity();
    if (want_rows) c.rows.reserve(static_cast<std::size_t>(k - 1));
    for (long long l = 1; l < k; l++) {
        cplx sl = saturate(s_core_ld(k, l));
        double abs_s = std::abs(sl);
        if (abs_s < c.min_abs) {
            c.min_abs = abs_s;
            c.min_l = l;
        }
        if (want_rows) {
            SweepRow r;
            r.k = k;
            r.l = l;
            r.A = k * k + k * l + l * l;
            r.p = p_value(k, l);
            r.s = sl;
            r.abs_s = abs_s;
            c.rows.push_back(r);
        }
    }
    return c;
}

void write_checkpoint(const std::string& path, long long k_done, double min_abs,
                      long long arg_k, long long arg_l, long long csv_bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << "k_done " << k_done << "\n";
        out << "min " << fmt17(min_abs) << " " << arg_k << " " << arg_l << "\n";
        out << "csv_bytes " << csv_bytes << "\n";
    }
    std::filesystem::rename(tmp, path);
}

struct Checkpoint {
    long long k_done = 1; // all k <= k_done fully processed
    double min_abs = std::numeric_limits<double>::infinity();
    long long arg_k = 0, arg_l = 0;
    long long csv_bytes = -1;
};

std::optional<Checkpoint> read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    Checkpoint c;
    std::string tag;
    if (!(in >> tag >> c.k_done) || tag != "k_done") return std::nullopt;
    if (!(in >> tag >> c.min_abs >> c.arg_k >> c.arg_l) || tag != "min") return std::nullopt;
    if (!(in >> tag >> c.csv_bytes) || tag != "csv_bytes") c.csv_bytes = -1;
    return c;
}

} // namespace

SweepResult sweep_s(long long k_max, const SweepOptions& opt) {
    if (k_max < 2) throw std::invalid_argument("sweep_s: k_max must be >= 2");
    if (k_max > 500000) throw std::invalid_argument("sweep_s: k_max beyond the 64-bit product range");

    long long k_start = 2;
    SweepResult res;
    res.min_abs_s = std::numeric_limits<double>::infinity();

    long long resume_csv_bytes = -1;
    if (!opt.checkpoint_path.empty()) {
        if (auto c = read_checkpoint(opt.checkpoint_path)) {
            k_start = c->k_done + 1;
            res.min_abs_s = c->min_abs;
            res.argmin_k = c->arg_k;
            res.argmin_l = c->arg_l;
            resume_csv_bytes = c->csv_bytes;
            for (long long k = 2; k < k_start; k++) res.pairs_skipped += k - 1;
        }
    }

    const bool want_csv = !opt.csv_path.empty();
    const bool want_rows = want_csv || opt.keep_table;

    std::ofstream csv;
    if (want_csv) {
        bool fresh = k_start == 2 || !std::filesystem::exists(opt.csv_path);
        if (!fresh && resume_csv_bytes >= 0) {
            // drop rows written after the last checkpoint so the resumed
            // stream continues without duplicates
            std::error_code ec;
            if (std::filesystem::file_size(opt.csv_path, ec) > static_cast<std::uintmax_t>(resume_csv_bytes) && !ec)
                std::filesystem::resize_file(opt.csv_path, static_cast<std::uintmax_t>(resume_csv_bytes), ec);
        }
        csv.open(opt.csv_path, fresh ? std::ios::trunc : std::ios::app);
        if (!csv) throw std::runtime_error("sweep_s: cannot open " + opt.csv_path);
        if (fresh) csv << "k,l,A,p,re_s,im_s,abs_s\n";
    }

    int nthreads = opt.threads;
    if (nthreads <= 0) nthreads = static_cast<int>(std::thread::hardware_concurrency());
    if (nthreads <= 0) nthreads = 1;

    std::atomic<long long> next_k{k_start};
    std::mutex mtx;
    std::map<long long, KChunk> pending; // completed chunks not yet merged
    long long watermark = k_start - 1;   // all k <= watermark merged/flushed
    long long since_checkpoint = 0;

    auto merge_ready = [&]() {
        // caller holds mtx; merge chunks in k order so every consumer
        // (min reduction, CSV, checkpoint) sees a schedule-independent stream
        while (true) {
            auto it = pending.find(watermark + 1);
            if (it == pending.end()) break;
            KChunk& c = it->second;
            if (c.min_abs < res.min_abs_s) {
                res.min_abs_s = c.min_abs;
                res.argmin_k = c.k;
                res.argmin_l = c.min_l;
            }
            res.pairs_evaluated += c.k - 1;
            since_checkpoint += c.k - 1;
            if (want_csv) {
                for (const auto& r : c.rows)
                    csv << r.k << ',' << r.l << ',' << r.A << ',' << fmt17(r.p) << ','
                        << fmt17(r.s.real()) << ',' << fmt17(r.s.imag()) << ','
                        << fmt17(r.abs_s) << '\n';
            }
            if (opt.keep_table)
                res.table.insert(res.table.end(), c.rows.begin(), c.rows.end());
            watermark = c.k;
            pending.erase(it);
            if (!opt.checkpoint_path.empty() && since_checkpoint >= opt.checkpoint_stride) {
                long long bytes = -1;
                if (want_csv) {
                    csv.flush();
                    bytes = static_cast<long long>(csv.tellp());
                }
                write_checkpoint(opt.checkpoint_path, watermark, res.min_abs_s,
                                 res.argmin_k, res.argmin_l, bytes);
                since_checkpoint = 0;
            }
        }
    };

    auto worker = [&]() {
        while (true) {
            long long k = next_k.fetch_add(1);
            if (k > k_max) break;
            KChunk c = eval_k(k, want_rows);
            std::lock_guard<std::mutex> lock(mtx);
            pending.emplace(k, std::move(c));
            merge_ready();
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; t++) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    {
        std::lock_guard<std::mutex> lock(mtx);
        merge_ready();
    }

    long long final_bytes = -1;
    if (want_csv) {
        csv.flush();
        final_bytes = static_cast<long long>(csv.tellp());
    }
    if (!opt.checkpoint_path.empty())
        write_checkpoint(opt.checkpoint_path, k_max, res.min_abs_s, res.argmin_k, res.argmin_l,
                         final_bytes);
    return res;
}

} // namespace kdv
