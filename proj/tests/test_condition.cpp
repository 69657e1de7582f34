#include <doctest.h>

#include "kdvcrit/condition.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace kdv;

TEST_CASE("sigma_roots: symmetric functions match the integer coefficients") {
    auto t = sigma_roots(2, 1); // sigma^3 - 21 sigma + 40
    cplx e1 = t.sigma[0] + t.sigma[1] + t.sigma[2];
    cplx e2 = t.sigma[0] * t.sigma[1] + t.sigma[0] * t.sigma[2] + t.sigma[1] * t.sigma[2];
    cplx e3 = t.sigma[0] * t.sigma[1] * t.sigma[2];
    CHECK(std::abs(e1) < 1e-9 * 21);
    CHECK(std::abs(e2 + 21.0) < 1e-9 * 21);
    CHECK(std::abs(e3 + 40.0) < 1e-9 * 40);

    auto t2 = sigma_roots(11, 2); // sigma^3 - 441 sigma + 6480
    cplx f2 = t2.sigma[0] * t2.sigma[1] + t2.sigma[0] * t2.sigma[2] + t2.sigma[1] * t2.sigma[2];
    cplx f3 = t2.sigma[0] * t2.sigma[1] * t2.sigma[2];
    CHECK(std::abs(f2 + 441.0) < 1e-9 * 441);
    CHECK(std::abs(f3 + 6480.0) < 1e-9 * 6480);

    CHECK_THROWS_AS(sigma_roots(3, 3), std::invalid_argument);
}

TEST_CASE("s at the sweep minimum and away from it") {
    double s_min = std::abs(s_value(736, 611));
    CHECK(s_min > 1.64e-5 * 0.98);
    CHECK(s_min < 1.64e-5 * 1.02);
    CHECK(std::abs(s_value(2, 1)) > 1e-5);
    CHECK_THROWS_AS(s_value(4, 4), std::invalid_argument);
}

TEST_CASE("|s| is invariant under sigma permutations") {
    auto t = sigma_roots(11, 2);
    cplx alpha = std::exp(cplx(0, 4 * PI * (11 - 2) / 3.0));
    double base = std::abs(s_from_sigma(t.sigma, alpha));
    int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (auto& pm : perms) {
        std::array<cplx, 3> sig{t.sigma[static_cast<std::size_t>(pm[0])],
                                t.sigma[static_cast<std::size_t>(pm[1])],
                                t.sigma[static_cast<std::size_t>(pm[2])]};
        CHECK(std::abs(std::abs(s_from_sigma(sig, alpha)) - base) <= 1e-10 * base);
    }
}

TEST_CASE("det K2 equals (4 pi^2/9) s on synthetic zero-sum triples") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int it = 0; it < 200; it++) {
        cplx s0(u(rng), u(rng)), s1(u(rng), u(rng));
        std::array<cplx, 3> sig{s0, s1, -s0 - s1};
        cplx alpha = std::exp(cplx(0, u(rng)));
        cplx lhs = det_k2(sig, alpha);
        cplx rhs = 4.0 * PI * PI / 9.0 * s_from_sigma(sig, alpha);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("condition verdicts") {
    CHECK(check_condition(build_length(1, 1)).verdict == Verdict::DimOne);
    CHECK(check_condition(build_length(2, 2)).verdict == Verdict::DimOne);
    CHECK(check_condition(build_length(2, 1)).verdict == Verdict::Holds);
    auto rep = check_condition(build_length(7, 7)); // mixes p = 0 with (11,2)
    CHECK(rep.verdict == Verdict::Fails);
    CHECK(check_condition(build_length(736, 611)).verdict == Verdict::Holds);
    CHECK_THROWS_AS(check_condition(build_length(2, 1), 0.0), std::invalid_argument);
}

TEST_CASE("det Q vanishes exactly on the critical frequencies") {
    for (auto [k, l] : std::vector<std::pair<long long, long long>>{{2, 1}, {5, 3}, {11, 2}}) {
        auto len = build_length(k, l);
        for (const auto& cp : len.pairs) {
            if (cp.k == cp.l) continue;
            auto q = q_matrix(cplx(cp.p), len.L);
            CHECK(std::abs(q.det) < 1e-8 * q.scale);
        }
        // closed form at z = 0: |det Q(0)| = 2 |cos L - 1| (the sign depends
        // on the root order, which is noise-level among imaginary roots)
        auto q0 = q_matrix(cplx(0.0), len.L);
        double expect = 2 * std::abs(std::cos(len.L) - 1);
        CHECK(std::abs(std::abs(q0.det) - expect) < 1e-9 * q0.scale);
    }
    // L = 2 pi has the p = 0 frequency, so z = 0 is singular there
    auto q2pi = q_matrix(cplx(0.0), 2 * PI);
    CHECK(std::abs(q2pi.det) < 1e-10 * q2pi.scale);
    CHECK(q_matrix(cplx(degenerate_z()), 5.0).degenerate);
    CHECK(!q_matrix(cplx(0.2), 5.0).degenerate);
}

TEST_CASE("Q1 is invertible and consistent under the row reduction") {
    for (double L : {2 * PI, 2 * PI * std::sqrt(7.0 / 3.0), 5.0, 11.3}) {
        auto q1 = q1_matrix(L);
        CHECK(std::abs(q1.det) > 1e-6 * q1.scale);
        // row3 -> row3 - lambda2 row2 leaves the determinant unchanged
        cmat3 m = q1.entries;
        cplx l2 = q1.lambda[1];
        for (int c = 0; c < 3; c++) m[2][c] -= l2 * m[1][c];
        CHECK(std::abs(det3(m) - q1.det) < 1e-12 * std::abs(q1.det));
    }
}

TEST_CASE("sweep: small ranges against direct evaluation") {
    auto r2 = sweep_s(2);
    CHECK(r2.pairs_evaluated == 1);
    CHECK(r2.argmin_k == 2);
    CHECK(r2.argmin_l == 1);
    CHECK(r2.min_abs_s == doctest::Approx(std::abs(s_value(2, 1))).epsilon(1e-14));

    auto r3 = sweep_s(3);
    double direct = std::min({std::abs(s_value(2, 1)), std::abs(s_value(3, 1)), std::abs(s_value(3, 2))});
    CHECK(r3.min_abs_s == doctest::Approx(direct).epsilon(1e-14));
    CHECK_THROWS_AS(sweep_s(1), std::invalid_argument);
}

TEST_CASE("sweep determinism under different worker counts, with CSV") {
    namespace fs = std::filesystem;
    auto tmp = fs::temp_directory_path();
    SweepOptions o1;
    o1.threads = 1;
    o1.csv_path = (tmp / "kdv_sweep_t1.csv").string();
    SweepOptions o4;
    o4.threads = 4;
    o4.csv_path = (tmp / "kdv_sweep_t4.csv").string();
    auto r1 = sweep_s(40, o1);
    auto r4 = sweep_s(40, o4);
    CHECK(r1.min_abs_s == r4.min_abs_s);
    CHECK(r1.argmin_k == r4.argmin_k);
    CHECK(r1.argmin_l == r4.argmin_l);
    std::ifstream f1(o1.csv_path), f4(o4.csv_path);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s4((std::istreambuf_iterator<char>(f4)), std::istreambuf_iterator<char>());
    CHECK(s1 == s4);
    CHECK(s1.substr(0, 26) == "k,l,A,p,re_s,im_s,abs_s\n2,");
    fs::remove(o1.csv_path);
    fs::remove(o4.csv_path);
}

TEST_CASE("sweep checkpoint resume reproduces the uninterrupted result") {
    namespace fs = std::filesystem;
    auto tmp = fs::temp_directory_path();
    std::string ck = (tmp / "kdv_sweep.ckpt").string();
    fs::remove(ck);
    auto full = sweep_s(25);

    SweepOptions stage1;
    stage1.checkpoint_path = ck;
    auto p1 = sweep_s(10, stage1); // completes and leaves k_done = 10
    CHECK(p1.pairs_evaluated == 45);

    SweepOptions stage2;
    stage2.checkpoint_path = ck;
    auto p2 = sweep_s(25, stage2); // resumes from 11
    CHECK(p2.pairs_skipped == 45);
    CHECK(p2.min_abs_s == full.min_abs_s);
    CHECK(p2.argmin_k == full.argmin_k);
    CHECK(p2.argmin_l == full.argmin_l);
    fs::remove(ck);
}

TEST_CASE("sweep reports unwritable table paths") {
    SweepOptions opt;
    opt.csv_path = "/nonexistent_dir_kdv/x.csv";
    CHECK_THROWS_AS(sweep_s(5, opt), std::runtime_error);
}

TEST_CASE("sweep resume truncates rows past the last checkpoint") {
    namespace fs = std::filesystem;
    auto tmp = fs::temp_directory_path();
    std::string ck = (tmp / "kdv_ck2.ckpt").string();
    std::string csv = (tmp / "kdv_ck2.csv").string();
    std::string csv_ref = (tmp / "kdv_ck2_ref.csv").string();
    fs::remove(ck);
    fs::remove(csv);

    SweepOptions ref;
    ref.csv_path = csv_ref;
    auto full = sweep_s(30, ref);

    SweepOptions stage1;
    stage1.csv_path = csv;
    stage1.checkpoint_path = ck;
    stage1.checkpoint_stride = 60; // several checkpoints inside kmax = 18
    sweep_s(18, stage1);

    // fake a crash that flushed rows after the final checkpoint write:
    // rewind the checkpoint to claim less progress than the csv holds
    {
        std::ifstream in(ck);
        std::string tag;
        long long k_done, ak, al, bytes;
        double mn;
        in >> tag >> k_done >> tag >> mn >> ak >> al >> tag >> bytes;
        REQUIRE(k_done == 18);
        // pretend only k <= 15 was checkpointed, with the matching byte count
        long long keep_bytes = 0;
        {
            std::ifstream c(csv);
            std::string line;
            std::getline(c, line);
            keep_bytes += static_cast<long long>(line.size()) + 1;
            while (std::getline(c, line)) {
                long long k = std::stoll(line.substr(0, line.find(',')));
                if (k > 15) break;
                keep_bytes += static_cast<long long>(line.size()) + 1;
            }
        }
        // recompute the running min over k <= 15 only
        auto upto = sweep_s(15);
        std::ofstream out(ck, std::ios::trunc);
        out << "k_done 15\n";
        out << "min " << fmt17(upto.min_abs_s) << " " << upto.argmin_k << " " << upto.argmin_l << "\n";
        out << "csv_bytes " << keep_bytes << "\n";
    }

    SweepOptions resume;
    resume.csv_path = csv;
    resume.checkpoint_path = ck;
    auto r = sweep_s(30, resume);
    CHECK(r.min_abs_s == full.min_abs_s);
    CHECK(r.argmin_k == full.argmin_k);
    CHECK(r.argmin_l == full.argmin_l);

    std::ifstream f1(csv), f2(csv_ref);
    std::string a((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(a == b); // no duplicated or missing rows after the resume
    fs::remove(ck);
    fs::remove(csv);
    fs::remove(csv_ref);
}

TEST_CASE("two routes to the boundary determinant agree: lambda(2p) vs sigma") {
    // K1 rows (lambda_j), (lambda_j e^{lambda_j L}), (e^{lambda_j L} - alpha)
    // scales to K2 under lambda_hat = lambda L, and K2's determinant equals
    // (4 pi^2/9) s with sigma_j = 3 lambda_hat_j/(2 pi i). The sigma route
    // solves the integer cubic; the lambda route solves the characteristic
    // cubic at z = 2p. Both must meet at |det K1| = (4 pi^2/9)|s| / L^2.
    for (auto [k, l] : std::vector<std::pair<long long, long long>>{
             {2, 1}, {3, 1}, {5, 3}, {9, 1}, {11, 2}, {14, 9}}) {
        auto len = build_length(k, l);
        double p = p_value(k, l);
        auto lam = lambda_roots(cplx(2 * p)).roots;
        cplx alpha = std::exp(cplx(0, 4 * PI * static_cast<double>(k - l) / 3.0));
        cmat3 K1{};
        for (int j = 0; j < 3; j++) {
            cplx e = std::exp(lam[static_cast<std::size_t>(j)] * len.L);
            K1[0][static_cast<std::size_t>(j)] = lam[static_cast<std::size_t>(j)];
            K1[1][static_cast<std::size_t>(j)] = lam[static_cast<std::size_t>(j)] * e;
            K1[2][static_cast<std::size_t>(j)] = e - alpha;
        }
        double lhs = std::abs(det3(K1)) * len.L * len.L;
        double rhs = 4.0 * PI * PI / 9.0 * std::abs(s_value(k, l));
        CAPTURE(k);
        CAPTURE(l);
        CHECK(std::abs(lhs - rhs) < 1e-6 * std::max(lhs, 1.0));
    }
}

TEST_CASE("s from double-precision sigma roots agrees with the extended path") {
    for (auto [k, l] : std::vector<std::pair<long long, long long>>{{2, 1}, {7, 3}, {20, 11}, {41, 5}}) {
        auto st = sigma_roots(k, l);
        cplx alpha = std::exp(cplx(0, 4 * PI * static_cast<double>(k - l) / 3.0));
        cplx fast = s_from_sigma(st.sigma, alpha);
        cplx slow = s_value(k, l);
        CHECK(std::abs(std::abs(fast) - std::abs(slow)) < 1e-8 * std::abs(slow));
    }
}
