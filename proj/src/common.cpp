#include "kdvcrit/common.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace kdv {

cvec3 solve3(cmat3 m, cvec3 b) {
    for (int col = 0; col < 3; col++) {
        int piv = col;
        for (int r = col + 1; r < 3; r++)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (piv != col) {
            std::swap(m[piv], m[col]);
            std::swap(b[piv], b[col]);
        }
        if (std::abs(m[col][col]) == 0.0)
            throw std::runtime_error("solve3: singular matrix");
        for (int r = col + 1; r < 3; r++) {
            cplx f = m[r][col] / m[col][col];
            for (int c = col; c < 3; c++) m[r][c] -= f * m[col][c];
            b[r] -= f * b[col];
        }
    }
    cvec3 x{};
    for (int r = 2; r >= 0; r--) {
        cplx s = b[r];
        for (int c = r + 1; c < 3; c++) s -= m[r][c] * x[c];
        x[r] = s / m[r][r];
    }
    return x;
}

cvec3 solve_min_norm_2x3(const cvec3& r0, const cvec3& r1, cplx b0, cplx b1) {
    // x = A^H (A A^H)^{-1} b with A the 2x3 row matrix.
    cplx g00(0), g01(0), g11(0);
    for (int j = 0; j < 3; j++) {
        g00 += r0[j] * std::conj(r0[j]);
        g01 += r0[j] * std::conj(r1[j]);
        g11 += r1[j] * std::conj(r1[j]);
    }
    cplx g10 = std::conj(g01);
    cplx det = g00 * g11 - g01 * g10;
    if (std::abs(det) == 0.0)
        throw std::runtime_error("solve_min_norm_2x3: dependent rows");
    cplx y0 = (g11 * b0 - g01 * b1) / det;
    cplx y1 = (g00 * b1 - g10 * b0) / det;
    cvec3 x{};
    for (int j = 0; j < 3; j++) x[j] = std::conj(r0[j]) * y0 + std::conj(r1[j]) * y1;
    return x;
}

double det_scale(const cmat3& m) {
    double s = 1.0;
    for (int r = 0; r < 3; r++) {
        double n = 0.0;
        for (int c = 0; c < 3; c++) n += std::norm(m[r][c]);
        s *= std::sqrt(n);
    }
    return s;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt17(cplx v) { return fmt17(v.real()) + "," + fmt17(v.imag()); }

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; i++) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::uint64_t h = 1469598103934665603ull;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        std::streamsize got = in.gcount();
        if (got > 0) h = fnv1a64(buf.data(), static_cast<std::size_t>(got), h);
    }
    return h;
}

} // namespace kdv
