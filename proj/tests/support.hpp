#ifndef MDREG_TESTS_SUPPORT_HPP
#define MDREG_TESTS_SUPPORT_HPP

// Shared test oracles. Everything here is intentionally independent of the
// library implementation paths it is used to check: plain loops, textbook
// formulas, no calls into the functions under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/rng.hpp"

namespace testsupport {

// Plain triple-loop matrix product, accumulation in k order.
inline mdreg::Matrix matmul_oracle(const mdreg::Matrix& a, const mdreg::Matrix& b) {
    mdreg::Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues (unsorted); good to ~1e-13 for the sizes used in tests.
inline std::vector<double> symmetric_eigenvalues_oracle(mdreg::Matrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

inline double spectral_radius_oracle(const mdreg::Matrix& a) {
    double r = 0.0;
    for (double ev : symmetric_eigenvalues_oracle(a)) r = std::max(r, std::abs(ev));
    return r;
}

// Rotation angle via quaternion extraction, numerically stable near 0 and pi.
inline double rotation_angle_oracle(const mdreg::Rotation3& r1, const mdreg::Rotation3& r2) {
    // rel = r1^T r2
    std::array<double, 9> rel{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += r1(k, i) * r2(k, j);
            rel[i * 3 + j] = acc;
        }
    const double trace = rel[0] + rel[4] + rel[8];
    // |w| = cos(angle/2); build from the largest component for stability.
    double qw, qx, qy, qz;
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        qw = 0.25 * s;
        qx = (rel[7] - rel[5]) / s;
        qy = (rel[2] - rel[6]) / s;
        qz = (rel[3] - rel[1]) / s;
    } else if (rel[0] > rel[4] && rel[0] > rel[8]) {
        const double s = std::sqrt(1.0 + rel[0] - rel[4] - rel[8]) * 2.0;
        qw = (rel[7] - rel[5]) / s;
        qx = 0.25 * s;
        qy = (rel[1] + rel[3]) / s;
        qz = (rel[2] + rel[6]) / s;
    } else if (rel[4] > rel[8]) {
        const double s = std::sqrt(1.0 + rel[4] - rel[0] - rel[8]) * 2.0;
        qw = (rel[2] - rel[6]) / s;
        qx = (rel[1] + rel[3]) / s;
        qy = 0.25 * s;
        qz = (rel[5] + rel[7]) / s;
    } else {
        const double s = std::sqrt(1.0 + rel[8] - rel[0] - rel[4]) * 2.0;
        qw = (rel[3] - rel[1]) / s;
        qx = (rel[2] + rel[6]) / s;
        qy = (rel[5] + rel[7]) / s;
        qz = 0.25 * s;
    }
    const double sin_half = std::sqrt(qx * qx + qy * qy + qz * qz);
    const double cos_half = std::abs(qw);
    return 2.0 * std::atan2(sin_half, cos_half);
}

inline mdreg::Matrix random_matrix(mdreg::Rng& rng, std::size_t rows, std::size_t cols,
                                   double lo = -1.0, double hi = 1.0) {
    mdreg::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline mdreg::Matrix random_symmetric(mdreg::Rng& rng, std::size_t n) {
    mdreg::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-1.0, 1.0);
    return m;
}

// Rodrigues rotation about a random axis; angle in radians.
inline mdreg::Rotation3 axis_angle_rotation(const mdreg::Vec3& axis_in, double angle) {
    const double n = std::sqrt(axis_in[0] * axis_in[0] + axis_in[1] * axis_in[1] +
                               axis_in[2] * axis_in[2]);
    const double x = axis_in[0] / n, y = axis_in[1] / n, z = axis_in[2] / n;
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    mdreg::Rotation3 r;
    r.m = {t * x * x + c,     t * x * y - s * z, t * x * z + s * y,
           t * x * y + s * z, t * y * y + c,     t * y * z - s * x,
           t * x * z - s * y, t * y * z + s * x, t * z * z + c};
    return r;
}

inline mdreg::Rotation3 random_rotation(mdreg::Rng& rng, double max_angle = 3.14159) {
    mdreg::Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    return axis_angle_rotation(axis, rng.uniform(0.0, max_angle));
}

inline double max_abs_diff(const mdreg::Matrix& a, const mdreg::Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double frobenius(const mdreg::Matrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return std::sqrt(s);
}

} // namespace testsupport

#endif
