#include "mdreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdreg/errors.hpp"

namespace mdreg {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw ShapeError("ragged initializer: expected " + std::to_string(cols_) +
                             " columns, got " + std::to_string(r.size()));
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

Rotation3 Rotation3::transposed() const {
    Rotation3 t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
}

void Rotation3::validate() const {
    // R^T R = I and det = +1, both within 1e-9.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += m[k * 3 + i] * m[k * 3 + j];
            const double want = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - want) > 1e-9)
                throw ParameterError("matrix is not orthonormal");
        }
    }
    const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                       m[1] * (m[3] * m[8] - m[5] * m[6]) +
                       m[2] * (m[3] * m[7] - m[4] * m[6]);
    if (std::abs(det - 1.0) > 1e-9)
        throw ParameterError("matrix determinant is not +1");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* in = m.row(i);
        double* o = out.row(i);
        double mx = in[0];
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, in[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) o[j] /= sum;
    }
    return out;
}

namespace {

// Orthonormal completion for (near-)zero columns of u: pick the axis least
// aligned with the existing columns and Gram-Schmidt it in.
void complete_column(Matrix& u, std::size_t col, const std::array<bool, 3>& valid) {
    std::array<double, 3> best{};
    double best_score = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
        std::array<double, 3> cand{};
        cand[axis] = 1.0;
        for (std::size_t c = 0; c < 3; ++c) {
            if (c == col || !valid[c]) continue;
            const double dot = cand[0] * u(0, c) + cand[1] * u(1, c) + cand[2] * u(2, c);
            for (int r = 0; r < 3; ++r) cand[r] -= dot * u(r, c);
        }
        const double norm2 = cand[0] * cand[0] + cand[1] * cand[1] + cand[2] * cand[2];
        if (norm2 > best_score) {
            best_score = norm2;
            best = cand;
        }
    }
    const double norm = std::sqrt(best_score);
    for (int r = 0; r < 3; ++r) u(r, col) = best[r] / norm;
}

} // namespace

Svd3 svd3(const Matrix& m) {
    if (m.rows() != 3 || m.cols() != 3)
        throw ShapeError("svd3: expected 3x3, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));

    // One-sided Jacobi: rotate column pairs of b until all pairs are
    // orthogonal relative to their norms; v accumulates the rotations.
    Matrix b = m;
    Matrix v = Matrix::identity(3);
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int r = 0; r < 3; ++r) {
                    app += b(r, p) * b(r, p);
                    aqq += b(r, q) * b(r, q);
                    apq += b(r, p) * b(r, q);
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int r = 0; r < 3; ++r) {
                    const double bp = b(r, p), bq = b(r, q);
                    b(r, p) = c * bp - s * bq;
                    b(r, q) = s * bp + c * bq;
                    const double vp = v(r, p), vq = v(r, q);
                    v(r, p) = c * vp - s * vq;
                    v(r, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::array<double, 3> sigma{};
    for (int c = 0; c < 3; ++c)
        sigma[c] = std::sqrt(b(0, c) * b(0, c) + b(1, c) * b(1, c) + b(2, c) * b(2, c));

    // Sort singular values descending, permuting the columns of b and v.
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int x, int y) { return sigma[x] > sigma[y]; });

    Svd3 out;
    out.u = Matrix(3, 3);
    out.v = Matrix(3, 3);
    std::array<bool, 3> valid{};
    const double sigma_max = sigma[order[0]];
    for (int c = 0; c < 3; ++c) {
        const int src = order[c];
        out.s[c] = sigma[src];
        for (int r = 0; r < 3; ++r) out.v(r, c) = v(r, src);
        valid[c] = sigma[src] > std::max(1e-13 * sigma_max, 1e-300);
        if (valid[c])
            for (int r = 0; r < 3; ++r) out.u(r, c) = b(r, src) / sigma[src];
    }
    for (int c = 0; c < 3; ++c)
        if (!valid[c]) {
            complete_column(out.u, c, valid);
            valid[c] = true;
        }
    return out;
}

double spectral_radius_bound(const Matrix& m) {
    if (m.rows() != m.cols())
        throw ShapeError("spectral_radius_bound: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
    const std::size_t n = m.rows();
    if (n == 0) throw ShapeError("spectral_radius_bound: empty matrix");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-9)
                throw ShapeError("spectral_radius_bound: matrix is not symmetric");

    // Deterministic start with a mild gradient so it is not orthogonal to the
    // dominant eigenvector of typical inputs.
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i);
    double nx = 0.0;
    for (double xi : x) nx += xi * xi;
    nx = std::sqrt(nx);
    for (double& xi : x) xi /= nx;

    double estimate = 0.0;
    for (int it = 0; it < 10000; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = m.row(i);
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        double ny = 0.0;
        for (double yi : y) ny += yi * yi;
        ny = std::sqrt(ny);
        if (ny < 1e-300) return 0.0; // x in the null space: zero matrix for our inputs
        const double prev = estimate;
        estimate = ny; // ||m x|| with unit x
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        if (it > 0 && std::abs(estimate - prev) <= 1e-8 * std::max(estimate, 1e-300)) break;
    }
    return estimate;
}

} // namespace mdreg
