#include "mdreg/nn.hpp"

#include <cmath>
#include <string>

#include "mdreg/errors.hpp"

namespace mdreg {

Matrix LinearLayer::apply(const Matrix& x) const {
    if (x.cols() != w.cols())
        throw ShapeError("linear layer: input width " + std::to_string(x.cols()) +
                         " != weight width " + std::to_string(w.cols()));
    Matrix out(x.rows(), w.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xr = x.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            const double* wr = w.row(j);
            double acc = b.empty() ? 0.0 : b[j];
            for (std::size_t k = 0; k < w.cols(); ++k) acc += xr[k] * wr[k];
            o[j] = acc;
        }
    }
    return out;
}

namespace {

// Modified Gram-Schmidt over `count` vectors of length `len`, stored with
// stride. Two passes; vectors that collapse are redrawn from the rng.
void orthonormalize(std::vector<double*> vecs, std::size_t len, Rng& rng) {
    for (std::size_t j = 0; j < vecs.size(); ++j) {
        for (int attempt = 0; attempt < 16; ++attempt) {
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    double dot = 0.0;
                    for (std::size_t r = 0; r < len; ++r) dot += vecs[j][r] * vecs[i][r];
                    for (std::size_t r = 0; r < len; ++r) vecs[j][r] -= dot * vecs[i][r];
                }
            }
            double norm2 = 0.0;
            for (std::size_t r = 0; r < len; ++r) norm2 += vecs[j][r] * vecs[j][r];
            if (norm2 > 1e-16) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (std::size_t r = 0; r < len; ++r) vecs[j][r] *= inv;
                break;
            }
            for (std::size_t r = 0; r < len; ++r) vecs[j][r] = rng.normal();
        }
    }
}

} // namespace

Matrix make_orthonormal(Rng& rng, std::size_t out_dim, std::size_t in_dim) {
    Matrix m(out_dim, in_dim);
    for (std::size_t i = 0; i < out_dim; ++i)
        for (std::size_t j = 0; j < in_dim; ++j) m(i, j) = rng.normal();

    if (out_dim <= in_dim) {
        std::vector<double*> rows;
        for (std::size_t i = 0; i < out_dim; ++i) rows.push_back(m.row(i));
        orthonormalize(std::move(rows), in_dim, rng);
    } else {
        // Orthonormalize columns via a transposed working copy.
        Matrix t = transpose(m);
        std::vector<double*> rows;
        for (std::size_t i = 0; i < in_dim; ++i) rows.push_back(t.row(i));
        orthonormalize(std::move(rows), out_dim, rng);
        m = transpose(t);
    }
    return m;
}

LinearLayer make_linear(Rng& rng, std::size_t in_dim, std::size_t out_dim) {
    LinearLayer layer;
    layer.w = make_orthonormal(rng, out_dim, in_dim);
    layer.b.assign(out_dim, 0.0);
    return layer;
}

Matrix relu(Matrix m) {
    for (double& x : m.data())
        if (x < 0.0) x = 0.0;
    return m;
}

Matrix tanh_map(Matrix m) {
    for (double& x : m.data()) x = std::tanh(x);
    return m;
}

Matrix row_standardize(const Matrix& m, double epsilon) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* in = m.row(i);
        double* o = out.row(i);
        double mean = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) mean += in[j];
        mean /= static_cast<double>(m.cols());
        double var = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) var += (in[j] - mean) * (in[j] - mean);
        var /= static_cast<double>(m.cols());
        const double inv = 1.0 / std::sqrt(var + epsilon);
        for (std::size_t j = 0; j < m.cols(); ++j) o[j] = (in[j] - mean) * inv;
    }
    return out;
}

} // namespace mdreg
