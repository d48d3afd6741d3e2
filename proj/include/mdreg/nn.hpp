#ifndef MDREG_NN_HPP
#define MDREG_NN_HPP

#include <vector>

#include "mdreg/linalg.hpp"
#include "mdreg/rng.hpp"

namespace mdreg {

// Minimal affine layer: rows of x map to x * w^T + b. Weights come from
// seeded orthonormal init (make_orthonormal) and biases default to zero, so
// an untrained layer is a deterministic, well-conditioned projection.
struct LinearLayer {
    Matrix w;               // out_dim x in_dim
    std::vector<double> b;  // out_dim, zero unless set explicitly

    Matrix apply(const Matrix& x) const;
};

// Gaussian matrix with the smaller dimension orthonormalized by modified
// Gram-Schmidt: rows when out_dim <= in_dim, columns otherwise. Deterministic
// for a given rng state.
Matrix make_orthonormal(Rng& rng, std::size_t out_dim, std::size_t in_dim);

LinearLayer make_linear(Rng& rng, std::size_t in_dim, std::size_t out_dim);

Matrix relu(Matrix m);
Matrix tanh_map(Matrix m);

// Per-row standardization (mean 0, unit variance with epsilon guard), the
// normalization step inside attention projections. Constant rows map to zero.
Matrix row_standardize(const Matrix& m, double epsilon = 1e-12);

} // namespace mdreg

#endif
