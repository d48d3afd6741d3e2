#ifndef MDREG_LINALG_HPP
#define MDREG_LINALG_HPP

#include <array>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mdreg {

// Dense row-major matrix of doubles. Shape is fixed at construction; all
// shape checking happens in the free functions that combine matrices.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

    static Matrix identity(std::size_t n);

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vec3 = std::array<double, 3>;

// Rotation matrix, row-major 3x3. `validate` enforces orthonormality and
// det = +1, both within 1e-9; factories that compute rotations call it.
struct Rotation3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    Vec3 apply(const Vec3& p) const {
        return {m[0] * p[0] + m[1] * p[1] + m[2] * p[2],
                m[3] * p[0] + m[4] * p[1] + m[5] * p[2],
                m[6] * p[0] + m[7] * p[1] + m[8] * p[2]};
    }

    Rotation3 transposed() const;
    void validate() const; // throws ParameterError if not a proper rotation
};

struct Svd3 {
    Matrix u;               // 3x3, orthogonal
    std::array<double, 3> s; // descending, non-negative
    Matrix v;               // 3x3, orthogonal; input = u * diag(s) * v^T
};

// a(M x K) * b(K x N); ShapeError when inner dimensions differ.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Row-wise softmax with per-row max subtraction, stable for entries of any
// magnitude. Every output row sums to 1; uniform rows map to uniform rows.
Matrix softmax_rows(const Matrix& m);

// Full SVD of a 3x3 matrix by one-sided Jacobi orthogonalization of the
// columns. Rank-deficient inputs produce (near-)zero singular values and the
// corresponding u columns are completed to an orthonormal basis, so u and v
// are orthogonal within 1e-9 regardless of rank.
Svd3 svd3(const Matrix& m);

// Largest absolute eigenvalue of a symmetric matrix, by power iteration with
// a fixed deterministic start vector. Stops when the estimate changes by
// less than 1e-8 relative, or after 10000 iterations. Non-square or
// asymmetric (beyond 1e-9) input is a ShapeError.
double spectral_radius_bound(const Matrix& m);

} // namespace mdreg

#endif
