#pragma once

#include <cstddef>
#include <vector>

namespace emt {

// Dense row-major matrix of doubles.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& at(size_t r, size_t c) { return a[r * cols + c]; }
    double at(size_t r, size_t c) const { return a[r * cols + c]; }
    double* row(size_t r) { return a.data() + r * cols; }
    const double* row(size_t r) const { return a.data() + r * cols; }
    bool empty() const { return rows == 0 || cols == 0; }
};

namespace linalg {

// C = alpha * op(A) * op(B) + beta * C, ops selected by transpose flags.
void gemm(const Mat& A, bool trans_a, const Mat& B, bool trans_b, Mat& C,
          double alpha = 1.0, double beta = 0.0);

Mat matmul(const Mat& A, const Mat& B);

struct SymEig {
    std::vector<double> values;  // descending
    Mat vectors;                 // row k = eigenvector for values[k]
};

// Eigendecomposition of a symmetric matrix (values sorted descending).
SymEig sym_eig(const Mat& S);

// Eigen-decomposition of a symmetric tridiagonal matrix given diagonal d and
// off-diagonal e (ascending eigenvalues, vectors as columns of Z -> returned
// row-major with row k = eigenvector for value k).
SymEig tridiag_eig(std::vector<double> d, std::vector<double> e);

} // namespace linalg
} // namespace emt
