#include "emt/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <cblas.h>

#include "emt/error.hpp"

extern "C" {
void openblas_set_num_threads(int);
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a,
             const int* lda, double* w, double* work, const int* lwork,
             int* iwork, const int* liwork, int* info);
void dstev_(const char* jobz, const int* n, double* d, double* e, double* z,
            const int* ldz, double* work, int* info);
}

namespace emt::linalg {

namespace {
// Single-threaded BLAS: the pipeline parallelizes at the process level and
// threaded reductions would break bit-reproducibility.
struct BlasInit {
    BlasInit() { openblas_set_num_threads(1); }
};
const BlasInit blas_init;
} // namespace

void gemm(const Mat& A, bool trans_a, const Mat& B, bool trans_b, Mat& C,
          double alpha, double beta) {
    const size_t m = trans_a ? A.cols : A.rows;
    const size_t k = trans_a ? A.rows : A.cols;
    const size_t kb = trans_b ? B.cols : B.rows;
    const size_t n = trans_b ? B.rows : B.cols;
    if (k != kb)
        fail(ErrorCategory::Shape, "gemm: inner dimensions " + std::to_string(k) +
                                       " vs " + std::to_string(kb));
    if (C.rows != m || C.cols != n) {
        if (beta != 0.0)
            fail(ErrorCategory::Shape, "gemm: output shape mismatch with beta != 0");
        C = Mat(m, n);
    }
    if (m == 0 || n == 0) return;
    if (k == 0) {
        if (beta == 0.0) std::fill(C.a.begin(), C.a.end(), 0.0);
        return;
    }
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
                static_cast<int>(n), static_cast<int>(k), alpha, A.a.data(),
                static_cast<int>(A.cols), B.a.data(), static_cast<int>(B.cols),
                beta, C.a.data(), static_cast<int>(C.cols));
}

Mat matmul(const Mat& A, const Mat& B) {
    Mat C;
    gemm(A, false, B, false, C);
    return C;
}

SymEig sym_eig(const Mat& S) {
    if (S.rows != S.cols) fail(ErrorCategory::Shape, "sym_eig: matrix not square");
    const int n = static_cast<int>(S.rows);
    SymEig out;
    if (n == 0) return out;

    // LAPACK is column-major; a symmetric input is its own transpose.
    std::vector<double> a = S.a;
    std::vector<double> w(n);
    int info = 0;
    int lwork = -1, liwork = -1;
    double wkopt = 0;
    int iwkopt = 0;
    dsyevd_("V", "U", &n, a.data(), &n, w.data(), &wkopt, &lwork, &iwkopt,
            &liwork, &info);
    lwork = static_cast<int>(wkopt);
    liwork = iwkopt;
    std::vector<double> work(lwork);
    std::vector<int> iwork(liwork);
    dsyevd_("V", "U", &n, a.data(), &n, w.data(), work.data(), &lwork,
            iwork.data(), &liwork, &info);
    if (info != 0)
        fail(ErrorCategory::Internal, "dsyevd failed, info=" + std::to_string(info));

    // Ascending from LAPACK; return descending. Column j of the column-major
    // result is eigenvector j, i.e. a[j*n + i].
    out.values.resize(n);
    out.vectors = Mat(n, n);
    for (int k = 0; k < n; ++k) {
        const int j = n - 1 - k;
        out.values[k] = w[j];
        for (int i = 0; i < n; ++i) out.vectors.at(k, i) = a[static_cast<size_t>(j) * n + i];
    }
    return out;
}

SymEig tridiag_eig(std::vector<double> d, std::vector<double> e) {
    const int n = static_cast<int>(d.size());
    if (e.size() + 1 != d.size())
        fail(ErrorCategory::Shape, "tridiag_eig: off-diagonal length");
    SymEig out;
    if (n == 0) return out;
    std::vector<double> z(static_cast<size_t>(n) * n);
    std::vector<double> work(std::max(1, 2 * n - 2));
    int info = 0;
    dstev_("V", &n, d.data(), e.data(), z.data(), &n, work.data(), &info);
    if (info != 0)
        fail(ErrorCategory::Internal, "dstev failed, info=" + std::to_string(info));
    out.values = d; // ascending
    out.vectors = Mat(n, n);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) out.vectors.at(k, i) = z[static_cast<size_t>(k) * n + i];
    return out;
}

} // namespace emt::linalg
