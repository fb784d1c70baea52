// SPDX-License-Identifier: Apache-2.0
#include "mustructure/kernels.hpp"

namespace mustructure::kernels::detail {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void xpay_scalar(const double* x, double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = a * x[i];
}

void spmv_scalar(const CsrView& A, const double* x, double* y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (std::int32_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) s += A.vals[k] * x[A.cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable t{Isa::Scalar, dot_scalar, axpy_scalar, xpay_scalar, scale_scalar, spmv_scalar};
    return t;
}

}  // namespace mustructure::kernels::detail
