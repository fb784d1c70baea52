// SPDX-License-Identifier: Apache-2.0
// AArch64 only; NEON is part of the base ISA there.
#include "mustructure/kernels.hpp"

#include <arm_neon.h>

namespace mustructure::kernels::detail {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void xpay_neon(const double* x, double a, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(va, vld1q_f64(y + i))));
    for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale_neon(double a, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] = a * x[i];
}

void spmv_neon(const CsrView& A, const double* x, double* y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        std::int32_t k = A.row_ptr[r];
        const std::int32_t end = A.row_ptr[r + 1];
        float64x2_t acc = vdupq_n_f64(0.0);
        for (; k + 2 <= end; k += 2) {
            const double gathered[2] = {x[A.cols[k]], x[A.cols[k + 1]]};
            acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(A.vals + k), vld1q_f64(gathered)));
        }
        double s = vaddvq_f64(acc);
        for (; k < end; ++k) s += A.vals[k] * x[A.cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& neon_table() noexcept {
    static const KernelTable t{Isa::Neon, dot_neon, axpy_neon, xpay_neon, scale_neon, spmv_neon};
    return t;
}

}  // namespace mustructure::kernels::detail
