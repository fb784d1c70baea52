// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 only; reached through the dispatcher after a CPUID check.
#include "mustructure/kernels.hpp"

#include <immintrin.h>

namespace mustructure::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void xpay_avx2(const double* x, double a, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), prod));
    }
    for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] = a * x[i];
}

void spmv_avx2(const CsrView& A, const double* x, double* y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        std::int32_t k = A.row_ptr[r];
        const std::int32_t end = A.row_ptr[r + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; k + 4 <= end; k += 4) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(A.cols + k));
            const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(A.vals + k), xv));
        }
        double s = hsum(acc);
        for (; k < end; ++k) s += A.vals[k] * x[A.cols[k]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable t{Isa::Avx2, dot_avx2, axpy_avx2, xpay_avx2, scale_avx2, spmv_avx2};
    return t;
}

}  // namespace mustructure::kernels::detail
