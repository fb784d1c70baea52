// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense and sparse vector kernels used by the Krylov solvers. Every kernel
// has a scalar reference implementation; vector variants (AVX2 on x86-64,
// NEON on AArch64) are selected once at startup from the running CPU.
//
// Contract shared by all variants:
//  - axpy / xpay / scale are elementwise and use separate multiply and add
//    (no fused multiply-add), so vector results are bit-identical to scalar.
//  - dot and spmv reduce in a fixed, variant-specific order; results agree
//    with the scalar reference to rounding, and repeat bit-for-bit within a
//    variant.
//
// The environment variable MUSTRUCTURE_KERNELS=scalar|avx2|neon overrides
// the automatic choice (falls back to scalar when unsupported).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace mustructure::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

/// Read-only view of a CSR matrix.
struct CsrView {
    std::size_t rows = 0;
    const std::int32_t* row_ptr = nullptr;  // rows + 1 entries
    const std::int32_t* cols = nullptr;
    const double* vals = nullptr;
};

struct KernelTable {
    Isa isa;
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);   // y += a*x
    void (*xpay)(const double* x, double a, double* y, std::size_t n);   // y = x + a*y
    void (*scale)(double a, double* x, std::size_t n);                   // x *= a
    void (*spmv)(const CsrView& A, const double* x, double* y);          // y = A*x
};

bool supported(Isa isa) noexcept;
const KernelTable& table(Isa isa);  // throws std::invalid_argument when unsupported
const KernelTable& active() noexcept;

// Convenience wrappers over active().
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void xpay(std::span<const double> x, double a, std::span<double> y);
void scale(double a, std::span<double> x);
void spmv(const CsrView& A, std::span<const double> x, std::span<double> y);

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(__aarch64__)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace mustructure::kernels
