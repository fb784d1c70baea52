// SPDX-License-Identifier: Apache-2.0
#include "mustructure/kernels.hpp"

#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mustructure::kernels {

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& table(Isa isa) {
    if (!supported(isa)) throw std::invalid_argument("kernel variant not supported on this CPU: " + std::string(to_string(isa)));
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: return detail::avx2_table();
#endif
#if defined(__aarch64__)
        case Isa::Neon: return detail::neon_table();
#endif
        default: return detail::scalar_table();
    }
}

namespace {

const KernelTable& select() noexcept {
    if (const char* env = std::getenv("MUSTRUCTURE_KERNELS")) {
        const std::string_view want(env);
        for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
            if (want == to_string(isa)) return supported(isa) ? table(isa) : detail::scalar_table();
        }
    }
    if (supported(Isa::Avx2)) return table(Isa::Avx2);
    if (supported(Isa::Neon)) return table(Isa::Neon);
    return detail::scalar_table();
}

}  // namespace

const KernelTable& active() noexcept {
    static const KernelTable& t = select();
    return t;
}

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().axpy(a, x.data(), y.data(), x.size());
}

void xpay(std::span<const double> x, double a, std::span<double> y) {
    assert(x.size() == y.size());
    active().xpay(x.data(), a, y.data(), x.size());
}

void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

void spmv(const CsrView& A, std::span<const double> x, std::span<double> y) {
    assert(y.size() == A.rows);
    (void)x;
    active().spmv(A, x.data(), y.data());
}

}  // namespace mustructure::kernels
