#pragma once

// Data-parallel arithmetic used by the hydraulic solver and the demand
// generator. Every kernel has a scalar reference and an AVX2 variant; the
// active table is picked once at startup from CPUID (override with the
// BWF_SIMD environment variable: "scalar" or "avx2").
//
// The variants are bit-identical, not merely close: both evaluate the same
// IEEE operation sequence (no FMA contraction) and reductions use the same
// four-lane blocked order. Simulation output therefore does not depend on
// which CPU ran it.

#include <cstddef>
#include <span>
#include <string_view>

namespace bwf::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    // For each pipe with headloss h = r q|q| and head difference dh:
    // flow = sign(dh) sqrt(|dh| / r), derivative = 1 / max(2 sqrt(r |dh|), min_gradient).
    void (*pipe_flows)(std::size_t n, const double* resistance, const double* head_difference,
                       double min_gradient, double* flow, double* derivative);
    double (*sum)(std::size_t n, const double* x);
    void (*scale)(std::size_t n, double factor, double* x);
    // out = w * a + (1 - w) * b
    void (*blend)(std::size_t n, double w, const double* a, const double* b, double* out);
    // x *= factors
    void (*multiply)(std::size_t n, const double* factors, double* x);
    // x = max(x, 0); returns the number of entries that were negative
    std::size_t (*clamp_nonnegative)(std::size_t n, double* x);
};

bool backend_available(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& table(Backend backend);
const KernelTable& active();
Backend active_backend();
void force_backend(Backend backend);  // throws ConfigError if unavailable

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

// Convenience wrappers over the active table.
inline double sum(std::span<const double> x) { return active().sum(x.size(), x.data()); }
inline void scale(std::span<double> x, double factor) { active().scale(x.size(), factor, x.data()); }
inline void blend(double w, std::span<const double> a, std::span<const double> b, std::span<double> out)
{
    active().blend(out.size(), w, a.data(), b.data(), out.data());
}
inline void multiply(std::span<double> x, std::span<const double> factors)
{
    active().multiply(x.size(), factors.data(), x.data());
}
inline std::size_t clamp_nonnegative(std::span<double> x) { return active().clamp_nonnegative(x.size(), x.data()); }

}  // namespace bwf::simd
