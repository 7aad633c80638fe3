#include "bwf/simd/kernels.hpp"

#include <cmath>

namespace bwf::simd::detail {

namespace {

void pipe_flows(std::size_t n, const double* resistance, const double* head_difference, double min_gradient,
                double* flow, double* derivative)
{
    for (std::size_t i = 0; i < n; ++i) {
        double a = std::fabs(head_difference[i]);
        double q = std::sqrt(a / resistance[i]);
        double g = std::sqrt(a * resistance[i]);
        g = g + g;
        g = g > min_gradient ? g : min_gradient;
        flow[i] = std::copysign(q, head_difference[i]);
        derivative[i] = 1.0 / g;
    }
}

// Four interleaved partial sums, combined pairwise, then the tail: the
// exact order the AVX2 version uses.
double sum(std::size_t n, const double* x)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += x[i];
        s1 += x[i + 1];
        s2 += x[i + 2];
        s3 += x[i + 3];
    }
    double total = (s0 + s2) + (s1 + s3);
    for (; i < n; ++i)
        total += x[i];
    return total;
}

void scale(std::size_t n, double factor, double* x)
{
    for (std::size_t i = 0; i < n; ++i)
        x[i] *= factor;
}

void blend(std::size_t n, double w, const double* a, const double* b, double* out)
{
    double v = 1.0 - w;
    for (std::size_t i = 0; i < n; ++i)
        out[i] = w * a[i] + v * b[i];
}

void multiply(std::size_t n, const double* factors, double* x)
{
    for (std::size_t i = 0; i < n; ++i)
        x[i] *= factors[i];
}

std::size_t clamp_nonnegative(std::size_t n, double* x)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] < 0.0) {
            x[i] = 0.0;
            ++count;
        }
    }
    return count;
}

constexpr KernelTable kScalar{pipe_flows, sum, scale, blend, multiply, clamp_nonnegative};

}  // namespace

const KernelTable& scalar_table()
{
    return kScalar;
}

}  // namespace bwf::simd::detail
