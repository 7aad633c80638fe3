#include "doctest.h"

#include "bwf/random.hpp"
#include "bwf/simd/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

using namespace bwf;

namespace {

std::vector<double> random_vector(RandomStream& rng, std::size_t n, double lo, double hi)
{
    std::vector<double> v(n);
    for (auto& x : v)
        x = lo + (hi - lo) * rng.uniform();
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
            return false;
    return true;
}

}  // namespace

TEST_CASE("scalar kernels match their definitions")
{
    const auto& k = simd::table(simd::Backend::Scalar);
    std::vector<double> r{2.0, 0.5, 10.0};
    std::vector<double> dh{0.02, -0.02, 0.0};
    std::vector<double> q(3), p(3);
    k.pipe_flows(3, r.data(), dh.data(), 1e-6, q.data(), p.data());
    CHECK(q[0] == doctest::Approx(0.1));   // 2 * 0.1^2 = 0.02
    CHECK(q[1] == doctest::Approx(-0.2));  // 0.5 * 0.2^2 = 0.02
    CHECK(q[2] == 0.0);
    CHECK(p[0] == doctest::Approx(1.0 / 0.4));  // 1 / (2 r |q|)
    CHECK(p[1] == doctest::Approx(1.0 / 0.2));
    CHECK(p[2] == doctest::Approx(1e6));  // floored gradient

    std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    CHECK(k.sum(x.size(), x.data()) == 28.0);
    std::vector<double> a{1, 1, 1}, b{3, 3, 3}, out(3);
    k.blend(3, 0.25, a.data(), b.data(), out.data());
    CHECK(out[2] == 2.5);
    std::vector<double> neg{-1.0, 2.0, -0.0, -3.0, 4.0};
    CHECK(k.clamp_nonnegative(neg.size(), neg.data()) == 2);
    CHECK(neg[0] == 0.0);
    CHECK(neg[3] == 0.0);
}

TEST_CASE("vector backend is bit-identical to the scalar reference")
{
    if (!simd::backend_available(simd::Backend::Avx2)) {
        MESSAGE("AVX2 not available on this host; equivalence check skipped");
        return;
    }
    const auto& ref = simd::table(simd::Backend::Scalar);
    const auto& vec = simd::table(simd::Backend::Avx2);
    RandomStream rng(42);
    for (std::size_t n = 0; n < 70; ++n) {
        auto r = random_vector(rng, n, 0.0, 500.0);
        for (double& v : r)
            v += 1e-3;
        auto dh = random_vector(rng, n, -50.0, 50.0);
        if (n > 3)
            dh[2] = 0.0;
        if (n > 5)
            dh[5] = -0.0;
        std::vector<double> q1(n), p1(n), q2(n), p2(n);
        ref.pipe_flows(n, r.data(), dh.data(), 1e-6, q1.data(), p1.data());
        vec.pipe_flows(n, r.data(), dh.data(), 1e-6, q2.data(), p2.data());
        CHECK(same_bits(q1, q2));
        CHECK(same_bits(p1, p2));

        auto x = random_vector(rng, n, -1e3, 1e3);
        CHECK(std::bit_cast<std::uint64_t>(ref.sum(n, x.data())) == std::bit_cast<std::uint64_t>(vec.sum(n, x.data())));

        auto s1 = x, s2 = x;
        ref.scale(n, 1.7, s1.data());
        vec.scale(n, 1.7, s2.data());
        CHECK(same_bits(s1, s2));

        auto a = random_vector(rng, n, 0.0, 3.0), b = random_vector(rng, n, 0.0, 3.0);
        std::vector<double> o1(n), o2(n);
        ref.blend(n, 0.37, a.data(), b.data(), o1.data());
        vec.blend(n, 0.37, a.data(), b.data(), o2.data());
        CHECK(same_bits(o1, o2));

        auto m1 = x, m2 = x;
        ref.multiply(n, a.data(), m1.data());
        vec.multiply(n, a.data(), m2.data());
        CHECK(same_bits(m1, m2));

        auto c1 = x, c2 = x;
        CHECK(ref.clamp_nonnegative(n, c1.data()) == vec.clamp_nonnegative(n, c2.data()));
        CHECK(same_bits(c1, c2));
    }
}

TEST_CASE("backend can be forced and restored")
{
    auto before = simd::active_backend();
    simd::force_backend(simd::Backend::Scalar);
    CHECK(simd::active_backend() == simd::Backend::Scalar);
    std::vector<double> x{1.0, 2.0};
    CHECK(simd::sum(x) == 3.0);
    simd::force_backend(before);
    CHECK(simd::active_backend() == before);
}
