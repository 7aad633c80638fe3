#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bwf {

// Seed derivation is part of the trace file contract: a sub-seed is
//   splitmix64(master ^ splitmix64(fnv1a64(name + 0x1F + scope + 0x1F + index)))
// so another implementation can regenerate any driver stream from the master seed.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::string_view scope,
                          std::int64_t index = 0);

// Keyed uniform in (0,1) with no stream state; used for realized one-off
// uncertainties (construction time, lifetimes, decay rates).
double keyed_uniform(std::uint64_t master, std::string_view name, std::string_view scope,
                     std::int64_t index = 0);

// mt19937_64 with explicitly pinned real-valued conversions. The standard
// distributions are implementation-defined, which would break cross-platform
// trace reproduction.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform();       // [0, 1)
    double open_uniform();  // (0, 1)
    double normal();        // standard normal, Box-Muller (cosine branch)
    int uniform_int(int lo, int hi);  // inclusive

private:
    std::mt19937_64 engine_;
};

}  // namespace bwf
