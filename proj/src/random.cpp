#include "bwf/random.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace bwf {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::string_view scope,
                          std::int64_t index)
{
    std::string key;
    key.reserve(name.size() + scope.size() + 24);
    key.append(name);
    key.push_back('\x1f');
    key.append(scope);
    key.push_back('\x1f');
    key.append(std::to_string(index));
    return splitmix64(master ^ splitmix64(fnv1a64(key)));
}

double keyed_uniform(std::uint64_t master, std::string_view name, std::string_view scope,
                     std::int64_t index)
{
    std::uint64_t bits = derive_seed(master, name, scope, index);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::open_uniform()
{
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal()
{
    double u1 = open_uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int RandomStream::uniform_int(int lo, int hi)
{
    if (hi <= lo)
        return lo;
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(static_cast<std::uint64_t>(uniform() * static_cast<double>(span)));
}

}  // namespace bwf
