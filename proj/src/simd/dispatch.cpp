#include "bwf/error.hpp"
#include "bwf/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace bwf::simd {

namespace {

bool cpu_has_avx2()
{
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend detect()
{
    if (const char* env = std::getenv("BWF_SIMD")) {
        std::string want(env);
        if (want == "scalar")
            return Backend::Scalar;
        if (want == "avx2" && backend_available(Backend::Avx2))
            return Backend::Avx2;
    }
    return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

bool avx2_usable()
{
    static const bool usable = detail::avx2_table() != nullptr && cpu_has_avx2();
    return usable;
}

std::atomic<Backend>& current()
{
    static std::atomic<Backend> backend{detect()};
    return backend;
}

std::atomic<const KernelTable*>& current_table()
{
    static std::atomic<const KernelTable*> ptr{
        current().load() == Backend::Avx2 ? detail::avx2_table() : &detail::scalar_table()};
    return ptr;
}

}  // namespace

bool backend_available(Backend backend)
{
    switch (backend) {
    case Backend::Scalar:
        return true;
    case Backend::Avx2:
        return avx2_usable();
    }
    return false;
}

std::string_view backend_name(Backend backend)
{
    return backend == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& table(Backend backend)
{
    if (!backend_available(backend))
        throw ConfigError("SIMD backend '" + std::string(backend_name(backend)) + "' is not available");
    return backend == Backend::Avx2 ? *detail::avx2_table() : detail::scalar_table();
}

const KernelTable& active()
{
    return *current_table().load(std::memory_order_relaxed);
}

Backend active_backend()
{
    return current().load(std::memory_order_relaxed);
}

void force_backend(Backend backend)
{
    if (!backend_available(backend))
        throw ConfigError("SIMD backend '" + std::string(backend_name(backend)) + "' is not available");
    current().store(backend, std::memory_order_relaxed);
    current_table().store(&table(backend), std::memory_order_relaxed);
}

}  // namespace bwf::simd
