#include "mortlaw/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mortlaw {

int worker_threads() noexcept {
#ifdef _OPENMP
    int threads = omp_get_max_threads();
#else
    int threads = 1;
#endif
    if (const char *cap = std::getenv("MORTLAW_THREADS")) {
        char *end = nullptr;
        const long value = std::strtol(cap, &end, 10);
        if (end != cap && *end == '\0' && value > 0 && value < threads) {
            threads = static_cast<int>(value);
        }
    }
    return threads;
}

bool openmp_enabled() noexcept {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

} // namespace mortlaw
