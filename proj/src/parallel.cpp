#include "tdas/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tdas {

std::optional<int> parse_thread_cap(std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || value < 1) return std::nullopt;
    return value;
}

int thread_count() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("TDAS_THREADS")) {
        if (auto cap = parse_thread_cap(env)) n = std::min(n, *cap);
    }
    return std::max(n, 1);
}

} // namespace tdas
