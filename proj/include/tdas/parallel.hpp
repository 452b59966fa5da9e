// parallel.hpp: thread-count policy shared by the OpenMP kernels.

#pragma once

#include <optional>
#include <string_view>

namespace tdas {

// Parses a TDAS_THREADS value. std::nullopt for anything that is not a
// positive integer.
[[nodiscard]] std::optional<int> parse_thread_cap(std::string_view text);

// Worker threads for parallel kernels: the OpenMP default, capped by
// TDAS_THREADS when that holds a positive integer. Always >= 1.
[[nodiscard]] int thread_count();

} // namespace tdas
