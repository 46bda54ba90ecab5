// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace polarnn {

using Rng = std::mt19937_64;

/// Environment variable that caps the OpenMP worker count.
inline constexpr const char* kThreadsEnvVar = "POLARNN_THREADS";

/// Applies POLARNN_THREADS (if set and positive) to the OpenMP runtime and
/// returns the effective worker count.
int configure_workers();

/// Independent stream for one unit of work. Streams are keyed by work
/// coordinates, not by thread, so results do not depend on worker count.
Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace polarnn
