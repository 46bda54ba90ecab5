// SPDX-License-Identifier: Apache-2.0
#include "polarnn/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polarnn {

int configure_workers() {
#ifdef _OPENMP
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) omp_set_num_threads(cap);
    } catch (const std::exception&) {
      // unparseable cap: keep the runtime default
    }
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace polarnn
