#pragma once

#include <cstdint>
#include <random>

namespace kaflab {

using Rng = std::mt19937_64;

/// Worker count for OpenMP regions: the OpenMP default, capped by the
/// KAFLAB_THREADS environment variable when it holds a positive integer.
int worker_count();

/// Applies worker_count() to the OpenMP runtime. Call once at startup.
void configure_threads();

/// Sub-seed for stream `index` of a master seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace kaflab
