#pragma once

#include "cinnrl/numkit/var.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace cinnrl::num {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit hash.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent sub-stream, e.g. derive_seed(seed, "replay") or
/// derive_seed(seed, trajectory_index). Results do not depend on call order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

Matrix normal_matrix(Index rows, Index cols, Rng& rng, double stddev = 1.0);
Matrix uniform_matrix(Index rows, Index cols, Rng& rng, double lo, double hi);

}  // namespace cinnrl::num
