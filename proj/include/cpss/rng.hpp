#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cpss {

using Engine = std::mt19937_64;

/// Engine for substream `stream` of a recorded 64-bit seed. Streams are
/// decorrelated by a splitmix64 finaliser so neighbouring (seed, stream)
/// pairs give unrelated sequences.
Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Uniformly random permutation of 0..n-1 (Fisher-Yates; identical on every platform).
std::vector<int> random_permutation(int n, Engine& eng);

/// In-place Fisher-Yates shuffle.
void shuffle(std::vector<int>& v, Engine& eng);

}  // namespace cpss
