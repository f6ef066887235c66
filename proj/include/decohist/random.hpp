#pragma once

#include <cstdint>
#include <random>

#include "decohist/hilbert.hpp"

namespace decohist::rng {

// Seed splitting: child k of master seed s is splitmix64(s + (k+1)*GOLDEN),
// where GOLDEN = 0x9E3779B97F4A7C15 and splitmix64 is the finalizer below.
// Every stochastic routine derives its own child seed this way, so results
// are reproducible and independent of thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

using Engine = std::mt19937_64;

inline Engine engine_for(std::uint64_t master, std::uint64_t index) {
    return Engine(child_seed(master, index));
}

// Standard complex Gaussian matrix.
Matrix ginibre(Index rows, Index cols, Engine& eng);

// Haar-distributed unit vector / unitary (QR of a Ginibre matrix with the
// R-diagonal phases absorbed, Mezzadri's recipe).
Vector haar_vector(Index dim, Engine& eng);
Matrix haar_unitary(Index dim, Engine& eng);

HermitianOperator random_hermitian(Index dim, Engine& eng);

// Full-rank random state: (G G† + boost·I) normalized.
DensityMatrix random_density(Index dim, Engine& eng, double boost = 1e-2);

} // namespace decohist::rng
