#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mfc {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based stream derivation: the generator for replication `rep` of a run
// seeded with `seed` depends only on (seed, rep), never on how many replications
// ran before it or on which thread runs it.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t rep = 0) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(rep + 0x51ed2701)));
}

// Uniform sample from the probability simplex over `dim` states (Dirichlet(1,..,1)).
inline Eigen::VectorXd sample_simplex(std::mt19937_64& rng, int dim) {
    std::exponential_distribution<double> exp1(1.0);
    Eigen::VectorXd v(dim);
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
        v[i] = exp1(rng);
        total += v[i];
    }
    return v / total;
}

} // namespace mfc
