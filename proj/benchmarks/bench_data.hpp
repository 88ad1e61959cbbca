#pragma once

#include <random>
#include <vector>

#include "zsclust/embedspace.hpp"

namespace zsclust::bench {

inline EmbeddingMatrix blobs(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> centres(k * d);
    for (auto& c : centres) c = 6.0 * g(rng);
    std::vector<float> v(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = static_cast<float>(centres[(i % k) * d + j] + g(rng));
    }
    return EmbeddingMatrix(n, d, std::move(v));
}

inline std::vector<std::int64_t> partition(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::int64_t> out(n);
    for (auto& l : out) l = static_cast<std::int64_t>(rng() % k);
    return out;
}

}  // namespace zsclust::bench
