#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <boost/random/normal_distribution.hpp>

namespace semigraph {

using Rng = std::mt19937_64;

// Ziggurat sampler; about twice as fast as std::normal_distribution and its
// output does not depend on the standard library implementation.
using NormalDist = boost::random::normal_distribution<double>;

// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over the stream name.
constexpr std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Named substream seed: derive(seed, "context", 3) never collides with
// derive(seed, "noise", 3) in practice, and adding a new stream name leaves
// existing ones untouched.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view name,
                                    std::uint64_t index = 0) {
    return mix64(mix64(parent ^ hash_name(name)) + mix64(index + 1));
}

inline Rng make_rng(std::uint64_t parent, std::string_view name,
                    std::uint64_t index = 0) {
    return Rng(derive_seed(parent, name, index));
}

}  // namespace semigraph
