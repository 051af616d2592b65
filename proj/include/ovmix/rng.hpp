#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ovmix {

// 64-bit FNV-1a. Used for config hashing and sub-seed derivation; must stay
// stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer; decorrelates nearby seeds.
std::uint64_t mix64(std::uint64_t x);

// Sub-seed for a named pipeline stage. All per-stage randomness derives from
// the single experiment seed through this function:
//   derive_seed(seed, stage) = mix64(fnv1a64(stage) ^ seed)
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

// Deterministic random stream. Wraps mt19937_64 but draws every variate with
// explicit algorithms: the std distributions are implementation-defined,
// which would break the byte-identical-output contract across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; two uniforms per draw, no cached state.
    double normal();

    // Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n);

    // true with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape > 0.
    double gamma(double shape);

    // Symmetric Beta(g, g) on [0, 1]; g > 0. Beta(1, 1) is Uniform[0, 1].
    double beta_symmetric(double g);

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace ovmix
