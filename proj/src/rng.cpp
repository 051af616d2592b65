#include "ovmix/rng.hpp"

#include <cmath>

#include "ovmix/error.hpp"

namespace ovmix {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
    return mix64(fnv1a64(stage) ^ seed);
}

double Rng::normal() {
    // uniform() can return 0; shift into (0, 1] for the log.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) {
        throw Error("Rng::index: n must be positive");
    }
    // Multiplicative bias is ~n / 2^53 and irrelevant at benchmark scale.
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw Error("Rng::gamma: shape must be positive");
    }
    if (shape < 1.0) {
        // Boost trick: Gamma(a) = Gamma(a + 1) * U^(1/a).
        double u = 1.0 - uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) {
            return d * v;
        }
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

double Rng::beta_symmetric(double g) {
    const double x = gamma(g);
    const double y = gamma(g);
    const double s = x + y;
    if (s <= 0.0) {
        return 0.5;  // both gammas underflowed; the symmetric midpoint
    }
    return x / s;
}

}  // namespace ovmix
