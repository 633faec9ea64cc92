#include "epicast/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace epicast::rng {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_stream(std::uint64_t seed, std::string_view region,
                            std::uint32_t purpose, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ hash_bytes(region));
    h = splitmix64(h ^ purpose);
    h = splitmix64(h ^ index);
    return h;
}

double uniform01(Stream& s) {
    return static_cast<double>(s.next() >> 11) * 0x1.0p-53;
}

double uniform(Stream& s, double lo, double hi) {
    return lo + (hi - lo) * uniform01(s);
}

std::uint64_t uniform_index(Stream& s, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = s.next();
    } while (x >= limit);
    return x % n;
}

bool bernoulli(Stream& s, double p) {
    return uniform01(s) < p;
}

double normal01(Stream& s) {
    double u1;
    do {
        u1 = uniform01(s);
    } while (u1 <= 0.0);
    const double u2 = uniform01(s);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double gamma_draw(Stream& s, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw std::invalid_argument("gamma_draw: shape and scale must be positive");
    }
    if (shape < 1.0) {
        // Boost to shape+1 and thin by U^{1/shape}.
        double u;
        do {
            u = uniform01(s);
        } while (u <= 0.0);
        return gamma_draw(s, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal01(s);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(s);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
            return d * v * scale;
        }
    }
}

namespace {

// Inversion by sequential search on the uniform product; mean must be small
// enough that exp(-mean) stays comfortably above denormals.
std::int64_t poisson_small(Stream& s, double mean) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double prod = uniform01(s);
    while (prod > limit) {
        ++k;
        prod *= uniform01(s);
    }
    return k;
}

// Hoermann's PTRS transformed-rejection sampler, valid for mean >= 10.
std::int64_t poisson_ptrs(Stream& s, double mean) {
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = uniform01(s) - 0.5;
        const double v = uniform01(s);
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            kf * log_mean - mean - std::lgamma(kf + 1.0)) {
            return static_cast<std::int64_t>(kf);
        }
    }
}

}  // namespace

std::int64_t poisson_draw(Stream& s, double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_draw: mean must be >= 0");
    if (mean == 0.0) return 0;
    if (mean < 10.0) return poisson_small(s, mean);
    return poisson_ptrs(s, mean);
}

}  // namespace epicast::rng
