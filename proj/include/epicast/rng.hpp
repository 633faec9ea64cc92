#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace epicast::rng {

/// One independent random stream. The engine (mt19937_64) and every sampler
/// below are fully pinned, so a stream's output depends only on its seed —
/// not on platform, standard library version, or thread scheduling.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over the bytes of `s`.
std::uint64_t hash_bytes(std::string_view s);

/// Seed for the stream identified by (run seed, region, purpose, index).
/// Streams for distinct tuples are statistically independent, which makes
/// ensembles invariant under any parallel schedule.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view region,
                            std::uint32_t purpose, std::uint64_t index);

/// Uniform on [0, 1) with 53 random bits.
double uniform01(Stream& s);

double uniform(Stream& s, double lo, double hi);

/// Uniform integer on [0, n), unbiased (rejection). n must be >= 1.
std::uint64_t uniform_index(Stream& s, std::uint64_t n);

bool bernoulli(Stream& s, double p);

/// Standard normal via Box-Muller (one variate per call).
double normal01(Stream& s);

/// Gamma(shape, scale), Marsaglia-Tsang; shape > 0, scale > 0.
double gamma_draw(Stream& s, double shape, double scale);

/// Poisson(mean); inversion below mean 10, PTRS transformed rejection above.
std::int64_t poisson_draw(Stream& s, double mean);

}  // namespace epicast::rng
