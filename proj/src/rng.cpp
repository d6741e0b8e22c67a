#include "gm/rng.hpp"

#include <cmath>

namespace gm {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child) {
    return mix64(mix64(parent) + 0x9E3779B97F4A7C15ull * (child + 1));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_key) {
    std::seed_seq seq{mix64(master_seed),
                      mix64(stream_key),
                      mix64(master_seed ^ (stream_key * 0x517CC1B727220A95ull))};
    engine_.seed(seq);
}

double RngStream::uniform() {
    // top 53 bits give a uniform dyadic rational in [0, 1)
    return double(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // fixed Box-Muller transform: identical output on every platform
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Vector RngStream::normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

std::uint64_t RngStream::integer(std::uint64_t bound) {
    // rejection below the largest multiple of bound avoids modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % bound;
}

}  // namespace gm
