#pragma once

#include <cmath>
#include <cstdint>

namespace chebclt {

// SplitMix64 finalizer; also used to key independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s = h ^ b;
    return splitmix64(s);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_keys(mix_keys(a, b), c);
}

// Small deterministic generator. Streams are keyed rather than sequenced:
// every (seed, label) pair opens an independent stream, so draws do not
// depend on enumeration order or thread schedule.
class Rng {
public:
    explicit Rng(std::uint64_t key) : state_(key) {}

    static Rng keyed(std::uint64_t seed, std::uint64_t label) { return Rng(mix_keys(seed, label)); }
    static Rng keyed(std::uint64_t seed, std::uint64_t label, std::uint64_t salt) {
        return Rng(mix_keys(seed, label, salt));
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform on [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1], safe as a log argument.
    double next_double_open() { return 1.0 - next_double(); }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller; the second variate is cached.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u = next_double_open();
        double v = next_double();
        double r = std::sqrt(-2.0 * std::log(u));
        double angle = 6.283185307179586476925286766559 * v;
        cached_ = r * std::sin(angle);
        have_cached_ = true;
        return r * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace chebclt
