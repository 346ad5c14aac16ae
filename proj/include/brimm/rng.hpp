#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "brimm/errors.hpp"

namespace brimm {

// All randomness in the library flows through RngStream so that results are
// reproducible bit-for-bit across platforms and thread schedules.  A stream
// is identified by a 64-bit key; substreams are derived by pure mixing of
// (key, index), never by consuming draws, so the mapping
// replicate/clan -> stream does not depend on execution order.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Key for substream `index` of the stream identified by `key`.
inline std::uint64_t derive_stream_key(std::uint64_t key, std::uint64_t index) {
    std::uint64_t s = key ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    splitmix64_next(s);
    return splitmix64_next(s);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key) {
        std::uint64_t s = key;
        for (auto& word : state_) word = splitmix64_next(s);
    }

    std::uint64_t key() const { return key_; }

    RngStream substream(std::uint64_t index) const {
        return RngStream(derive_stream_key(key_, index));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1], safe as a log argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double rate) {
        require(rate > 0.0, ErrorCode::invalid_argument, "exponential rate must be > 0");
        return -std::log(uniform_pos()) / rate;
    }

    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(6.283185307179586476925286766559 * uniform());
    }

    // Marsaglia-Tsang; shape < 1 boosted through G(a) = G(a+1) U^{1/a}.
    double gamma(double shape, double rate) {
        require(shape > 0.0 && rate > 0.0, ErrorCode::invalid_argument,
                "gamma parameters must be > 0");
        double boost_factor = 1.0;
        if (shape < 1.0) {
            boost_factor = std::pow(uniform_pos(), 1.0 / shape);
            shape += 1.0;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return boost_factor * d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return boost_factor * d * v / rate;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t key_;
    std::array<std::uint64_t, 4> state_{};
};

} // namespace brimm
