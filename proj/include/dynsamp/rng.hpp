// Named, reproducible random streams.
//
// Every stochastic module draws from its own stream, derived from
// (base seed, replicate, stream name). Modules therefore never disturb
// each other's draw sequences, and replicates are independent.
#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "dynsamp/common.hpp"

namespace dynsamp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t replicate,
                                        std::string_view name) {
    std::uint64_t h = splitmix64(base_seed);
    h = splitmix64(h ^ splitmix64(replicate + 0x51ed2701a9f3c4dULL));
    h = splitmix64(h ^ fnv1a64(name));
    return h;
}

class RngStream {
public:
    RngStream() : engine_(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream derive(std::uint64_t base_seed, std::uint64_t replicate,
                            std::string_view name) {
        return RngStream(derive_stream_seed(base_seed, replicate, name));
    }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    // p <= 0 never fires, p >= 1 always fires.
    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mean, double sd) {
        if (sd <= 0.0) return mean;
        return std::normal_distribution<double>(mean, sd)(engine_);
    }

    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(engine_);
    }

    // mean = shape * scale
    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(engine_);
    }

    // Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void restore(const std::string& state) {
        std::istringstream is(state);
        is >> engine_;
        if (is.fail()) throw ContractError("bad RNG state string");
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace dynsamp
