#pragma once

#include <cstdint>
#include <random>

namespace stn {

/// Seeded RNG owned by one run. All stochastic choices in a run flow through
/// a single instance so (seed, config) reproduce every draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

    /// Derive an independent stream, e.g. one per search trial.
    Rng split(std::uint64_t salt) {
        std::seed_seq seq{static_cast<std::uint64_t>(engine_()), salt};
        std::mt19937_64 e(seq);
        Rng r(0);
        r.engine_ = e;
        return r;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace stn
