#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fitkd {

// Seeded random stream. The distribution transforms are written out by hand
// (instead of std::normal_distribution and friends, whose algorithms are
// implementation-defined) so that a given seed produces the same stream on
// every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_seed_(seed), engine_(seed) {}

    // Derives an independent stream; used to parallelize generators over
    // disjoint substreams without sharing state.
    Rng split(std::uint64_t stream) const {
        return Rng(seed_mix(engine_seed_, stream));
    }

    static Rng seeded(std::uint64_t seed) { return Rng(seed); }

    double uniform() {
        // 53-bit mantissa construction in [0,1).
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + spare_ * stddev;
        }
        double u = 1.0 - uniform();  // avoid log(0)
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double theta = 2.0 * 3.14159265358979323846 * v;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + r * std::cos(theta) * stddev;
    }

    // Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw std::invalid_argument("rng: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
        // Rejection sampling keeps the draw unbiased.
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return lo + static_cast<int>(x % span);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i - 1)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the pair
        std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t engine_seed_ = 0;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fitkd
