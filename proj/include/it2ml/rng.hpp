#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace it2ml {

// Deterministic xoshiro256++ stream. We roll our own instead of using
// <random> distributions because libstdc++/libc++ do not guarantee identical
// distribution output, and the training contract is bit-exact reproducibility
// for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    // Fisher-Yates, deterministic.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // Independent stream derived from (seed, tag). Components draw from their
    // own fork so that e.g. the fuzzifier estimator sees the same stream no
    // matter what ran before it.
    static Rng fork(std::uint64_t seed, std::string_view tag);

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

}  // namespace it2ml
