#pragma once

#include <cstdint>

namespace hvlab::rng {

// Counter-based generator: every value is a hash of (key, counter), so a
// stream can be split at any trial index without touching shared state.
// The mix is the splitmix64 finalizer, which is well tested for Monte Carlo
// use at this scale.

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Stream {
  public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // isotropic unit 3-vector
    void unit_sphere(double& x, double& y, double& z);

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Root stream for (seed, stream_id); stream_id separates independent uses
// of the same user seed (e.g. the four CHSH correlations).
inline Stream make_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Stream(mix64(mix64(seed + kGolden) ^ mix64(stream_id)));
}

// Per-trial substream: trial i always sees the same values no matter which
// worker processes it.
inline Stream trial_stream(std::uint64_t seed, std::uint64_t stream_id,
                           std::uint64_t trial) {
    return Stream(mix64(mix64(seed + kGolden) ^ mix64(stream_id)) +
                  mix64(trial + 1));
}

} // namespace hvlab::rng
