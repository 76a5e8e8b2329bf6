#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace moira {

// Deterministic RNG. The engine is mt19937_64 (bit-exact by the standard);
// the distributions are hand-rolled so that streams are reproducible across
// standard library implementations, which std::normal_distribution is not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (cosine branch only)
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // uniform integer in [0, n), n > 0
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

// All project randomness flows from one root seed through named substreams
// (e.g. "split", "init/enc/<modality>", "dropout/predictor"). Substreams for
// one component are unaffected by what other components draw.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name);

inline Rng substream(std::uint64_t root, std::string_view name) {
    return Rng(substream_seed(root, name));
}

} // namespace moira
