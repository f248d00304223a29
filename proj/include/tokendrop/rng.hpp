#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace tokendrop {

// Small counter-style PRNG (splitmix64). The standard <random> engines are
// fine, but the distributions are not bit-portable across library
// implementations; everything here is specified to the bit so that runs are
// reproducible from a single root seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). n must be > 0.
    int below(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }

    // Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // k distinct indices from [0, n), in selection order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            int j = i + below(n - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

private:
    uint64_t state_;
};

// Derives a stream seed from the root seed and a usage tag, so independent
// consumers (masking, plan sampling, init, ...) never share a stream.
inline uint64_t mix_seed(uint64_t root, uint64_t tag, uint64_t a = 0, uint64_t b = 0) {
    Rng r(root ^ (tag * 0xd1342543de82ef95ull));
    r.next();
    uint64_t s = r.next() ^ (a * 0xaf251af3b0f025b5ull) ^ (b * 0x9e3779b97f4a7c15ull);
    Rng r2(s);
    r2.next();
    return r2.next();
}

namespace seed_tag {
inline constexpr uint64_t kInit = 1;
inline constexpr uint64_t kMask = 2;
inline constexpr uint64_t kPlan = 3;
inline constexpr uint64_t kValMask = 4;
inline constexpr uint64_t kProbeData = 5;
inline constexpr uint64_t kProbeInit = 6;
inline constexpr uint64_t kCorpus = 7;
}  // namespace seed_tag

}  // namespace tokendrop
