#ifndef FEDQ_RNG_HPP
#define FEDQ_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace fedq {

// splitmix64; used both as the core generator and to derive substream seeds.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic seeded random source. All randomness in the toolkit flows
// through instances of this class so that runs are byte-reproducible.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi].
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Unbiased integer in [0, n) by rejection.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Box-Muller; depends only on this source, so draws are reproducible.
    double gaussian(double sigma) {
        if (sigma == 0.0) return 0.0;
        double u1 = next_unit();
        double u2 = next_unit();
        while (u1 == 0.0) u1 = next_unit();
        return sigma * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::vector<unsigned char> bytes(size_t n) {
        std::vector<unsigned char> out(n);
        fill(out.data(), n);
        return out;
    }

    void fill(unsigned char* dst, size_t n) {
        size_t i = 0;
        while (i < n) {
            uint64_t v = next_u64();
            for (int b = 0; b < 8 && i < n; ++b, ++i) {
                dst[i] = static_cast<unsigned char>(v >> (8 * b));
            }
        }
    }

    std::string hex_token(size_t n_bytes) {
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(2 * n_bytes);
        for (unsigned char b : bytes(n_bytes)) {
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xf]);
        }
        return out;
    }

    // Independent substream; used to hand each party / row its own source.
    SeededRng derive(uint64_t stream) const {
        uint64_t s = state_ ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
        splitmix64(s);
        return SeededRng(s);
    }

private:
    uint64_t state_;
};

}  // namespace fedq

#endif
