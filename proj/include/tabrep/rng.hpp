#pragma once

#include <cmath>
#include <cstdint>

namespace tabrep {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so shard layout and thread count never
// change the noise a given slot receives.
namespace rng {

inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t key(uint64_t seed, uint64_t stream, uint64_t counter) {
    return mix64(mix64(mix64(seed) ^ stream) + counter);
}

// uniform in [0, 1)
inline double to_unit(uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace rng

// A deterministic random stream addressed by (seed, stream); values are
// produced by an internal counter.  Cheap to construct, trivially copyable.
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream = 0)
        : seed_(seed), stream_(stream), counter_(0), has_spare_(false), spare_(0.0) {}

    uint64_t next_u64() { return rng::key(seed_, stream_, counter_++); }

    // [0, 1)
    double next_unit() { return rng::to_unit(next_u64()); }

    // integer in [0, n)
    uint64_t next_below(uint64_t n) {
        // 53-bit scaling; bias is negligible for the n used here (< 2^32)
        return static_cast<uint64_t>(next_unit() * static_cast<double>(n)) % n;
    }

    // standard normal via Box-Muller
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        // keep log() finite
        u1 = u1 > 0x1.0p-53 ? u1 : 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t counter_;
    bool has_spare_;
    double spare_;
};

// Fisher-Yates with fully specified draws; std::shuffle is not pinned down
// by the standard, which would make split indices platform-dependent.
template <typename Vec>
void deterministic_shuffle(Vec& v, uint64_t seed, uint64_t stream = 0) {
    CounterRng g(seed, stream);
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(g.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace tabrep
