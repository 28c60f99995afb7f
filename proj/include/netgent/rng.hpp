#pragma once

#include <cstdint>
#include <random>

namespace netgent {

// Seeded generator with distribution code pinned in this header, so a given
// seed yields the same stream on every platform and standard library.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased value in [0, n). n == 0 returns 0.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    // Inclusive integer range.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (hi <= lo) return lo;
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(below(span));
    }

    // [lo, hi) with 53-bit resolution.
    double uniform_double(double lo, double hi) {
        const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + unit * (hi - lo);
    }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform_double(0.0, 1.0) < p;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace netgent
