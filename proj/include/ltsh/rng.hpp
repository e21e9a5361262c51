#pragma once

#include <cstdint>

namespace ltsh {

/* SplitMix64: tiny, fast, and bit-identical on every platform, unlike the
   std::uniform_* distributions. All randomized scans derive their draws from
   this so reports are reproducible from (config, seed) alone. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /* Uniform in [0, bound) by rejection; bound = 0 is a contract error. */
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /* Derive an independent stream; used to give each scan level its own
       deterministic sequence regardless of evaluation order. */
    Rng fork(std::uint64_t tag) {
        return Rng(next() ^ (tag * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    }

private:
    std::uint64_t state_;
};

} // namespace ltsh
