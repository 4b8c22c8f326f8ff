#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qcurv {

// Seeded generator whose draws are identical on every standard library:
// mt19937_64 is fully specified, and the conversions below avoid the
// implementation-defined distribution classes.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform on {0, ..., bound - 1}.
    std::uint64_t below(std::uint64_t bound) { return static_cast<std::uint64_t>(uniform() * bound); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qcurv
