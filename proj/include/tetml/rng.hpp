#ifndef TETML_RNG_HPP
#define TETML_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

namespace tetml {

// Deterministic splitmix64 generator. Identical streams on every platform,
// which keeps report files byte-identical for a given seed.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed = 0x9e3779b97f4a7c15ull) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return (double)(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::vector<double> normal_vector(size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = normal();
        return v;
    }
};

} // namespace tetml

#endif
