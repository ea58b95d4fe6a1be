#include "cdfuse/rng.hpp"

#include <cmath>

#include "cdfuse/specfun.hpp"

namespace cdfuse {

static std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t index) {
    // Two mixing rounds decorrelate (seed, index) pairs even for small
    // consecutive indices.
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    std::uint64_t b = splitmix64(s);
    return Rng(b);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
    // 53-bit mantissa in (0,1); +0.5 offset keeps endpoints unreachable.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() { return normal_quantile(uniform()); }

double Rng::gamma(double shape) {
    if (shape < 1.0) {
        // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
        double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
}

int Rng::binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (uniform() < p) ++k;
    return k;
}

} // namespace cdfuse
