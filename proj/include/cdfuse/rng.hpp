#pragma once
#include <cstdint>

namespace cdfuse {

// Deterministic random source used throughout. The standard library's
// distribution objects are implementation-defined, which would break
// byte-identical artifact reproduction across toolchains, so the few
// samplers needed are implemented here on top of a splitmix64 core.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Independent stream for worker `index`; mixing the pair through the
    // generator keeps chains reproducible regardless of thread scheduling.
    static Rng derive(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();

    // Open interval (0,1); never returns an endpoint.
    double uniform();
    double uniform(double a, double b);

    // Inverse-CDF standard normal (exact monotone map from uniform()).
    double normal();

    // Standard gamma, Marsaglia-Tsang squeeze with the shape<1 boost.
    double gamma(double shape);

    double beta(double a, double b);

    // Exact binomial by Bernoulli summation; n here never exceeds ~1e4.
    int binomial(int n, double p);

private:
    std::uint64_t state_;
};

} // namespace cdfuse
