#pragma once
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "cdfuse/elicit.hpp"
#include "cdfuse/grid.hpp"

namespace cdfuse {

// Two-arm binary trial: arm 0 is control, arm 1 is treatment.
struct TrialData {
    int n0 = 0;
    int s0 = 0;
    int n1 = 0;
    int s1 = 0;

    // Throws ValidationError unless n >= 1 and 0 <= s <= n for both arms.
    void validate() const;
};

// Log-likelihood of (p0, p1) for a two-arm binomial trial. Boundary values
// of p follow the 0*log(0) = 0 convention: the result is -inf only when a
// boundary probability conflicts with a positive count.
double loglik(double p0, double p1, const TrialData& d);

// Profile log-likelihood of delta = p1 - p0: the maximum of loglik over
// p0 in (max(0, -delta), min(1, 1 - delta)). Throws std::domain_error when
// delta lies outside (-1, 1) so the interval is empty.
double profile_loglik(double delta, const TrialData& d);

// Conjugate update for the independent-beta family. Throws UsageError for
// any other prior family.
IndepBetaPrior exact_indep_beta_posterior(const PriorSpec& prior, const TrialData& d);

struct McmcConfig {
    enum class Mode { adaptive, paper };

    int burn_in = 25000;
    // Number of retained draws. In the default multi-chain scheme this is
    // also the number of independent chains (one draw kept per chain); when
    // thin > 0 a single chain is run and every thin-th post-burn-in state
    // is kept until this many draws are collected.
    int chains = 1000;
    double proposal_scale = 1.0;
    Mode mode = Mode::adaptive;
    std::uint64_t seed = 0;
    int thin = 0;
    // When true, hierarchical states are updated in two blocks per sweep:
    // the probability pair and the latent hyperparameters.
    bool blockwise = false;
};

struct PosteriorSamples {
    std::vector<std::pair<double, double>> draws; // (p0, p1)
    int burn_in = 0;
    int chains = 0;
    double acceptance_rate = 0.0;
    std::uint64_t seed = 0;
};

// Random-walk Metropolis sampler for any prior family, targeting the prior
// itself when data is nullopt and the posterior otherwise. Adaptive mode
// walks in logit/log-transformed coordinates with the step size tuned
// toward 0.234 acceptance and frozen at 60% of burn-in; paper mode uses a
// fixed-width uniform window on the untransformed state. Hierarchical
// families carry their latent variables in the chain state. Throws
// SamplerError if any chain accepts nothing.
PosteriorSamples mh_sample(const PriorSpec& prior, const std::optional<TrialData>& data,
                           const McmcConfig& cfg);

// Marginal density of delta = p1 - p0 for a (possibly unnormalized) joint
// density on the unit square, on a uniform grid over [-1, 1]. The result
// is normalized.
GridDensity marginalize_delta(const std::function<double(double, double)>& joint,
                              int resolution = 2001);

// Gaussian-kernel density estimate on a uniform grid over [lo, hi],
// renormalized on that support. bandwidth <= 0 selects Silverman's rule
// 0.9 * min(sd, IQR/1.34) * n^(-1/5). Throws NumericError when the sample
// is degenerate (fewer than two points or zero spread).
GridDensity kde_from_samples(const std::vector<double>& xs, double lo, double hi,
                             int grid_n = 2001, double bandwidth = 0.0);

// Convenience overload: applies transform to each (p0, p1) draw first.
GridDensity kde_from_samples(const PosteriorSamples& samples,
                             const std::function<double(double, double)>& transform,
                             double lo, double hi, int grid_n = 2001,
                             double bandwidth = 0.0);

} // namespace cdfuse
