#pragma once
#include <functional>
#include <variant>
#include <vector>

#include "cdfuse/bayes.hpp"
#include "cdfuse/elicit.hpp"
#include "cdfuse/grid.hpp"
#include "cdfuse/rng.hpp"

namespace cdfuse {

// A confidence distribution: a CDF over the parameter range plus its
// density on a grid. Normal- and histogram-backed instances answer
// cdf/quantile queries analytically (exact tails); everything else
// interpolates the grid.
struct ConfDist {
    GridDensity density; // normalized
    std::vector<double> cdf;

    struct NormalBack {
        double mu, sd;
    };
    struct HistBack {
        std::vector<double> edges; // bin edges, increasing
        std::vector<double> cum;   // CDF at each edge, cum.front()=0, cum.back()=1
    };
    std::variant<std::monostate, NormalBack, HistBack> backing;

    double support_lo() const { return density.grid.front(); }
    double support_hi() const { return density.grid.back(); }

    double cdf_at(double x) const;
    double pdf_at(double x) const;
    // Smallest x with cdf(x) >= p. Requires p in (0,1).
    double quantile(double p) const;
    double median() const { return quantile(0.5); }
    double mean() const;
    double sd() const;
};

// Combination weights; the reference choice is (1/sigma_d, 1/C_d), the
// reciprocal spreads of the prior and trial evidence.
struct CombinerSpec {
    double w1; // prior CD weight
    double w2; // trial CD weight
};

// Piecewise-linear CDF of the pooled expert histogram (uniform density
// within each bin), supported on [first edge, last edge].
ConfDist prior_cd_from_histogram(const PooledHistogram& h);

// Normal CD for the prior evidence.
ConfDist prior_cd_normal(double mu_d, double sigma_d);

// Wald CD for the trial: normal with center s1/n1 - s0/n0 and variance
// p1(1-p1)/n1 + p0(1-p0)/n0 at the plug-in proportions. Throws UsageError
// when an arm is all successes or all failures (the plug-in variance
// degenerates; use trial_cd_profile).
ConfDist trial_cd_wald(const TrialData& d);

// Profile-likelihood CD: density proportional to exp(profile_loglik),
// normalized over (-1,1).
ConfDist trial_cd_profile(const TrialData& d, int resolution = 4001);

// Normal-combination of two CDs on the union of their supports:
// Phi((w1*Phi^-1(H0) + w2*Phi^-1(HT)) / sqrt(w1^2 + w2^2)), the inverse-CDF
// arguments clipped to [1e-15, 1-1e-15]. Throws UsageError for
// non-positive weights or disjoint supports.
ConfDist combine_cds(const ConfDist& h0, const ConfDist& ht, const CombinerSpec& spec);

// Closed form of the combination when both inputs are normal: the
// precision-weighted normal. Same preconditions as trial_cd_wald.
ConfDist combined_normal_closed_form(double mu_d, double sigma_d, const TrialData& d);

// Repeated-sampling check of the defining CD property: pit_draw must
// simulate one dataset under the true parameter and return the candidate
// CD evaluated there. Returns the KS p-value against U(0,1).
double cd_validate_uniformity(const std::function<double(Rng&)>& pit_draw, int reps,
                              Rng& rng);

} // namespace cdfuse
