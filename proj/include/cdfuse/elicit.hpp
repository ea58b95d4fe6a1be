#pragma once
#include <array>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cdfuse/rng.hpp"
#include "cdfuse/specfun.hpp"

namespace cdfuse {

inline constexpr int kSurveyBins = 12;

// 13 uniform edges, width 0.04, spanning -0.24 .. +0.24.
std::vector<double> default_bin_edges();

// One row per expert; weights are percents of 100 virtual patients.
struct SurveyTable {
    std::vector<std::array<double, kSurveyBins>> experts;
    std::vector<double> bin_edges;   // 13, strictly increasing
    std::vector<std::string> ids;    // optional, parallel to experts when present

    // Throws ValidationError naming the offending expert row.
    void validate() const;
};

struct PooledHistogram {
    std::array<double, kSurveyBins> weights{};  // column means / 100, sum to 1
    std::vector<double> bin_edges;
    double mean = 0.0;
    double sd = 0.0;
};

// Arithmetic pooling. Mean is the midpoint-rule mean; the variance adds the
// within-bin uniform term sum w_k width_k^2 / 12 unless within_bin_spread is
// false (midpoint-only moments).
PooledHistogram pool_survey(const SurveyTable& table, bool within_bin_spread = true);

// Piecewise-constant density w_k / width_k on [L_k, L_{k+1}); 0 outside.
double histogram_density(const PooledHistogram& h, double delta);

struct MomentTargets {
    double mu0 = 0.0;     // mean control-arm effectiveness
    double sigma0 = 0.0;  // its sd (from earlier trials; config input)
    double mu_d = 0.0;    // mean improvement
    double sigma_d = 0.0; // its sd
};

struct IndepBetaPrior { BetaParams arm0, arm1; };
struct HierBetaPrior  { double alpha0, beta0, alpha1, beta1; };
struct HierBibetaPrior{ double alpha0, alpha1, beta; };

struct PriorSpec {
    std::variant<IndepBetaPrior, HierBetaPrior, BibetaParams, HierBibetaPrior> family;
    MomentTargets targets;  // the moments the fit matched
};

// Method-of-moments fits. All throw FitError on infeasible targets or
// root-finder failure; the fitted spec reproduces its targets within the
// solver tolerance.
PriorSpec fit_indep_beta(const MomentTargets& t);
PriorSpec fit_hier_beta(const MomentTargets& t);
PriorSpec fit_bibeta(const MomentTargets& t);
PriorSpec fit_hier_bibeta(const MomentTargets& t);

// First two moments of the pooled histogram, read as a normal prior.
std::pair<double, double> fit_normal_prior(const PooledHistogram& h);

struct ShiftedLognormal {
    double mu = 0.0;
    double sigma = 0.0;
    double shift = 0.0;
    double pdf(double delta) const;
};

// Moment-matched log-normal on delta - shift. Requires h.mean > shift.
ShiftedLognormal fit_lognormal_prior(const PooledHistogram& h, double shift);

// Marginal moments of the two-level construction
// p | xi, eta ~ Beta(xi eta, (1-xi) eta), xi ~ Beta(a, b), eta ~ Gamma(a+b).
double hier_beta_mean(double alpha, double beta);
double hier_beta_var(double alpha, double beta);

// Cross and difference moments of the three-level construction
// (q0, q1, r) ~ independent Gammas(alpha0, alpha1, beta), then
// (p0, p1) | q ~ the bivariate beta. Cross moment by 2-D quadrature.
double hier_bibeta_e_p0p1(double alpha0, double alpha1, double beta);
double hier_bibeta_e_delta_sq(double alpha0, double alpha1, double beta);

// Forward draw from the prior. State layout matches the sampler's:
//   IndepBeta, Bibeta: {p0, p1}
//   HierBeta:          {p0, p1, xi0, eta0, xi1, eta1}
//   HierBibeta:        {p0, p1, q0, q1, r}
std::vector<double> sample_prior_state(const PriorSpec& prior, Rng& rng);
std::pair<double, double> sample_prior(const PriorSpec& prior, Rng& rng);

} // namespace cdfuse
