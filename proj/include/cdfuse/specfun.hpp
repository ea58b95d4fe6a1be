#pragma once
#include <utility>

#include "cdfuse/rng.hpp"

namespace cdfuse {

struct GammaParams {
    double shape; // > 0, scale fixed at 1
};

struct BetaParams {
    double q; // > 0
    double r; // > 0
};

// Olkin-Liu bivariate beta: p0 = U/(U+W), p1 = V/(V+W) with U,V,W
// independent standard gammas of shapes q0, q1, r. Both margins are beta
// and the shared W makes (p0,p1) positively dependent.
struct BibetaParams {
    double q0; // > 0
    double q1; // > 0
    double r;  // > 0
};

// ln B(a,b); relative error within 1e-12 for a,b in [1e-3, 1e6].
double log_beta_fn(double a, double b);

// 3F2(a,b,c; d,e; 1) by direct series, Kahan-summed, ratio-test tail bound.
// Requires convergence margin d+e-a-b-c > 0 (std::domain_error otherwise);
// iteration cap 1e7, then ConvergenceError carrying partial-sum diagnostics.
double hyp3f2_unit(double a, double b, double c, double d, double e);

// Unnormalized log joint density of the bivariate beta at (p0,p1) in (0,1)^2.
// Boundary inputs return -inf whenever the touched exponent is positive.
double bibeta_logpdf(double p0, double p1, const BibetaParams& params);

// Log normalizing constant: the density above integrates to exp(-this).
// Closed form lnGamma(q0+q1+r) - lnGamma(q0) - lnGamma(q1) - lnGamma(r),
// cross-checked against 2-D quadrature in the test suite.
double bibeta_log_norm(const BibetaParams& params);

// Exact draw through the three-gamma latent construction.
std::pair<double, double> bibeta_sample(const BibetaParams& params, Rng& rng);

// E(p0*p1) under the bivariate beta, via the 3F2 representation whose
// convergence margin equals r; for r < 1 an equivalent rearrangement with
// margin q0+q1+r is used instead (identical values, faster series).
double bibeta_e_p0p1(const BibetaParams& params);

// E(p1-p0)^2 under the bivariate beta.
double bibeta_e_delta_sq(const BibetaParams& params);

double beta_logpdf(double x, double a, double b);
double gamma_logpdf(double x, double shape);

// Standard normal CDF and its inverse (Wichura-grade rational minimax;
// absolute error far below the 1e-9 the CD grids need).
double normal_cdf(double x);
double normal_quantile(double p);

// Regularized incomplete gamma: lower P(s,x) and upper Q(s,x).
double gamma_p(double s, double x);
double gamma_q(double s, double x);

// Survival function of the chi-square distribution with k dof.
double chi2_sf(double x, double k);

// Kolmogorov limit CDF K(x) = P(sup|B(t)| <= x), series form on both sides.
double kolmogorov_cdf(double x);

// E[1/(1+eta)] for eta ~ Gamma(t,1) (the hierarchical-beta variance kernel),
// evaluated by adaptive quadrature after mapping [0,inf) through x=u/(1-u).
double expected_inv1p_gamma(double t);

} // namespace cdfuse
