#pragma once
#include <vector>

namespace cdfuse {

double sample_mean(const std::vector<double>& x);
double sample_sd(const std::vector<double>& x);

// Quantile of a sample by linear interpolation between order statistics.
double sample_quantile(std::vector<double> x, double p);

struct KsResult {
    double statistic; // sup-norm distance D_n
    double p_value;   // Stephens' finite-n adjustment of the Kolmogorov limit
};

// One-sample KS test of `x` against the CDF values `u = F(x)`; pass the
// already-transformed PIT values (so testing against U(0,1)).
KsResult ks_test_uniform(std::vector<double> u);

// Chi-square goodness of fit: observed counts vs expected counts.
// Returns the p-value; dof = bins - 1 - fitted_params.
double chi2_gof_pvalue(const std::vector<double>& observed,
                       const std::vector<double>& expected,
                       int fitted_params = 0);

} // namespace cdfuse
