#include "cdfuse/stats.hpp"

#include <algorithm>
#include <cmath>

#include "cdfuse/errors.hpp"
#include "cdfuse/specfun.hpp"

namespace cdfuse {

double sample_mean(const std::vector<double>& x) {
    if (x.empty()) throw UsageError("sample_mean: empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / x.size();
}

double sample_sd(const std::vector<double>& x) {
    if (x.size() < 2) throw UsageError("sample_sd: need at least 2 points");
    double m = sample_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / (x.size() - 1));
}

double sample_quantile(std::vector<double> x, double p) {
    if (x.empty()) throw UsageError("sample_quantile: empty sample");
    std::sort(x.begin(), x.end());
    double pos = p * (x.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= x.size()) return x.back();
    double t = pos - lo;
    return x[lo] + t * (x[lo + 1] - x[lo]);
}

KsResult ks_test_uniform(std::vector<double> u) {
    if (u.empty()) throw UsageError("ks_test_uniform: empty sample");
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        double hi = (i + 1) / n - u[i];
        double lo = u[i] - i / n;
        d = std::max(d, std::max(hi, lo));
    }
    // Stephens' small-sample adjustment of the Kolmogorov limit.
    double scale = std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n);
    double p = 1.0 - kolmogorov_cdf(scale * d);
    return {d, std::clamp(p, 0.0, 1.0)};
}

double chi2_gof_pvalue(const std::vector<double>& observed,
                       const std::vector<double>& expected,
                       int fitted_params) {
    if (observed.size() != expected.size() || observed.empty())
        throw UsageError("chi2_gof_pvalue: size mismatch");
    double stat = 0.0;
    int cells = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) continue;
        double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
        ++cells;
    }
    int dof = cells - 1 - fitted_params;
    if (dof < 1) throw UsageError("chi2_gof_pvalue: not enough cells");
    return chi2_sf(stat, dof);
}

} // namespace cdfuse
