#pragma once
#include <functional>
#include <vector>

namespace cdfuse {

// Adaptive Simpson on [a,b]; `tol` is an absolute tolerance on the result.
// The interval is first cut into `initial_panels` equal panels so narrow
// peaks cannot fall between the starting sample points of a single rule.
double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b, double tol, int max_depth = 60,
                          int initial_panels = 32);

// Composite Gauss-Legendre with `panels` panels of fixed 16-point rule.
double integrate_gl(const std::function<double(double)>& f,
                    double a, double b, int panels);

// Damped Newton in log-parameter space with finite-difference Jacobian and
// a Nelder-Mead fallback, per the shared root-finder policy: convergence at
// max|residual| < 1e-9, iteration cap 500. Residuals are whatever scaling
// the caller encodes in F. Throws FitError on failure, message carries the
// final residuals.
std::vector<double> solve_moments(
    const std::function<std::vector<double>(const std::vector<double>&)>& F,
    std::vector<double> start,
    double tol = 1e-9, int max_iter = 500);

// Uniform grid of n points on [a,b] inclusive.
std::vector<double> linspace(double a, double b, int n);

// Trapezoid integral of tabulated values over grid x.
double trapz(const std::vector<double>& x, const std::vector<double>& y);

// Cumulative trapezoid, same length as input, starting at 0.
std::vector<double> cumtrapz(const std::vector<double>& x,
                             const std::vector<double>& y);

// Piecewise-linear interpolation of tabulated (xs, ys) at x; clamps outside.
double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              double x);

// Inverse interpolation on a non-decreasing table (quantile lookup).
double interp_inverse(const std::vector<double>& xs,
                      const std::vector<double>& ys, double y);

// Runs fn(i) for i in [0,n) across worker threads, bounded by the
// CDFUSE_THREADS environment variable when set. Results must be written to
// caller-owned slots indexed by i so scheduling cannot affect output.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace cdfuse
