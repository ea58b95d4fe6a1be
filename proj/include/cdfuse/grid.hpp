#pragma once
#include <vector>

namespace cdfuse {

// Tabulated density over an increasing grid. Shared carrier for marginal
// posteriors, profile likelihoods, and confidence densities.
struct GridDensity {
    std::vector<double> grid;
    std::vector<double> values;
    bool normalized = false;

    // Scales values so the trapezoid integral is 1 and sets the flag.
    // Throws NumericError when the mass is zero or not finite.
    void normalize();

    // Linear interpolation of the density at x (0 outside the grid).
    double pdf(double x) const;

    // Trapezoid CDF over the grid, clamped to end exactly at 1 when
    // normalized; same length as grid.
    std::vector<double> cdf_values() const;
};

double grid_mean(const GridDensity& g);

} // namespace cdfuse
