#include "cdfuse/grid.hpp"

#include <cmath>

#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"

namespace cdfuse {

void GridDensity::normalize() {
    if (grid.size() < 2 || grid.size() != values.size())
        throw NumericError("GridDensity::normalize: grid and values must share a length >= 2");
    double total = trapz(grid, values);
    if (!std::isfinite(total) || total <= 0.0)
        throw NumericError("GridDensity::normalize: density mass is zero or not finite");
    for (double& v : values) v /= total;
    normalized = true;
}

double GridDensity::pdf(double x) const {
    if (grid.empty() || x < grid.front() || x > grid.back()) return 0.0;
    return interp(grid, values, x);
}

std::vector<double> GridDensity::cdf_values() const {
    std::vector<double> c = cumtrapz(grid, values);
    if (normalized && !c.empty() && c.back() > 0.0) {
        // Remove the residual trapezoid rounding so the CDF ends at 1.
        double scale = 1.0 / c.back();
        for (double& v : c) v = std::min(1.0, v * scale);
    }
    return c;
}

double grid_mean(const GridDensity& g) {
    std::vector<double> xf(g.grid.size());
    for (std::size_t i = 0; i < g.grid.size(); ++i) xf[i] = g.grid[i] * g.values[i];
    double mass = trapz(g.grid, g.values);
    if (!std::isfinite(mass) || mass <= 0.0)
        throw NumericError("grid_mean: density mass is zero or not finite");
    return trapz(g.grid, xf) / mass;
}

} // namespace cdfuse
