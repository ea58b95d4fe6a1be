#pragma once
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "cdfuse/cd.hpp"
#include "cdfuse/grid.hpp"

namespace cdfuse {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Equal-tailed point-and-interval summary in the reference table layout.
struct SummaryReport {
    double mode = 0.0;
    double median = 0.0;
    double mean = 0.0;
    Interval i80, i90, i95;
};

enum class Statistic { mode, median, mean };

// Outcome of the discrepant-posterior check: whether the posterior's
// location statistic escapes the interval spanned by prior and likelihood.
struct DiscrepancyVerdict {
    Statistic statistic = Statistic::mean;
    double prior_value = 0.0;
    double likelihood_value = 0.0;
    double posterior_value = 0.0;
    bool discrepant = false;
    // True when any of mode/median/mean is discrepant, not just the
    // requested statistic.
    bool any_statistic = false;
    // Projection direction (a, b) when the check ran on a linear
    // combination a*p0 + b*p1 rather than delta itself.
    std::optional<std::pair<double, double>> direction;
};

// Mode by grid argmax with 3-point parabolic refinement, quantiles by CDF
// inversion, mean by trapezoid. Throws UsageError when the density is not
// normalized.
SummaryReport summarize(const GridDensity& g);

// Summary of a confidence distribution through its own quantile/mean
// machinery. The mode of a histogram-backed CD is the midpoint of its
// heaviest bin; a normal CD's mode is its center.
SummaryReport summarize(const ConfDist& c);

// Flags the discrepant-posterior phenomenon for the requested statistic;
// all three statistics are evaluated for the any_statistic flag.
DiscrepancyVerdict detect_discrepancy(const GridDensity& prior, const GridDensity& likelihood,
                                      const GridDensity& posterior, Statistic stat);

// Projects the three joints onto a*p0 + b*p1 for each direction
// (cos phi, sin phi) on a uniform angle grid over [0, 2*pi) and runs the
// mode-statistic discrepancy check per direction.
struct AngleVerdict {
    double angle = 0.0; // radians
    DiscrepancyVerdict verdict;
};
std::vector<AngleVerdict> directional_scan(const std::function<double(double, double)>& prior,
                                           const std::function<double(double, double)>& likelihood,
                                           const std::function<double(double, double)>& posterior,
                                           int angles = 360);

// Delta-projection of a joint density by composite Gauss-Legendre line
// integrals; agrees with marginalize_delta within 1e-6 sup-norm.
GridDensity project_joint_to_delta(const std::function<double(double, double)>& joint,
                                   int resolution = 2001);

// Marching-squares level curves of a joint density on the unit square.
// Segments are chained into polylines; closed marks a loop.
struct ContourLine {
    double level = 0.0;
    std::vector<std::pair<double, double>> points;
    bool closed = false;
};
std::vector<ContourLine> contour_export(const std::function<double(double, double)>& joint,
                                        const std::vector<double>& levels,
                                        int resolution = 257);

} // namespace cdfuse
