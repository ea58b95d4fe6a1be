#include "cdfuse/cd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"
#include "cdfuse/specfun.hpp"
#include "cdfuse/stats.hpp"

namespace cdfuse {
namespace {

constexpr double kClip = 1e-15;
constexpr int kGridPoints = 4001;
// Half-width of normal grids in standard deviations; the CDF beyond is
// below 1e-15, under the combiner's clipping floor.
constexpr double kNormalSpan = 8.5;

ConfDist make_normal_cd(double mu, double sd) {
    ConfDist c;
    c.density.grid = linspace(mu - kNormalSpan * sd, mu + kNormalSpan * sd, kGridPoints);
    c.density.values.resize(kGridPoints);
    c.cdf.resize(kGridPoints);
    const double inv = 1.0 / (sd * std::sqrt(2.0 * M_PI));
    for (int i = 0; i < kGridPoints; ++i) {
        double z = (c.density.grid[i] - mu) / sd;
        c.density.values[i] = inv * std::exp(-0.5 * z * z);
        c.cdf[i] = normal_cdf(z);
    }
    c.density.normalize();
    c.backing = ConfDist::NormalBack{mu, sd};
    return c;
}

struct WaldStats {
    double center, sd;
};

WaldStats wald_stats(const TrialData& d) {
    d.validate();
    if (d.s0 == 0 || d.s0 == d.n0 || d.s1 == 0 || d.s1 == d.n1)
        throw UsageError("trial_cd_wald: an arm is all successes or all failures, so the "
                         "plug-in variance degenerates; use trial_cd_profile instead");
    double p0 = static_cast<double>(d.s0) / d.n0;
    double p1 = static_cast<double>(d.s1) / d.n1;
    double var = p1 * (1.0 - p1) / d.n1 + p0 * (1.0 - p0) / d.n0;
    return {p1 - p0, std::sqrt(var)};
}

} // namespace

double ConfDist::cdf_at(double x) const {
    if (const auto* n = std::get_if<NormalBack>(&backing))
        return normal_cdf((x - n->mu) / n->sd);
    if (const auto* h = std::get_if<HistBack>(&backing)) {
        if (x <= h->edges.front()) return 0.0;
        if (x >= h->edges.back()) return 1.0;
        return interp(h->edges, h->cum, x);
    }
    if (x <= density.grid.front()) return 0.0;
    if (x >= density.grid.back()) return 1.0;
    return interp(density.grid, cdf, x);
}

double ConfDist::pdf_at(double x) const {
    if (const auto* n = std::get_if<NormalBack>(&backing)) {
        double z = (x - n->mu) / n->sd;
        return std::exp(-0.5 * z * z) / (n->sd * std::sqrt(2.0 * M_PI));
    }
    return density.pdf(x);
}

double ConfDist::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw UsageError("ConfDist::quantile: p must lie in (0,1)");
    if (const auto* n = std::get_if<NormalBack>(&backing))
        return n->mu + n->sd * normal_quantile(p);
    if (const auto* h = std::get_if<HistBack>(&backing)) {
        // Smallest x with F(x) >= p; zero-weight bins collapse to their
        // left edge.
        for (std::size_t k = 0; k + 1 < h->cum.size(); ++k) {
            if (h->cum[k] >= p) return h->edges[k];
            if (h->cum[k + 1] >= p) {
                double w = h->cum[k + 1] - h->cum[k];
                double frac = (p - h->cum[k]) / w;
                return h->edges[k] + frac * (h->edges[k + 1] - h->edges[k]);
            }
        }
        return h->edges.back();
    }
    for (std::size_t i = 1; i < cdf.size(); ++i) {
        if (cdf[i] >= p) {
            double w = cdf[i] - cdf[i - 1];
            if (w <= 0.0) return density.grid[i];
            double frac = (p - cdf[i - 1]) / w;
            return density.grid[i - 1] + frac * (density.grid[i] - density.grid[i - 1]);
        }
    }
    return density.grid.back();
}

double ConfDist::mean() const {
    if (const auto* n = std::get_if<NormalBack>(&backing)) return n->mu;
    return grid_mean(density);
}

double ConfDist::sd() const {
    if (const auto* n = std::get_if<NormalBack>(&backing)) return n->sd;
    double m = grid_mean(density);
    std::vector<double> sq(density.grid.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        double dx = density.grid[i] - m;
        sq[i] = dx * dx * density.values[i];
    }
    return std::sqrt(trapz(density.grid, sq));
}

ConfDist prior_cd_from_histogram(const PooledHistogram& h) {
    const std::size_t bins = h.weights.size();
    ConfDist c;
    ConfDist::HistBack back;
    back.edges.assign(h.bin_edges.begin(), h.bin_edges.end());
    back.cum.resize(bins + 1);
    back.cum[0] = 0.0;
    for (std::size_t k = 0; k < bins; ++k) back.cum[k + 1] = back.cum[k] + h.weights[k];
    const double total = back.cum.back();
    if (!(total > 0.0))
        throw ValidationError("prior_cd_from_histogram: histogram carries no mass");
    for (double& v : back.cum) v /= total;
    back.cum.back() = 1.0;

    // Aligned grid, equal point count per bin. Interior bin boundaries take
    // the average of the two flanking densities: the trapezoid errors of the
    // two straddling cells then cancel exactly, so the grid mass equals the
    // bin mass.
    const int per_bin = 333;
    c.density.grid.reserve(bins * per_bin + 1);
    c.density.values.reserve(bins * per_bin + 1);
    c.cdf.reserve(bins * per_bin + 1);
    for (std::size_t k = 0; k < bins; ++k) {
        const double lo = back.edges[k], hi = back.edges[k + 1];
        const double width = hi - lo;
        const double f = (h.weights[k] / total) / width;
        for (int i = 0; i < per_bin; ++i) {
            double x = lo + width * i / per_bin;
            double val = f;
            if (i == 0 && k > 0) {
                double fprev = (h.weights[k - 1] / total) / (back.edges[k] - back.edges[k - 1]);
                val = 0.5 * (fprev + f);
            }
            c.density.grid.push_back(x);
            c.density.values.push_back(val);
            c.cdf.push_back(back.cum[k] + f * (x - lo));
        }
    }
    c.density.grid.push_back(back.edges.back());
    c.density.values.push_back((h.weights[bins - 1] / total) /
                               (back.edges[bins] - back.edges[bins - 1]));
    c.cdf.push_back(1.0);
    c.density.normalize();
    c.backing = std::move(back);
    return c;
}

ConfDist prior_cd_normal(double mu_d, double sigma_d) {
    if (!(sigma_d > 0.0)) throw UsageError("prior_cd_normal: sigma_d must be positive");
    return make_normal_cd(mu_d, sigma_d);
}

ConfDist trial_cd_wald(const TrialData& d) {
    WaldStats w = wald_stats(d);
    return make_normal_cd(w.center, w.sd);
}

ConfDist trial_cd_profile(const TrialData& d, int resolution) {
    d.validate();
    if (resolution < 3) throw UsageError("trial_cd_profile: resolution must be >= 3");
    ConfDist c;
    c.density.grid = linspace(-1.0, 1.0, resolution);
    c.density.values.assign(resolution, 0.0);
    // Reference level so the exponentials stay in range; the profile at
    // the unrestricted MLE difference is the global maximum.
    const double ref =
        profile_loglik(static_cast<double>(d.s1) / d.n1 - static_cast<double>(d.s0) / d.n0, d);
    parallel_for(resolution, [&](int i) {
        double delta = c.density.grid[i];
        if (delta <= -1.0 || delta >= 1.0) return; // density vanishes at the ends
        c.density.values[i] = std::exp(profile_loglik(delta, d) - ref);
    });
    c.density.normalize();
    c.cdf = c.density.cdf_values();
    c.cdf.front() = 0.0;
    c.cdf.back() = 1.0;
    return c;
}

ConfDist combine_cds(const ConfDist& h0, const ConfDist& ht, const CombinerSpec& spec) {
    if (!(spec.w1 > 0.0) || !(spec.w2 > 0.0))
        throw UsageError("combine_cds: weights must be positive");
    if (std::max(h0.support_lo(), ht.support_lo()) >=
        std::min(h0.support_hi(), ht.support_hi()))
        throw UsageError("combine_cds: the two CDs have disjoint supports");

    const double lo = std::min(h0.support_lo(), ht.support_lo());
    const double hi = std::max(h0.support_hi(), ht.support_hi());
    const double norm = std::sqrt(spec.w1 * spec.w1 + spec.w2 * spec.w2);

    ConfDist c;
    c.density.grid = linspace(lo, hi, kGridPoints);
    c.cdf.resize(kGridPoints);
    for (int i = 0; i < kGridPoints; ++i) {
        double x = c.density.grid[i];
        double u0 = std::clamp(h0.cdf_at(x), kClip, 1.0 - kClip);
        double uT = std::clamp(ht.cdf_at(x), kClip, 1.0 - kClip);
        double z = (spec.w1 * normal_quantile(u0) + spec.w2 * normal_quantile(uT)) / norm;
        c.cdf[i] = normal_cdf(z);
    }
    for (int i = 1; i < kGridPoints; ++i) c.cdf[i] = std::max(c.cdf[i], c.cdf[i - 1]);

    // Density by differentiating the combined CDF.
    c.density.values.assign(kGridPoints, 0.0);
    const double h = (hi - lo) / (kGridPoints - 1);
    for (int i = 1; i + 1 < kGridPoints; ++i)
        c.density.values[i] = std::max(0.0, (c.cdf[i + 1] - c.cdf[i - 1]) / (2.0 * h));
    c.density.values[0] = std::max(0.0, (c.cdf[1] - c.cdf[0]) / h);
    c.density.values[kGridPoints - 1] =
        std::max(0.0, (c.cdf[kGridPoints - 1] - c.cdf[kGridPoints - 2]) / h);
    c.density.normalize();
    return c;
}

ConfDist combined_normal_closed_form(double mu_d, double sigma_d, const TrialData& d) {
    if (!(sigma_d > 0.0))
        throw UsageError("combined_normal_closed_form: sigma_d must be positive");
    WaldStats w = wald_stats(d);
    const double prec_trial = 1.0 / (w.sd * w.sd);
    const double prec_prior = 1.0 / (sigma_d * sigma_d);
    const double prec = prec_trial + prec_prior;
    const double center = (w.center * prec_trial + mu_d * prec_prior) / prec;
    return make_normal_cd(center, std::sqrt(1.0 / prec));
}

double cd_validate_uniformity(const std::function<double(Rng&)>& pit_draw, int reps,
                              Rng& rng) {
    if (reps < 10) throw UsageError("cd_validate_uniformity: need at least 10 replications");
    std::vector<double> u(reps);
    for (int i = 0; i < reps; ++i) {
        double v = pit_draw(rng);
        if (!std::isfinite(v))
            throw NumericError("cd_validate_uniformity: replication produced a non-finite "
                               "CD value");
        u[i] = std::clamp(v, 0.0, 1.0);
    }
    return ks_test_uniform(u).p_value;
}

} // namespace cdfuse
