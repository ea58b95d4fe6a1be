#include "cdfuse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"

namespace cdfuse {

namespace {

// First grid point where the CDF reaches p, linearly interpolated within
// the crossing cell. Matches the quantile convention of ConfDist.
double quantile_from_cdf(const std::vector<double>& grid, const std::vector<double>& cdf,
                         double p) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("quantile level must be in (0,1)");
    auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
    if (it == cdf.end()) return grid.back();
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    if (i == 0) return grid.front();
    double c0 = cdf[i - 1], c1 = cdf[i];
    if (c1 <= c0) return grid[i];
    double f = (p - c0) / (c1 - c0);
    return grid[i - 1] + f * (grid[i] - grid[i - 1]);
}

double refine_mode(const std::vector<double>& grid, const std::vector<double>& values) {
    std::size_t k = static_cast<std::size_t>(
        std::max_element(values.begin(), values.end()) - values.begin());
    if (k == 0 || k + 1 == values.size()) return grid[k];
    double vl = values[k - 1], v0 = values[k], vr = values[k + 1];
    double denom = vl - 2.0 * v0 + vr;
    if (!(denom < 0.0)) return grid[k];
    double h = grid[k + 1] - grid[k];
    double off = 0.5 * h * (vl - vr) / denom;
    return grid[k] + std::clamp(off, -h, h);
}

double pick(const SummaryReport& r, Statistic s) {
    switch (s) {
        case Statistic::mode: return r.mode;
        case Statistic::median: return r.median;
        case Statistic::mean: return r.mean;
    }
    throw UsageError("unknown statistic");
}

bool outside(double post, double a, double b) {
    return post < std::min(a, b) || post > std::max(a, b);
}

DiscrepancyVerdict verdict_from_reports(const SummaryReport& pr, const SummaryReport& lk,
                                        const SummaryReport& po, Statistic stat) {
    DiscrepancyVerdict v;
    v.statistic = stat;
    v.prior_value = pick(pr, stat);
    v.likelihood_value = pick(lk, stat);
    v.posterior_value = pick(po, stat);
    v.discrepant = outside(v.posterior_value, v.prior_value, v.likelihood_value);
    v.any_statistic = false;
    for (Statistic s : {Statistic::mode, Statistic::median, Statistic::mean})
        if (outside(pick(po, s), pick(pr, s), pick(lk, s))) v.any_statistic = true;
    return v;
}

} // namespace

SummaryReport summarize(const GridDensity& g) {
    if (!g.normalized)
        throw UsageError("summarize requires a normalized density; call normalize() first");
    SummaryReport r;
    r.mode = refine_mode(g.grid, g.values);
    std::vector<double> cdf = g.cdf_values();
    r.median = quantile_from_cdf(g.grid, cdf, 0.5);
    r.i80 = {quantile_from_cdf(g.grid, cdf, 0.10), quantile_from_cdf(g.grid, cdf, 0.90)};
    r.i90 = {quantile_from_cdf(g.grid, cdf, 0.05), quantile_from_cdf(g.grid, cdf, 0.95)};
    r.i95 = {quantile_from_cdf(g.grid, cdf, 0.025), quantile_from_cdf(g.grid, cdf, 0.975)};
    std::vector<double> xf(g.grid.size());
    for (std::size_t i = 0; i < g.grid.size(); ++i) xf[i] = g.grid[i] * g.values[i];
    r.mean = trapz(g.grid, xf);
    return r;
}

SummaryReport summarize(const ConfDist& c) {
    SummaryReport r;
    if (const auto* nb = std::get_if<ConfDist::NormalBack>(&c.backing)) {
        r.mode = nb->mu;
    } else if (const auto* hb = std::get_if<ConfDist::HistBack>(&c.backing)) {
        // Convention for binned evidence: the mode is the midpoint of the
        // highest-density bin, not a point inside it.
        std::size_t best = 0;
        double best_density = -1.0;
        for (std::size_t k = 0; k + 1 < hb->edges.size(); ++k) {
            double w = hb->edges[k + 1] - hb->edges[k];
            double d = (hb->cum[k + 1] - hb->cum[k]) / w;
            if (d > best_density) {
                best_density = d;
                best = k;
            }
        }
        r.mode = 0.5 * (hb->edges[best] + hb->edges[best + 1]);
    } else {
        r.mode = refine_mode(c.density.grid, c.density.values);
    }
    r.median = c.quantile(0.5);
    r.mean = c.mean();
    r.i80 = {c.quantile(0.10), c.quantile(0.90)};
    r.i90 = {c.quantile(0.05), c.quantile(0.95)};
    r.i95 = {c.quantile(0.025), c.quantile(0.975)};
    return r;
}

DiscrepancyVerdict detect_discrepancy(const GridDensity& prior, const GridDensity& likelihood,
                                      const GridDensity& posterior, Statistic stat) {
    return verdict_from_reports(summarize(prior), summarize(likelihood), summarize(posterior),
                                stat);
}

namespace {

constexpr int kJointGrid = 512;
constexpr int kProjectionBins = 512;

// Cell-midpoint evaluations of a joint density on the unit square; equal
// cell areas, so the weights project by plain accumulation.
struct JointCache {
    std::vector<double> mid;    // kJointGrid midpoints
    std::vector<double> weight; // row-major kJointGrid^2 values
};

JointCache cache_joint(const std::function<double(double, double)>& f, const char* label) {
    JointCache c;
    c.mid.resize(kJointGrid);
    for (int i = 0; i < kJointGrid; ++i) c.mid[i] = (i + 0.5) / kJointGrid;
    c.weight.assign(static_cast<std::size_t>(kJointGrid) * kJointGrid, 0.0);
    parallel_for(kJointGrid, [&](int i) {
        for (int j = 0; j < kJointGrid; ++j) {
            double v = f(c.mid[i], c.mid[j]);
            if (!std::isfinite(v) || v < 0.0)
                throw NumericError(std::string(label) +
                                   " joint density is negative or not finite");
            c.weight[static_cast<std::size_t>(i) * kJointGrid + j] = v;
        }
    });
    return c;
}

GridDensity project_cache(const JointCache& c, double a, double b) {
    double tlo = std::min(a, 0.0) + std::min(b, 0.0);
    double thi = std::max(a, 0.0) + std::max(b, 0.0);
    double dt = (thi - tlo) / kProjectionBins;
    std::vector<double> mass(kProjectionBins, 0.0);
    for (int i = 0; i < kJointGrid; ++i) {
        double ti = a * c.mid[i];
        const double* row = &c.weight[static_cast<std::size_t>(i) * kJointGrid];
        for (int j = 0; j < kJointGrid; ++j) {
            double t = ti + b * c.mid[j];
            int m = static_cast<int>((t - tlo) / dt);
            m = std::clamp(m, 0, kProjectionBins - 1);
            mass[m] += row[j];
        }
    }
    GridDensity g;
    g.grid.resize(kProjectionBins);
    for (int m = 0; m < kProjectionBins; ++m) g.grid[m] = tlo + (m + 0.5) * dt;
    g.values = std::move(mass);
    g.normalize();
    return g;
}

} // namespace

namespace {

GridDensity mirror_projection(const GridDensity& g) {
    GridDensity m;
    m.grid.resize(g.grid.size());
    m.values.resize(g.values.size());
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        std::size_t j = g.grid.size() - 1 - i;
        m.grid[i] = -g.grid[j];
        m.values[i] = g.values[j];
    }
    m.normalized = g.normalized; // reflection preserves trapezoid mass
    return m;
}

} // namespace

std::vector<AngleVerdict> directional_scan(const std::function<double(double, double)>& prior,
                                           const std::function<double(double, double)>& likelihood,
                                           const std::function<double(double, double)>& posterior,
                                           int angles) {
    if (angles < 1) throw UsageError("directional_scan needs at least one angle");
    JointCache cp = cache_joint(prior, "prior");
    JointCache cl = cache_joint(likelihood, "likelihood");
    JointCache cq = cache_joint(posterior, "posterior");

    // Opposite directions see the same anti-diagonal bins reflected, so for
    // an even angle count the second half-circle reuses the first half's
    // projections mirrored. That makes the reflection invariance of the
    // verdicts exact instead of subject to bin-edge rounding.
    const int base = (angles % 2 == 0) ? angles / 2 : angles;
    std::vector<std::array<GridDensity, 3>> proj(static_cast<std::size_t>(base));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    parallel_for(base, [&](int k) {
        double phi = kTwoPi * k / angles;
        double a = std::cos(phi), b = std::sin(phi);
        proj[static_cast<std::size_t>(k)] = {project_cache(cp, a, b), project_cache(cl, a, b),
                                             project_cache(cq, a, b)};
    });

    std::vector<AngleVerdict> out(static_cast<std::size_t>(angles));
    parallel_for(angles, [&](int k) {
        double phi = kTwoPi * k / angles;
        double a = std::cos(phi), b = std::sin(phi);
        const auto& src = proj[static_cast<std::size_t>(k % base)];
        DiscrepancyVerdict v;
        if (k < base) {
            v = detect_discrepancy(src[0], src[1], src[2], Statistic::mode);
        } else {
            v = detect_discrepancy(mirror_projection(src[0]), mirror_projection(src[1]),
                                   mirror_projection(src[2]), Statistic::mode);
        }
        v.direction = std::make_pair(a, b);
        out[static_cast<std::size_t>(k)] = AngleVerdict{phi, v};
    });
    return out;
}

GridDensity project_joint_to_delta(const std::function<double(double, double)>& joint,
                                   int resolution) {
    if (resolution < 3) throw UsageError("projection resolution must be at least 3");
    std::vector<double> grid = linspace(-1.0, 1.0, resolution);
    std::vector<double> values(grid.size(), 0.0);
    parallel_for(resolution, [&](int i) {
        double d = grid[static_cast<std::size_t>(i)];
        double lo = std::max(0.0, -d);
        double hi = std::min(1.0, 1.0 - d);
        if (hi <= lo) return;
        auto integrand = [&](double p0) {
            double v = joint(p0, p0 + d);
            return std::isfinite(v) ? v : 0.0;
        };
        values[static_cast<std::size_t>(i)] = integrate_gl(integrand, lo, hi, 32);
    });
    GridDensity g;
    g.grid = std::move(grid);
    g.values = std::move(values);
    g.normalize();
    return g;
}

namespace {

using Point = std::pair<double, double>;

struct PointKey {
    std::int64_t x, y;
    bool operator==(const PointKey&) const = default;
};

struct PointKeyHash {
    std::size_t operator()(const PointKey& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<std::uint64_t>(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

PointKey quantize(const Point& p) {
    return PointKey{static_cast<std::int64_t>(std::llround(p.first * 1e10)),
                    static_cast<std::int64_t>(std::llround(p.second * 1e10))};
}

Point edge_cross(double xa, double ya, double va, double xb, double yb, double vb,
                 double level) {
    double s = (vb == va) ? 0.5 : (level - va) / (vb - va);
    s = std::clamp(s, 0.0, 1.0);
    return {xa + s * (xb - xa), ya + s * (yb - ya)};
}

// Chains an unordered bag of segments into polylines by matching shared
// endpoints. Loops come back closed with first point == last point.
std::vector<ContourLine> chain_segments(std::vector<std::array<Point, 2>>& segs, double level) {
    std::unordered_map<PointKey, std::vector<std::size_t>, PointKeyHash> touch;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        touch[quantize(segs[s][0])].push_back(s);
        touch[quantize(segs[s][1])].push_back(s);
    }
    std::vector<bool> used(segs.size(), false);
    std::vector<ContourLine> lines;
    auto next_unused = [&](const Point& at, std::size_t skip) -> std::ptrdiff_t {
        auto it = touch.find(quantize(at));
        if (it == touch.end()) return -1;
        for (std::size_t s : it->second)
            if (!used[s] && s != skip) return static_cast<std::ptrdiff_t>(s);
        return -1;
    };
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = true;
        std::deque<Point> chain{segs[s0][0], segs[s0][1]};
        for (int dir = 0; dir < 2; ++dir) {
            while (true) {
                Point tip = dir == 0 ? chain.back() : chain.front();
                std::ptrdiff_t nxt = next_unused(tip, segs.size());
                if (nxt < 0) break;
                std::size_t s = static_cast<std::size_t>(nxt);
                used[s] = true;
                PointKey tk = quantize(tip);
                Point other = quantize(segs[s][0]) == tk ? segs[s][1] : segs[s][0];
                if (dir == 0)
                    chain.push_back(other);
                else
                    chain.push_front(other);
                if (quantize(chain.front()) == quantize(chain.back())) break;
            }
        }
        ContourLine line;
        line.level = level;
        line.points.assign(chain.begin(), chain.end());
        line.closed = line.points.size() > 2 &&
                      quantize(line.points.front()) == quantize(line.points.back());
        lines.push_back(std::move(line));
    }
    return lines;
}

} // namespace

std::vector<ContourLine> contour_export(const std::function<double(double, double)>& joint,
                                        const std::vector<double>& levels,
                                        int resolution) {
    if (resolution < 2) throw UsageError("contour resolution must be at least 2");
    const int n = resolution;
    std::vector<double> coord = linspace(0.0, 1.0, n);
    std::vector<double> v(static_cast<std::size_t>(n) * n);
    parallel_for(n, [&](int i) {
        for (int j = 0; j < n; ++j) {
            double val = joint(coord[static_cast<std::size_t>(i)],
                               coord[static_cast<std::size_t>(j)]);
            if (!std::isfinite(val))
                throw NumericError("contour joint density is not finite");
            v[static_cast<std::size_t>(i) * n + j] = val;
        }
    });
    auto at = [&](int i, int j) { return v[static_cast<std::size_t>(i) * n + j]; };

    std::vector<ContourLine> out;
    for (double level : levels) {
        std::vector<std::array<Point, 2>> segs;
        for (int i = 0; i + 1 < n; ++i) {
            for (int j = 0; j + 1 < n; ++j) {
                double bl = at(i, j), br = at(i + 1, j);
                double tr = at(i + 1, j + 1), tl = at(i, j + 1);
                int idx = (bl > level ? 1 : 0) | (br > level ? 2 : 0) |
                          (tr > level ? 4 : 0) | (tl > level ? 8 : 0);
                if (idx == 0 || idx == 15) continue;
                double x0 = coord[static_cast<std::size_t>(i)];
                double x1 = coord[static_cast<std::size_t>(i) + 1];
                double y0 = coord[static_cast<std::size_t>(j)];
                double y1 = coord[static_cast<std::size_t>(j) + 1];
                Point e0 = edge_cross(x0, y0, bl, x1, y0, br, level); // bottom
                Point e1 = edge_cross(x1, y0, br, x1, y1, tr, level); // right
                Point e2 = edge_cross(x0, y1, tl, x1, y1, tr, level); // top
                Point e3 = edge_cross(x0, y0, bl, x0, y1, tl, level); // left
                auto add = [&](const Point& pa, const Point& pb) {
                    segs.push_back({pa, pb});
                };
                switch (idx) {
                    case 1: case 14: add(e3, e0); break;
                    case 2: case 13: add(e0, e1); break;
                    case 3: case 12: add(e3, e1); break;
                    case 4: case 11: add(e1, e2); break;
                    case 6: case 9:  add(e0, e2); break;
                    case 7: case 8:  add(e3, e2); break;
                    case 5:
                        if (0.25 * (bl + br + tr + tl) > level) {
                            add(e0, e1);
                            add(e2, e3);
                        } else {
                            add(e3, e0);
                            add(e1, e2);
                        }
                        break;
                    case 10:
                        if (0.25 * (bl + br + tr + tl) > level) {
                            add(e0, e3);
                            add(e1, e2);
                        } else {
                            add(e0, e1);
                            add(e2, e3);
                        }
                        break;
                    default: break;
                }
            }
        }
        // An empty level set is legal output; callers decide whether to warn.
        std::vector<ContourLine> chained = chain_segments(segs, level);
        out.insert(out.end(), std::make_move_iterator(chained.begin()),
                   std::make_move_iterator(chained.end()));
    }
    return out;
}

} // namespace cdfuse
