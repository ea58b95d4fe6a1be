#include "cdfuse/elicit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"

namespace cdfuse {

std::vector<double> default_bin_edges() {
    std::vector<double> edges(13);
    for (int i = 0; i < 13; ++i) edges[i] = -0.24 + 0.04 * i;
    return edges;
}

void SurveyTable::validate() const {
    if (bin_edges.size() != kSurveyBins + 1)
        throw ValidationError("survey: expected 13 bin edges, got " +
                              std::to_string(bin_edges.size()));
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw ValidationError("survey: bin edges must be strictly increasing");
    if (experts.empty())
        throw ValidationError("survey: no expert rows");
    if (!ids.empty() && ids.size() != experts.size())
        throw ValidationError("survey: id column length does not match expert rows");
    for (std::size_t i = 0; i < experts.size(); ++i) {
        double sum = 0.0;
        for (double w : experts[i]) {
            if (w < 0.0) {
                std::ostringstream msg;
                msg << "survey: negative weight in expert row " << (i + 1);
                if (!ids.empty()) msg << " (" << ids[i] << ")";
                throw ValidationError(msg.str());
            }
            sum += w;
        }
        if (std::fabs(sum - 100.0) > 1e-9) {
            std::ostringstream msg;
            msg << "survey: expert row " << (i + 1);
            if (!ids.empty()) msg << " (" << ids[i] << ")";
            msg << " sums to " << sum << ", expected 100";
            throw ValidationError(msg.str());
        }
    }
}

PooledHistogram pool_survey(const SurveyTable& table, bool within_bin_spread) {
    table.validate();
    PooledHistogram h;
    h.bin_edges = table.bin_edges;
    const double n = static_cast<double>(table.experts.size());
    for (const auto& row : table.experts)
        for (int k = 0; k < kSurveyBins; ++k) h.weights[k] += row[k];
    for (int k = 0; k < kSurveyBins; ++k) h.weights[k] /= 100.0 * n;

    double mean = 0.0, m2 = 0.0, spread = 0.0;
    for (int k = 0; k < kSurveyBins; ++k) {
        double lo = h.bin_edges[k], hi = h.bin_edges[k + 1];
        double mid = 0.5 * (lo + hi), w = hi - lo;
        mean += h.weights[k] * mid;
        m2 += h.weights[k] * mid * mid;
        spread += h.weights[k] * w * w / 12.0;
    }
    double var = m2 - mean * mean;
    if (within_bin_spread) var += spread;
    if (!(var > 0.0))
        throw ValidationError("survey: pooled histogram has zero spread");
    h.mean = mean;
    h.sd = std::sqrt(var);
    return h;
}

double histogram_density(const PooledHistogram& h, double delta) {
    if (delta < h.bin_edges.front() || delta >= h.bin_edges.back()) return 0.0;
    auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), delta);
    std::size_t k = static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
    return h.weights[k] / (h.bin_edges[k + 1] - h.bin_edges[k]);
}

namespace {

// Shared feasibility screen for the independent-arm families, where
// var(p1) = sigma_d^2 - sigma_0^2.
struct ArmTargets {
    double mu0, v0, mu1, v1;
};

ArmTargets arm_targets(const MomentTargets& t) {
    const double mu1 = t.mu0 + t.mu_d;
    const double v0 = t.sigma0 * t.sigma0;
    const double v1 = t.sigma_d * t.sigma_d - v0;
    auto fail = [](const std::string& what) { throw FitError("moment targets: " + what); };
    if (!(t.mu0 > 0.0 && t.mu0 < 1.0)) fail("mu0 must lie in (0,1)");
    if (!(mu1 > 0.0 && mu1 < 1.0)) fail("mu0 + mu_d must lie in (0,1)");
    if (!(v0 > 0.0)) fail("sigma0 must be positive");
    if (!(v0 < t.mu0 * (1.0 - t.mu0))) fail("sigma0^2 must be below mu0(1-mu0)");
    if (!(v1 > 0.0)) fail("sigma_d must exceed sigma0");
    if (!(v1 < mu1 * (1.0 - mu1)))
        fail("sigma_d^2 - sigma0^2 must be below mu1(1-mu1)");
    return {t.mu0, v0, mu1, v1};
}

BetaParams beta_from_moments(double mu, double var) {
    double s = mu * (1.0 - mu) / var - 1.0;
    return {mu * s, (1.0 - mu) * s};
}

double hier_beta_e_sq(double alpha, double beta) {
    const double t = alpha + beta;
    const double u = expected_inv1p_gamma(t);
    const double e_xi = alpha / t;
    const double e_xi_sq = alpha * (alpha + 1.0) / (t * (t + 1.0));
    return e_xi_sq * (1.0 - u) + e_xi * u;
}

std::pair<double, double> fit_hier_arm(double mu, double var) {
    BetaParams start = beta_from_moments(mu, var);
    auto residuals = [&](const std::vector<double>& p) {
        return std::vector<double>{hier_beta_mean(p[0], p[1]) - mu,
                                   hier_beta_var(p[0], p[1]) - var};
    };
    // The hierarchy inflates the variance, so the matching shapes sit above
    // the plain-beta ones.
    auto sol = solve_moments(residuals, {1.5 * start.q, 1.5 * start.r});
    return {sol[0], sol[1]};
}

} // namespace

double hier_beta_mean(double alpha, double beta) { return alpha / (alpha + beta); }

double hier_beta_var(double alpha, double beta) {
    const double t = alpha + beta;
    const double u = expected_inv1p_gamma(t);
    const double mu = alpha / t;
    return mu * (1.0 - mu) * (t * u + 1.0) / (t + 1.0);
}

double hier_bibeta_e_p0p1(double alpha0, double alpha1, double beta) {
    // E(p0 p1) = a0 a1 int int (1+u)^-(a0+1) (1+v)^-(a1+1)
    //            (1 + ln(e^u + e^v - 1))^-b du dv,
    // mapped to the unit square by u = x/(1-x); the (1+u) factors then fold
    // into (1-x)^(a0-1).
    auto coupling = [&](double u, double v) {
        double m = std::max(u, v);
        double w = m + std::log(std::exp(u - m) + std::exp(v - m) - std::exp(-m));
        return std::exp(-beta * std::log1p(w));
    };
    auto inner = [&](double u) {
        return integrate_adaptive(
            [&](double y) {
                if (y >= 1.0) return 0.0;
                double v = y / (1.0 - y);
                return std::exp((alpha1 - 1.0) * std::log1p(-y)) * coupling(u, v);
            },
            0.0, 1.0, 3e-14, 60, 16);
    };
    double outer = integrate_adaptive(
        [&](double x) {
            if (x >= 1.0) return 0.0;
            double u = x / (1.0 - x);
            return std::exp((alpha0 - 1.0) * std::log1p(-x)) * inner(u);
        },
        0.0, 1.0, 3e-13, 60, 16);
    return alpha0 * alpha1 * outer;
}

double hier_bibeta_e_delta_sq(double alpha0, double alpha1, double beta) {
    return hier_beta_e_sq(alpha0, beta) + hier_beta_e_sq(alpha1, beta) -
           2.0 * hier_bibeta_e_p0p1(alpha0, alpha1, beta);
}

PriorSpec fit_indep_beta(const MomentTargets& t) {
    ArmTargets a = arm_targets(t);
    IndepBetaPrior prior{beta_from_moments(a.mu0, a.v0),
                         beta_from_moments(a.mu1, a.v1)};
    return {prior, t};
}

PriorSpec fit_hier_beta(const MomentTargets& t) {
    ArmTargets a = arm_targets(t);
    auto [a0, b0] = fit_hier_arm(a.mu0, a.v0);
    auto [a1, b1] = fit_hier_arm(a.mu1, a.v1);
    return {HierBetaPrior{a0, b0, a1, b1}, t};
}

PriorSpec fit_bibeta(const MomentTargets& t) {
    const double mu1 = t.mu0 + t.mu_d;
    if (!(t.mu0 > 0.0 && t.mu0 < 1.0 && mu1 > 0.0 && mu1 < 1.0))
        throw FitError("moment targets: arm means must lie in (0,1)");
    if (!(t.sigma_d > 0.0))
        throw FitError("moment targets: sigma_d must be positive");
    const double e_dsq = t.sigma_d * t.sigma_d + t.mu_d * t.mu_d;
    auto residuals = [&](const std::vector<double>& p) {
        BibetaParams prm{p[0], p[1], p[2]};
        double m0 = prm.q0 / (prm.q0 + prm.r);
        double m1 = prm.q1 / (prm.q1 + prm.r);
        return std::vector<double>{m0 - t.mu0, (m1 - m0) - t.mu_d,
                                   bibeta_e_delta_sq(prm) - e_dsq};
    };
    // Start with the arm means already matched at a moderate coupling shape.
    const double r0 = 2.0;
    auto sol = solve_moments(
        residuals, {t.mu0 * r0 / (1.0 - t.mu0), mu1 * r0 / (1.0 - mu1), r0});
    return {BibetaParams{sol[0], sol[1], sol[2]}, t};
}

PriorSpec fit_hier_bibeta(const MomentTargets& t) {
    const double mu1 = t.mu0 + t.mu_d;
    if (!(t.mu0 > 0.0 && t.mu0 < 1.0 && mu1 > 0.0 && mu1 < 1.0))
        throw FitError("moment targets: arm means must lie in (0,1)");
    if (!(t.sigma_d > 0.0))
        throw FitError("moment targets: sigma_d must be positive");
    const double var_d = t.sigma_d * t.sigma_d;
    auto residuals = [&](const std::vector<double>& p) {
        double m0 = hier_beta_mean(p[0], p[2]);
        double m1 = hier_beta_mean(p[1], p[2]);
        double mu_d = m1 - m0;
        double var = hier_bibeta_e_delta_sq(p[0], p[1], p[2]) - mu_d * mu_d;
        return std::vector<double>{m0 - t.mu0, mu_d - t.mu_d, var - var_d};
    };
    const double b0 = 4.0;
    auto sol = solve_moments(
        residuals, {t.mu0 * b0 / (1.0 - t.mu0), mu1 * b0 / (1.0 - mu1), b0});
    return {HierBibetaPrior{sol[0], sol[1], sol[2]}, t};
}

std::pair<double, double> fit_normal_prior(const PooledHistogram& h) {
    return {h.mean, h.sd};
}

double ShiftedLognormal::pdf(double delta) const {
    const double x = delta - shift;
    if (x <= 0.0) return 0.0;
    const double z = (std::log(x) - mu) / sigma;
    return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * M_PI));
}

ShiftedLognormal fit_lognormal_prior(const PooledHistogram& h, double shift) {
    const double m = h.mean - shift;
    if (!(m > 0.0))
        throw FitError("lognormal fit: shift must lie below the histogram mean");
    const double s2 = std::log1p(h.sd * h.sd / (m * m));
    return {std::log(m) - 0.5 * s2, std::sqrt(s2), shift};
}

namespace {

struct StateSampler {
    Rng& rng;
    std::vector<double> operator()(const IndepBetaPrior& p) const {
        return {rng.beta(p.arm0.q, p.arm0.r), rng.beta(p.arm1.q, p.arm1.r)};
    }
    std::vector<double> operator()(const HierBetaPrior& p) const {
        auto arm = [&](double a, double b, double& xi, double& eta) {
            xi = rng.beta(a, b);
            eta = rng.gamma(a + b);
            return rng.beta(xi * eta, (1.0 - xi) * eta);
        };
        double xi0, eta0, xi1, eta1;
        double p0 = arm(p.alpha0, p.beta0, xi0, eta0);
        double p1 = arm(p.alpha1, p.beta1, xi1, eta1);
        return {p0, p1, xi0, eta0, xi1, eta1};
    }
    std::vector<double> operator()(const BibetaParams& p) const {
        auto [p0, p1] = bibeta_sample(p, rng);
        return {p0, p1};
    }
    std::vector<double> operator()(const HierBibetaPrior& p) const {
        BibetaParams q{rng.gamma(p.alpha0), rng.gamma(p.alpha1), rng.gamma(p.beta)};
        auto [p0, p1] = bibeta_sample(q, rng);
        return {p0, p1, q.q0, q.q1, q.r};
    }
};

} // namespace

std::vector<double> sample_prior_state(const PriorSpec& prior, Rng& rng) {
    return std::visit(StateSampler{rng}, prior.family);
}

std::pair<double, double> sample_prior(const PriorSpec& prior, Rng& rng) {
    auto s = sample_prior_state(prior, rng);
    return {s[0], s[1]};
}

} // namespace cdfuse
