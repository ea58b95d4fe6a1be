#include "cdfuse/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"
#include "cdfuse/rng.hpp"
#include "cdfuse/specfun.hpp"
#include "cdfuse/stats.hpp"

namespace cdfuse {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool open01(double x) { return x > 0.0 && x < 1.0; }

} // namespace

void TrialData::validate() const {
    auto arm = [](int n, int s, const char* name) {
        if (n < 1) {
            std::ostringstream os;
            os << "trial arm " << name << ": sample size must be >= 1, got " << n;
            throw ValidationError(os.str());
        }
        if (s < 0 || s > n) {
            std::ostringstream os;
            os << "trial arm " << name << ": successes " << s << " outside [0, " << n << "]";
            throw ValidationError(os.str());
        }
    };
    arm(n0, s0, "0");
    arm(n1, s1, "1");
}

double loglik(double p0, double p1, const TrialData& d) {
    if (p0 < 0.0 || p0 > 1.0 || p1 < 0.0 || p1 > 1.0)
        throw std::domain_error("loglik: probabilities must lie in [0,1]");
    auto arm = [](double p, int n, int s) {
        double lp = 0.0;
        if (s > 0) {
            if (p == 0.0) return kNegInf;
            lp += s * std::log(p);
        }
        if (n - s > 0) {
            if (p == 1.0) return kNegInf;
            lp += (n - s) * std::log1p(-p);
        }
        return lp;
    };
    return arm(p0, d.n0, d.s0) + arm(p1, d.n1, d.s1);
}

double profile_loglik(double delta, const TrialData& d) {
    if (!(delta > -1.0 && delta < 1.0))
        throw std::domain_error("profile_loglik: delta outside (-1,1) leaves no feasible p0");
    const double lo = std::max(0.0, -delta);
    const double hi = std::min(1.0, 1.0 - delta);
    // The log-likelihood is strictly concave along the line p1 = p0 + delta,
    // so its derivative in p0 is strictly decreasing and bisection on the
    // score pins the unique interior maximizer.
    auto score = [&](double p0) {
        double p1 = p0 + delta;
        return d.s0 / p0 - (d.n0 - d.s0) / (1.0 - p0) + d.s1 / p1 -
               (d.n1 - d.s1) / (1.0 - p1);
    };
    const double pad = 1e-12 * (hi - lo) + 1e-300;
    double a = lo + pad, b = hi - pad;
    double sa = score(a);
    if (sa <= 0.0) return loglik(a, a + delta, d); // maximum pinned at the lower edge
    double sb = score(b);
    if (sb >= 0.0) return loglik(b, b + delta, d); // maximum pinned at the upper edge
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (a + b);
        double sm = score(m);
        if (std::fabs(sm) < 1e-10 || (b - a) < 1e-16) return loglik(m, m + delta, d);
        if (sm > 0.0)
            a = m;
        else
            b = m;
    }
    return loglik(0.5 * (a + b), 0.5 * (a + b) + delta, d);
}

IndepBetaPrior exact_indep_beta_posterior(const PriorSpec& prior, const TrialData& d) {
    const auto* f = std::get_if<IndepBetaPrior>(&prior.family);
    if (!f)
        throw UsageError("exact_indep_beta_posterior: closed-form update exists only for the "
                         "independent-beta family");
    d.validate();
    IndepBetaPrior post = *f;
    post.arm0.q += d.s0;
    post.arm0.r += d.n0 - d.s0;
    post.arm1.q += d.s1;
    post.arm1.r += d.n1 - d.s1;
    return post;
}

namespace {

// One MH target: the state dimension, which coordinates live in (0,1)
// (logit transform) versus (0,inf) (log transform), and the prior log
// density including any latent layers. log_prior returns -inf outside the
// domain rather than throwing, so rejected proposals stay cheap.
struct Target {
    int dim = 2;
    std::vector<bool> logit;
    std::function<double(const std::vector<double>&)> log_prior;
};

Target make_target(const PriorSpec& prior) {
    Target t;
    if (const auto* f = std::get_if<IndepBetaPrior>(&prior.family)) {
        IndepBetaPrior p = *f;
        t.dim = 2;
        t.logit = {true, true};
        t.log_prior = [p](const std::vector<double>& s) {
            if (!open01(s[0]) || !open01(s[1])) return kNegInf;
            return beta_logpdf(s[0], p.arm0.q, p.arm0.r) + beta_logpdf(s[1], p.arm1.q, p.arm1.r);
        };
    } else if (const auto* f = std::get_if<HierBetaPrior>(&prior.family)) {
        HierBetaPrior p = *f;
        t.dim = 6;
        t.logit = {true, true, true, false, true, false};
        t.log_prior = [p](const std::vector<double>& s) {
            double lp = 0.0;
            const double alpha[2] = {p.alpha0, p.alpha1};
            const double beta[2] = {p.beta0, p.beta1};
            for (int i = 0; i < 2; ++i) {
                double pi = s[i], xi = s[2 + 2 * i], eta = s[3 + 2 * i];
                if (!open01(pi) || !open01(xi) || !(eta > 0.0)) return kNegInf;
                double a = xi * eta, b = (1.0 - xi) * eta;
                if (!(a > 0.0) || !(b > 0.0)) return kNegInf; // underflow guard
                lp += beta_logpdf(pi, a, b) + beta_logpdf(xi, alpha[i], beta[i]) +
                      gamma_logpdf(eta, alpha[i] + beta[i]);
            }
            return lp;
        };
    } else if (const auto* f = std::get_if<BibetaParams>(&prior.family)) {
        BibetaParams p = *f;
        t.dim = 2;
        t.logit = {true, true};
        t.log_prior = [p](const std::vector<double>& s) {
            if (!open01(s[0]) || !open01(s[1])) return kNegInf;
            return bibeta_logpdf(s[0], s[1], p);
        };
    } else {
        HierBibetaPrior p = std::get<HierBibetaPrior>(prior.family);
        t.dim = 5;
        t.logit = {true, true, false, false, false};
        t.log_prior = [p](const std::vector<double>& s) {
            if (!open01(s[0]) || !open01(s[1])) return kNegInf;
            BibetaParams cond{s[2], s[3], s[4]};
            if (!(cond.q0 > 0.0) || !(cond.q1 > 0.0) || !(cond.r > 0.0)) return kNegInf;
            // The conditional density must carry its own normalizer: the
            // shape parameters are part of the state, so the constant
            // varies along the chain.
            return bibeta_logpdf(s[0], s[1], cond) + bibeta_log_norm(cond) +
                   gamma_logpdf(cond.q0, p.alpha0) + gamma_logpdf(cond.q1, p.alpha1) +
                   gamma_logpdf(cond.r, p.beta);
        };
    }
    return t;
}

// Single random-walk chain. Adaptive mode walks in transformed coordinates
// (logit for (0,1) coordinates, log for positive ones) with a Gaussian
// step whose scale is tuned toward 0.234 acceptance and frozen at 60% of
// burn-in; paper mode adds a fixed-width uniform perturbation to the raw
// state and rejects out-of-domain proposals through the -inf target.
class Walker {
public:
    Walker(const Target& target, const std::optional<TrialData>& data, const McmcConfig& cfg,
           Rng rng, std::vector<double> start)
        : t_(target), data_(data), cfg_(cfg), rng_(rng), state_(std::move(start)) {
        blocks_ = (cfg_.blockwise && t_.dim > 2) ? 2 : 1;
        scales_.assign(blocks_, cfg_.proposal_scale);
        window_accepts_.assign(blocks_, 0);
        window_steps_.assign(blocks_, 0);
        adapt_rounds_.assign(blocks_, 0);
        freeze_at_ = (cfg_.mode == McmcConfig::Mode::adaptive)
                         ? static_cast<long>(0.6 * cfg_.burn_in)
                         : 0;
        if (cfg_.mode == McmcConfig::Mode::adaptive) {
            z_ = to_z(state_);
            cur_ = log_target_z(z_);
        } else {
            cur_ = log_target(state_);
        }
    }

    void step(long iter) {
        for (int b = 0; b < blocks_; ++b) {
            int begin = (blocks_ == 2 && b == 1) ? 2 : 0;
            int end = (blocks_ == 2 && b == 0) ? 2 : t_.dim;
            if (cfg_.mode == McmcConfig::Mode::adaptive)
                step_adaptive(iter, b, begin, end);
            else
                step_paper(b, begin, end);
        }
    }

    std::pair<double, double> draw() const { return {state_[0], state_[1]}; }
    std::int64_t accepts = 0;
    std::int64_t proposals = 0;

private:
    std::vector<double> to_z(const std::vector<double>& s) const {
        std::vector<double> z(s.size());
        for (int j = 0; j < t_.dim; ++j)
            z[j] = t_.logit[j] ? std::log(s[j] / (1.0 - s[j])) : std::log(s[j]);
        return z;
    }

    // Inverse transform plus the log Jacobian of state(z), accumulated so
    // the transformed walk targets the same distribution.
    bool from_z(const std::vector<double>& z, std::vector<double>& s, double& logjac) const {
        logjac = 0.0;
        for (int j = 0; j < t_.dim; ++j) {
            if (t_.logit[j]) {
                double p = 1.0 / (1.0 + std::exp(-z[j]));
                if (!open01(p)) return false; // saturated at an endpoint
                s[j] = p;
                logjac += std::log(p) + std::log1p(-p);
            } else {
                double x = std::exp(z[j]);
                if (!(x > 0.0) || !std::isfinite(x)) return false;
                s[j] = x;
                logjac += z[j];
            }
        }
        return true;
    }

    double log_target(const std::vector<double>& s) const {
        double lt = t_.log_prior(s);
        if (lt == kNegInf || std::isnan(lt)) return kNegInf;
        if (data_) lt += loglik(s[0], s[1], *data_);
        return lt;
    }

    double log_target_z(const std::vector<double>& z) {
        if (scratch_state_.size() != z.size()) scratch_state_.resize(z.size());
        double logjac = 0.0;
        if (!from_z(z, scratch_state_, logjac)) return kNegInf;
        double lt = log_target(scratch_state_);
        return lt == kNegInf ? kNegInf : lt + logjac;
    }

    void step_adaptive(long iter, int b, int begin, int end) {
        std::vector<double> zp = z_;
        for (int j = begin; j < end; ++j) zp[j] += scales_[b] * rng_.normal();
        double prop = log_target_z(zp);
        bool acc = false;
        if (prop > kNegInf) {
            double lr = prop - cur_;
            acc = lr >= 0.0 || std::log(rng_.uniform()) < lr;
        }
        ++proposals;
        ++window_steps_[b];
        if (acc) {
            z_ = zp;
            state_ = scratch_state_;
            cur_ = prop;
            ++accepts;
            ++window_accepts_[b];
        }
        if (iter < freeze_at_ && window_steps_[b] >= 50) {
            double rate = static_cast<double>(window_accepts_[b]) / window_steps_[b];
            double gain = std::max(0.05, 1.0 / std::sqrt(1.0 + adapt_rounds_[b]));
            scales_[b] = std::clamp(scales_[b] * std::exp(gain * (rate - 0.234)), 1e-4, 50.0);
            window_accepts_[b] = 0;
            window_steps_[b] = 0;
            ++adapt_rounds_[b];
        }
    }

    void step_paper(int b, int begin, int end) {
        std::vector<double> sp = state_;
        double w = scales_[b];
        for (int j = begin; j < end; ++j) sp[j] += rng_.uniform(-0.5 * w, 0.5 * w);
        double prop = log_target(sp);
        bool acc = false;
        if (prop > kNegInf) {
            double lr = prop - cur_;
            acc = lr >= 0.0 || std::log(rng_.uniform()) < lr;
        }
        ++proposals;
        if (acc) {
            state_ = sp;
            cur_ = prop;
            ++accepts;
        }
    }

    const Target& t_;
    const std::optional<TrialData>& data_;
    const McmcConfig& cfg_;
    Rng rng_;
    std::vector<double> state_;
    std::vector<double> z_;
    std::vector<double> scratch_state_;
    double cur_ = kNegInf;
    int blocks_ = 1;
    long freeze_at_ = 0;
    std::vector<double> scales_;
    std::vector<int> window_accepts_;
    std::vector<int> window_steps_;
    std::vector<int> adapt_rounds_;
};

} // namespace

PosteriorSamples mh_sample(const PriorSpec& prior, const std::optional<TrialData>& data,
                           const McmcConfig& cfg) {
    if (data) data->validate();
    if (cfg.burn_in < 1 || cfg.chains < 1)
        throw UsageError("mh_sample: burn_in and chains must be >= 1");
    if (!(cfg.proposal_scale > 0.0))
        throw UsageError("mh_sample: proposal_scale must be positive");
    if (cfg.thin < 0) throw UsageError("mh_sample: thin must be >= 0");

    const Target target = make_target(prior);

    PosteriorSamples out;
    out.burn_in = cfg.burn_in;
    out.chains = cfg.thin > 0 ? 1 : cfg.chains;
    out.seed = cfg.seed;
    out.draws.resize(cfg.chains);

    if (cfg.thin > 0) {
        // Single long chain, one draw every `thin` sweeps after burn-in.
        Rng rng = Rng::derive(cfg.seed, 0);
        std::vector<double> start = sample_prior_state(prior, rng);
        Walker w(target, data, cfg, rng, std::move(start));
        long iter = 0;
        for (; iter < cfg.burn_in; ++iter) w.step(iter);
        for (int k = 0; k < cfg.chains; ++k) {
            for (int j = 0; j < cfg.thin; ++j, ++iter) w.step(iter);
            out.draws[k] = w.draw();
        }
        if (w.accepts == 0)
            throw SamplerError("mh_sample: chain accepted no proposals; rescale proposal_scale");
        out.acceptance_rate = static_cast<double>(w.accepts) / w.proposals;
        return out;
    }

    std::vector<std::int64_t> accepts(cfg.chains), proposals(cfg.chains);
    parallel_for(cfg.chains, [&](int c) {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(c));
        std::vector<double> start = sample_prior_state(prior, rng);
        Walker w(target, data, cfg, rng, std::move(start));
        for (long iter = 0; iter < cfg.burn_in; ++iter) w.step(iter);
        out.draws[c] = w.draw();
        accepts[c] = w.accepts;
        proposals[c] = w.proposals;
    });

    std::int64_t acc = 0, tot = 0;
    for (int c = 0; c < cfg.chains; ++c) {
        if (accepts[c] == 0) {
            std::ostringstream os;
            os << "mh_sample: chain " << c
               << " accepted no proposals over burn-in; rescale proposal_scale";
            throw SamplerError(os.str());
        }
        acc += accepts[c];
        tot += proposals[c];
    }
    out.acceptance_rate = static_cast<double>(acc) / tot;
    return out;
}

GridDensity marginalize_delta(const std::function<double(double, double)>& joint,
                              int resolution) {
    if (resolution < 3) throw UsageError("marginalize_delta: resolution must be >= 3");
    GridDensity out;
    out.grid = linspace(-1.0, 1.0, resolution);
    out.values.assign(resolution, 0.0);
    parallel_for(resolution, [&](int i) {
        const double delta = out.grid[i];
        const double lo = std::max(0.0, -delta);
        const double hi = std::min(1.0, 1.0 - delta);
        if (!(hi > lo)) return;
        out.values[i] = integrate_adaptive(
            [&](double p0) {
                const double p1 = p0 + delta;
                if (p0 <= 0.0 || p0 >= 1.0 || p1 <= 0.0 || p1 >= 1.0) return 0.0;
                double f = joint(p0, p1);
                return std::isfinite(f) ? f : 0.0;
            },
            lo, hi, 1e-9, 60, 32);
    });
    out.normalize();
    return out;
}

GridDensity kde_from_samples(const std::vector<double>& xs, double lo, double hi, int grid_n,
                             double bandwidth) {
    if (xs.size() < 2) throw NumericError("kde_from_samples: need at least two samples");
    if (!(hi > lo) || grid_n < 3)
        throw UsageError("kde_from_samples: grid must have hi > lo and at least 3 points");
    double h = bandwidth;
    if (!(h > 0.0)) {
        double sd = sample_sd(xs);
        double q1 = sample_quantile(xs, 0.25);
        double q3 = sample_quantile(xs, 0.75);
        double spread = std::min(sd, (q3 - q1) / 1.34);
        if (!(spread > 0.0))
            throw NumericError("kde_from_samples: degenerate sample (zero spread)");
        h = 0.9 * spread * std::pow(static_cast<double>(xs.size()), -0.2);
    }
    GridDensity out;
    out.grid = linspace(lo, hi, grid_n);
    out.values.assign(grid_n, 0.0);
    const double norm = 1.0 / (xs.size() * h * std::sqrt(2.0 * M_PI));
    parallel_for(grid_n, [&](int i) {
        double acc = 0.0;
        for (double x : xs) {
            double z = (out.grid[i] - x) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.values[i] = acc * norm;
    });
    out.normalize(); // mass clipped outside [lo,hi] is reassigned to the grid
    return out;
}

GridDensity kde_from_samples(const PosteriorSamples& samples,
                             const std::function<double(double, double)>& transform, double lo,
                             double hi, int grid_n, double bandwidth) {
    std::vector<double> xs;
    xs.reserve(samples.draws.size());
    for (const auto& [p0, p1] : samples.draws) xs.push_back(transform(p0, p1));
    return kde_from_samples(xs, lo, hi, grid_n, bandwidth);
}

} // namespace cdfuse
