#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "cdfuse/bayes.hpp"
#include "cdfuse/cd.hpp"
#include "cdfuse/elicit.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"
#include "cdfuse/rng.hpp"
#include "cdfuse/specfun.hpp"
#include "doctest.h"

using namespace cdfuse;

namespace {

TrialData case_study() { return {68, 31, 59, 33}; }

// The migraine PR2 survey: 11 experts, 12 bins.
SurveyTable reference_survey() {
    SurveyTable t;
    t.bin_edges = default_bin_edges();
    t.experts = {
        {0, 0, 5, 5, 10, 30, 30, 15, 5, 0, 0, 0},
        {0, 0, 0, 3, 7, 20, 25, 20, 15, 7, 3, 0},
        {0, 0, 0, 0, 10, 15, 20, 20, 20, 10, 5, 0},
        {0, 0, 2, 3, 5, 5, 50, 20, 10, 5, 0, 0},
        {0, 0, 0, 5, 10, 15, 15, 30, 20, 5, 0, 0},
        {0, 0, 0, 0, 0, 10, 20, 30, 30, 10, 0, 0},
        {0, 0, 0, 0, 5, 20, 50, 20, 5, 0, 0, 0},
        {0, 0, 0, 0, 0, 5, 50, 40, 5, 0, 0, 0},
        {0, 0, 0, 0, 5, 5, 20, 30, 20, 10, 10, 0},
        {0, 0, 0, 0, 5, 15, 15, 20, 15, 15, 10, 5},
        {0, 0, 0, 0, 0, 5, 10, 30, 25, 15, 10, 5},
    };
    return t;
}

PooledHistogram reference_hist() { return pool_survey(reference_survey()); }

// Structural contract every confidence distribution must satisfy.
void check_confdist(const ConfDist& c) {
    REQUIRE(c.density.grid.size() == c.cdf.size());
    REQUIRE(c.density.normalized);
    CHECK(trapz(c.density.grid, c.density.values) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(c.cdf.front() < 1e-12);
    CHECK(c.cdf.back() > 1.0 - 1e-12);
    double peak = 0.0;
    for (std::size_t i = 0; i < c.cdf.size(); ++i) {
        CHECK(c.density.values[i] >= 0.0);
        if (i > 0) CHECK(c.cdf[i] >= c.cdf[i - 1] - 1e-12);
        peak = std::max(peak, c.density.values[i]);
    }
    // The CDF's central difference reproduces the density.
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < c.cdf.size(); ++i) {
        double h2 = c.density.grid[i + 1] - c.density.grid[i - 1];
        worst = std::max(worst,
                         std::fabs((c.cdf[i + 1] - c.cdf[i - 1]) / h2 - c.density.values[i]));
    }
    CHECK(worst < 5e-3 * peak);
}

} // namespace

TEST_CASE("histogram prior confidence distribution") {
    ConfDist c = prior_cd_from_histogram(reference_hist());
    check_confdist(c);
    CHECK(c.support_lo() == doctest::Approx(-0.24));
    CHECK(c.support_hi() == doctest::Approx(0.24));
    CHECK(c.cdf_at(-0.24) == 0.0);
    CHECK(c.cdf_at(0.24) == 1.0);
    CHECK(c.cdf_at(-0.5) == 0.0);
    CHECK(c.cdf_at(0.5) == 1.0);

    // Within-bin uniform density.
    CHECK(c.pdf_at(0.02) == doctest::Approx(305.0 / 44.0).epsilon(1e-9));
    CHECK(c.pdf_at(-0.30) == 0.0);

    // Piecewise-linear CDF quantiles.
    CHECK(c.median() == doctest::Approx(0.042909).epsilon(1e-4));
    CHECK(c.quantile(0.025) == doctest::Approx(-0.076842).epsilon(1e-4));
    CHECK(c.quantile(0.05) == doctest::Approx(-0.057544).epsilon(1e-4));
    CHECK(c.quantile(0.10) == doctest::Approx(-0.031724).epsilon(1e-4));
    CHECK(c.quantile(0.90) == doctest::Approx(0.127792).epsilon(1e-4));
    CHECK(c.quantile(0.95) == doctest::Approx(0.156364).epsilon(1e-4));
    CHECK(c.quantile(0.975) == doctest::Approx(0.181579).epsilon(1e-4));

    // Quantile inverts the CDF inside bins that carry weight.
    for (double x : {-0.06, 0.02, 0.10, 0.18})
        CHECK(c.quantile(c.cdf_at(x)) == doctest::Approx(x).epsilon(1e-10));

    CHECK(c.mean() == doctest::Approx(reference_hist().mean).epsilon(1e-9));
    CHECK(c.sd() == doctest::Approx(reference_hist().sd).epsilon(1e-6));
}

TEST_CASE("normal prior confidence distribution") {
    const double mu = 0.0459273, sd = 0.0634122;
    ConfDist c = prior_cd_normal(mu, sd);
    check_confdist(c);
    CHECK(c.median() == doctest::Approx(mu).epsilon(1e-12));
    CHECK(c.mean() == doctest::Approx(mu));
    CHECK(c.sd() == doctest::Approx(sd));
    CHECK(c.quantile(0.975) - mu == doctest::Approx(1.959964 * sd).epsilon(1e-5));
    CHECK(c.quantile(0.025) - mu == doctest::Approx(-1.959964 * sd).epsilon(1e-5));
    CHECK(c.cdf_at(mu + sd) == doctest::Approx(normal_cdf(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(prior_cd_normal(0.0, 0.0), UsageError);
}

TEST_CASE("Wald trial confidence distribution") {
    ConfDist c = trial_cd_wald(case_study());
    check_confdist(c);
    const double center = 33.0 / 59.0 - 31.0 / 68.0;
    CHECK(c.median() == doctest::Approx(center).epsilon(1e-12));
    CHECK(c.median() == doctest::Approx(0.103440).epsilon(1e-5));
    CHECK(c.sd() == doctest::Approx(0.088462).epsilon(1e-5));

    TrialData degenerate{5, 0, 5, 3};
    CHECK_THROWS_WITH_AS(trial_cd_wald(degenerate), doctest::Contains("profile"),
                         UsageError);
    TrialData all_success{10, 10, 10, 8};
    CHECK_THROWS_AS(trial_cd_wald(all_success), UsageError);
}

TEST_CASE("profile-likelihood trial confidence distribution") {
    ConfDist c = trial_cd_profile(case_study());
    check_confdist(c);

    // Mode sits at the MLE difference (up to half a grid step).
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < c.density.values.size(); ++i)
        if (c.density.values[i] > c.density.values[argmax]) argmax = i;
    CHECK(std::fabs(c.density.grid[argmax] - 0.103440) < 5.1e-4);

    CHECK(c.median() == doctest::Approx(0.102333).epsilon(1e-3));
    CHECK(std::fabs(c.median() - 0.102333) < 1e-4);
    CHECK(std::fabs(c.mean() - 0.101791) < 1e-4);
    CHECK(std::fabs(c.quantile(0.025) - (-0.070819)) < 1e-4);
    CHECK(std::fabs(c.quantile(0.975) - 0.271329) < 1e-4);

    // Swapping the arms reflects the density about zero.
    TrialData swapped{59, 33, 68, 31};
    ConfDist r = trial_cd_profile(swapped, 801);
    ConfDist o = trial_cd_profile(case_study(), 801);
    for (std::size_t i = 0; i < r.density.values.size(); ++i)
        CHECK(r.density.values[r.density.values.size() - 1 - i] ==
              doctest::Approx(o.density.values[i]).epsilon(1e-9));

    // Large samples close the gap to the Wald CD.
    TrialData big{6800, 3100, 5900, 3300};
    ConfDist prof = trial_cd_profile(big);
    ConfDist wald = trial_cd_wald(big);
    double sup = 0.0;
    for (double x = 0.05; x <= 0.16; x += 0.001)
        sup = std::max(sup, std::fabs(prof.cdf_at(x) - wald.cdf_at(x)));
    CHECK(sup < 0.01);
}

TEST_CASE("combining two identical normal CDs halves the variance") {
    ConfDist a = prior_cd_normal(0.05, 0.08);
    ConfDist comb = combine_cds(a, a, {3.0, 3.0});
    check_confdist(comb);
    const double target_sd = 0.08 / std::sqrt(2.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < comb.cdf.size(); ++i) {
        double expect = normal_cdf((comb.density.grid[i] - 0.05) / target_sd);
        sup = std::max(sup, std::fabs(comb.cdf[i] - expect));
    }
    CHECK(sup < 1e-10);
}

TEST_CASE("grid combination matches the closed-form normal answer") {
    const double mu = 0.0459273, sd = 0.0634122;
    ConfDist prior = prior_cd_normal(mu, sd);
    ConfDist trial = trial_cd_wald(case_study());
    // Reference weights: reciprocal spreads of the two evidence sources.
    CombinerSpec w{1.0 / sd, 1.0 / trial.sd()};
    ConfDist comb = combine_cds(prior, trial, w);
    check_confdist(comb);
    ConfDist closed = combined_normal_closed_form(mu, sd, case_study());
    check_confdist(closed);

    double sup = 0.0;
    for (std::size_t i = 0; i < comb.cdf.size(); ++i)
        sup = std::max(sup, std::fabs(comb.cdf[i] - closed.cdf_at(comb.density.grid[i])));
    CHECK(sup < 1e-10);

    CHECK(closed.mean() == doctest::Approx(0.065449).epsilon(1e-5));
    CHECK(closed.sd() == doctest::Approx(0.0515379).epsilon(1e-5));
    CHECK(closed.quantile(0.025) == doctest::Approx(-0.035567).epsilon(1e-4));
    CHECK(closed.quantile(0.975) == doctest::Approx(0.166464).epsilon(1e-4));
    CHECK(closed.quantile(0.10) == doctest::Approx(-0.000603).epsilon(1e-3));
    CHECK(std::fabs(closed.quantile(0.10) - (-0.000603)) < 1e-5);
    CHECK(closed.quantile(0.90) == doctest::Approx(0.131501).epsilon(1e-4));

    // The combined point estimate sits between the two inputs.
    CHECK(closed.median() > prior.median());
    CHECK(closed.median() < trial.median());

    // Vanishing prior precision hands the answer back to the trial.
    ConfDist wide = combined_normal_closed_form(mu, 1e8, case_study());
    CHECK(wide.mean() == doctest::Approx(trial.mean()).epsilon(1e-9));
    CHECK(wide.sd() == doctest::Approx(trial.sd()).epsilon(1e-9));
}

TEST_CASE("histogram prior combined with the profile trial CD") {
    PooledHistogram h = reference_hist();
    ConfDist prior = prior_cd_from_histogram(h);
    ConfDist trial = trial_cd_profile(case_study());
    CombinerSpec w{1.0 / h.sd, 1.0 / 0.088462};
    ConfDist comb = combine_cds(prior, trial, w);
    check_confdist(comb);

    CHECK(std::fabs(comb.median() - 0.062988) < 2e-4);
    CHECK(std::fabs(comb.mean() - 0.064658) < 2e-4);
    CHECK(std::fabs(comb.quantile(0.10) - 0.002473) < 2e-4);
    CHECK(std::fabs(comb.quantile(0.90) - 0.132518) < 2e-4);
    CHECK(std::fabs(comb.quantile(0.025) - (-0.033286)) < 2e-4);
    CHECK(std::fabs(comb.quantile(0.975) - 0.172270) < 2e-4);

    // Case-study pattern: the combined median lands between the inputs.
    CHECK(comb.median() > prior.median());
    CHECK(comb.median() < trial.median());
}

TEST_CASE("combiner responds monotonically to its inputs") {
    ConfDist trial = trial_cd_wald(case_study());
    CombinerSpec w{1.0 / 0.0634122, 1.0 / trial.sd()};
    // Lowering the prior center raises its CDF everywhere, which must
    // never lower the combined CDF.
    ConfDist lifted = prior_cd_normal(0.0359273, 0.0634122);
    ConfDist base = prior_cd_normal(0.0459273, 0.0634122);
    ConfDist ca = combine_cds(lifted, trial, w);
    ConfDist cb = combine_cds(base, trial, w);
    for (double x = -0.4; x <= 0.6; x += 0.002)
        CHECK(ca.cdf_at(x) >= cb.cdf_at(x) - 1e-12);

    // An overwhelming trial weight reproduces the trial CD.
    ConfDist dom = combine_cds(base, trial, {w.w1, 1e8});
    double sup = 0.0;
    for (double x = -0.4; x <= 0.6; x += 0.002)
        sup = std::max(sup, std::fabs(dom.cdf_at(x) - trial.cdf_at(x)));
    CHECK(sup < 1e-4);
}

TEST_CASE("combiner rejects bad inputs") {
    ConfDist a = prior_cd_normal(0.05, 0.06);
    ConfDist b = trial_cd_wald(case_study());
    CHECK_THROWS_AS(combine_cds(a, b, {0.0, 1.0}), UsageError);
    CHECK_THROWS_AS(combine_cds(a, b, {1.0, -2.0}), UsageError);
    ConfDist far = prior_cd_normal(10.0, 0.1);
    CHECK_THROWS_AS(combine_cds(a, far, {1.0, 1.0}), UsageError);
    CHECK_THROWS_AS(combined_normal_closed_form(0.05, -1.0, case_study()), UsageError);
}

TEST_CASE("repeated sampling sends the CD through a uniform") {
    // True rates (0.46, 0.56) at the case-study sample sizes scaled by 10.
    const double delta0 = 0.10;
    auto draw_trial = [](Rng& r) {
        return TrialData{680, r.binomial(680, 0.46), 590, r.binomial(590, 0.56)};
    };

    Rng rng(424243);
    double p_wald = cd_validate_uniformity(
        [&](Rng& r) { return trial_cd_wald(draw_trial(r)).cdf_at(delta0); }, 2000, rng);
    CHECK(p_wald > 0.01);

    Rng rng2(990017);
    double p_prof = cd_validate_uniformity(
        [&](Rng& r) { return trial_cd_profile(draw_trial(r), 801).cdf_at(delta0); }, 400,
        rng2);
    CHECK(p_prof > 0.01);

    // The combination stays a CD when the prior center is itself drawn
    // around the truth each replication.
    const double sigma_d = 0.0634122;
    Rng rng3(5577);
    double p_comb = cd_validate_uniformity(
        [&](Rng& r) {
            double mu = delta0 + sigma_d * r.normal();
            return combined_normal_closed_form(mu, sigma_d, draw_trial(r)).cdf_at(delta0);
        },
        2000, rng3);
    CHECK(p_comb > 0.01);

    // Negative control: a mis-centered CD is not uniform.
    Rng rng4(8081);
    double p_bad = cd_validate_uniformity(
        [&](Rng& r) { return trial_cd_wald(draw_trial(r)).cdf_at(delta0 + 0.05); }, 2000,
        rng4);
    CHECK(p_bad < 0.001);

    Rng rng5(1);
    CHECK_THROWS_AS(cd_validate_uniformity([](Rng&) { return 0.5; }, 5, rng5), UsageError);
}
