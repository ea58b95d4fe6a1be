#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cdfuse/cd.hpp"
#include "cdfuse/diagnostics.hpp"
#include "cdfuse/elicit.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"
#include "cdfuse/sim.hpp"
#include "cdfuse/specfun.hpp"

using namespace cdfuse;

namespace {

SimConfig reference_config() {
    SimConfig cfg;
    cfg.truth = BibetaParams{6.0, 20.0, 2.0};
    cfg.seed = 4242;
    return cfg;
}

} // namespace

TEST_CASE("simulated survey pools to the generating mean") {
    SimConfig cfg = reference_config();
    SimulatedSurvey sim = simulate_survey(cfg);
    REQUIRE(sim.table.experts.size() == 11);
    CHECK(sim.table.bin_edges == sim_default_bin_edges());

    for (const auto& row : sim.table.experts) {
        double sum = 0.0;
        for (double w : row) {
            CHECK(w == std::floor(w)); // 100 patients: integer percents
            sum += w;
        }
        CHECK(sum == 100.0);
    }

    // True improvement sd is 0.1044, so 3 MC-SEs over 1100 tallies is 0.0094.
    PooledHistogram pooled = pool_survey(sim.table);
    double se = std::sqrt(bibeta_e_delta_sq(cfg.truth) -
                          0.159 * 0.159); // variance of one tally, near 0.0109
    CHECK(std::fabs(pooled.mean - 0.159) < 3.0 * se / std::sqrt(1100.0) + 0.002);
    CHECK(sim.clamped < 20); // out-of-range probability is 0.0018
}

TEST_CASE("exchangeable arms center the survey at zero") {
    SimConfig cfg;
    cfg.truth = BibetaParams{10.0, 10.0, 3.0};
    cfg.seed = 77;
    cfg.bin_edges.clear();
    for (int i = 0; i <= 12; ++i) cfg.bin_edges.push_back(-0.30 + 0.05 * i);
    SimulatedSurvey sim = simulate_survey(cfg);
    PooledHistogram pooled = pool_survey(sim.table);
    double se = std::sqrt(bibeta_e_delta_sq(cfg.truth) / 1100.0);
    CHECK(std::fabs(pooled.mean) < 3.0 * se + 0.002);
}

TEST_CASE("fixed seed reproduces the survey exactly") {
    SimConfig cfg = reference_config();
    SimulatedSurvey a = simulate_survey(cfg);
    SimulatedSurvey b = simulate_survey(cfg);
    CHECK(a.table.experts == b.table.experts);
    CHECK(a.clamped == b.clamped);

    cfg.seed = 4243;
    SimulatedSurvey c = simulate_survey(cfg);
    CHECK(a.table.experts != c.table.experts);
}

TEST_CASE("pooled tally converges to the generating marginal") {
    SimConfig cfg = reference_config();
    cfg.patients_per_expert = 10000;
    cfg.seed = 99;
    SimulatedSurvey sim = simulate_survey(cfg);
    ConfDist hist = prior_cd_from_histogram(pool_survey(sim.table));

    BibetaParams truth = cfg.truth;
    auto joint = [truth](double p0, double p1) {
        if (p0 <= 0.0 || p0 >= 1.0 || p1 <= 0.0 || p1 >= 1.0) return 0.0;
        return std::exp(bibeta_logpdf(p0, p1, truth));
    };
    GridDensity marg = project_joint_to_delta(joint, 2001);
    std::vector<double> cdf = marg.cdf_values();
    // Binned data pins the CDF at the bin edges; between edges both curves
    // follow interpolation conventions, and the chord of a curved CDF sits
    // up to f'w^2/8 ~ 0.016 off it at this bin width no matter how many
    // patients are tallied. So convergence is measured at the edges.
    double sup = 0.0;
    for (double e : cfg.bin_edges)
        sup = std::max(sup, std::fabs(hist.cdf_at(e) - interp(marg.grid, cdf, e)));
    CHECK(sup < 0.02);
    CHECK(sup < 0.01); // at 1e5 tallies the edge error is a few thousandths
}

TEST_CASE("bernoulli patient reading concentrates on unit tallies") {
    SimConfig cfg = reference_config();
    cfg.bernoulli_patients = true;
    SimulatedSurvey sim = simulate_survey(cfg);
    // Each tally is y1 - y0 in {-1, 0, 1}: bin 1 holds zero, the clamped
    // edge bins hold the rest.
    for (const auto& row : sim.table.experts) {
        double sum = 0.0;
        for (int k = 0; k < kSurveyBins; ++k) {
            if (k != 0 && k != 1 && k != 11) CHECK(row[static_cast<std::size_t>(k)] == 0.0);
            sum += row[static_cast<std::size_t>(k)];
        }
        CHECK(sum == 100.0);
    }
    CHECK(sim.clamped > 0);
}

TEST_CASE("single expert edge case") {
    SimConfig cfg = reference_config();
    cfg.experts = 1;
    SimulatedSurvey sim = simulate_survey(cfg);
    CHECK(sim.table.experts.size() == 1);
}

TEST_CASE("population survey is the deterministic large-n limit") {
    SurveyTable pop = population_survey(BibetaParams{6.0, 20.0, 2.0});
    REQUIRE(pop.experts.size() == 1);
    CHECK(pop.ids.empty());

    double sum = 0.0;
    for (double w : pop.experts[0]) {
        CHECK(w >= 0.0);
        sum += w;
    }
    CHECK(std::abs(sum - 100.0) < 1e-9);

    // Binned mean tracks the truth's delta mean; the 0.05 bin width and
    // tail folding perturb it by well under half a bin.
    PooledHistogram pooled = pool_survey(pop);
    CHECK(std::abs(pooled.mean - 0.15908) < 0.005);

    // Interior mass dominates: the marginal peaks near 0.085 and the
    // folded tails carry almost nothing.
    CHECK(pop.experts[0][2] > 15.0);
    CHECK(pop.experts[0][0] < 5.0);
    CHECK(pop.experts[0][11] < 1.0);

    SurveyTable again = population_survey(BibetaParams{6.0, 20.0, 2.0});
    CHECK(again.experts[0] == pop.experts[0]);

    std::vector<double> bad_edges = sim_default_bin_edges();
    bad_edges.pop_back();
    CHECK_THROWS_AS(population_survey(BibetaParams{6.0, 20.0, 2.0}, bad_edges),
                    ValidationError);
}

TEST_CASE("sim configuration is validated") {
    SimConfig bad = reference_config();
    bad.experts = 0;
    CHECK_THROWS_AS(simulate_survey(bad), ValidationError);

    bad = reference_config();
    bad.patients_per_expert = 0;
    CHECK_THROWS_AS(simulate_survey(bad), ValidationError);

    bad = reference_config();
    bad.bin_edges.pop_back();
    CHECK_THROWS_AS(simulate_survey(bad), ValidationError);

    bad = reference_config();
    bad.bin_edges[3] = bad.bin_edges[2];
    CHECK_THROWS_AS(simulate_survey(bad), ValidationError);

    bad = reference_config();
    bad.truth.r = 0.0;
    CHECK_THROWS_AS(simulate_survey(bad), ValidationError);
}
