#pragma once
#include <cstdint>
#include <vector>

#include "cdfuse/elicit.hpp"
#include "cdfuse/specfun.hpp"

namespace cdfuse {

// 13 uniform edges, width 0.05, spanning -0.05 .. +0.55: the tally sheet
// used for the synthetic survey, shifted toward improvement.
std::vector<double> sim_default_bin_edges();

struct SimConfig {
    BibetaParams truth{6.0, 20.0, 2.0};
    int experts = 11;
    int patients_per_expert = 100;
    std::vector<double> bin_edges = sim_default_bin_edges();
    std::uint64_t seed = 0;
    // Alternative generative reading: one (p0,p1) draw per expert, each
    // patient a Bernoulli outcome pair tallied by y1 - y0. The default
    // draws a fresh (p0,p1) per patient, which is what reproduces the
    // smooth reference histogram.
    bool bernoulli_patients = false;

    void validate() const; // throws ValidationError
};

struct SimulatedSurvey {
    SurveyTable table;
    long clamped = 0; // tallies outside the bin range, pushed into the edge bins
};

// One expert row per simulated expert; weights are percents of
// patients_per_expert and sum to exactly 100. Experts use seeds derived
// from cfg.seed, so rows are reproducible independently of thread count.
SimulatedSurvey simulate_survey(const SimConfig& cfg);

// The n -> infinity limit of simulate_survey: a single-expert table whose
// weights are the exact bin probabilities of the truth's delta marginal,
// tails folded into the edge bins. Deterministic, no sampling.
SurveyTable population_survey(const BibetaParams& truth,
                              std::vector<double> bin_edges = sim_default_bin_edges());

} // namespace cdfuse
