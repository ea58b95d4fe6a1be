#include "cdfuse/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>

#include "cdfuse/diagnostics.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/numeric.hpp"
#include "cdfuse/rng.hpp"

namespace cdfuse {

std::vector<double> sim_default_bin_edges() {
    std::vector<double> edges(kSurveyBins + 1);
    for (int i = 0; i <= kSurveyBins; ++i) edges[i] = -0.05 + 0.05 * i;
    return edges;
}

void SimConfig::validate() const {
    if (!(truth.q0 > 0.0 && truth.q1 > 0.0 && truth.r > 0.0))
        throw ValidationError("sim: truth parameters must be positive");
    if (experts < 1) throw ValidationError("sim: experts must be at least 1");
    if (patients_per_expert < 1)
        throw ValidationError("sim: patients_per_expert must be at least 1");
    if (bin_edges.size() != kSurveyBins + 1)
        throw ValidationError("sim: expected 13 bin edges, got " +
                              std::to_string(bin_edges.size()));
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw ValidationError("sim: bin edges must be strictly increasing");
}

namespace {

// Clamping keeps every patient tallied so rows still sum to 100.
int bin_of(double delta, const std::vector<double>& edges, long& clamped) {
    if (delta < edges.front()) {
        ++clamped;
        return 0;
    }
    if (delta >= edges.back()) {
        ++clamped;
        return kSurveyBins - 1;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), delta);
    return static_cast<int>(it - edges.begin()) - 1;
}

} // namespace

SimulatedSurvey simulate_survey(const SimConfig& cfg) {
    cfg.validate();
    SimulatedSurvey out;
    out.table.bin_edges = cfg.bin_edges;
    out.table.experts.assign(static_cast<std::size_t>(cfg.experts), {});
    std::vector<long> clamped(static_cast<std::size_t>(cfg.experts), 0);

    parallel_for(cfg.experts, [&](int e) {
        Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(e));
        std::array<long, kSurveyBins> count{};
        std::pair<double, double> expert_p{0.0, 0.0};
        if (cfg.bernoulli_patients) expert_p = bibeta_sample(cfg.truth, rng);
        for (int i = 0; i < cfg.patients_per_expert; ++i) {
            double delta;
            if (cfg.bernoulli_patients) {
                int y0 = rng.uniform() < expert_p.first ? 1 : 0;
                int y1 = rng.uniform() < expert_p.second ? 1 : 0;
                delta = static_cast<double>(y1 - y0);
            } else {
                auto [p0, p1] = bibeta_sample(cfg.truth, rng);
                delta = p1 - p0;
            }
            ++count[static_cast<std::size_t>(
                bin_of(delta, cfg.bin_edges, clamped[static_cast<std::size_t>(e)]))];
        }
        auto& row = out.table.experts[static_cast<std::size_t>(e)];
        for (int k = 0; k < kSurveyBins; ++k)
            row[static_cast<std::size_t>(k)] =
                100.0 * static_cast<double>(count[static_cast<std::size_t>(k)]) /
                cfg.patients_per_expert;
    });

    for (long c : clamped) out.clamped += c;
    out.table.validate();
    return out;
}

SurveyTable population_survey(const BibetaParams& truth, std::vector<double> bin_edges) {
    if (bin_edges.size() != kSurveyBins + 1)
        throw ValidationError("population_survey: expected " +
                              std::to_string(kSurveyBins + 1) + " bin edges");
    GridDensity marg = project_joint_to_delta(
        [&truth](double p0, double p1) { return std::exp(bibeta_logpdf(p0, p1, truth)); });
    std::vector<double> cdf = marg.cdf_values();

    auto cdf_at = [&](double x) {
        if (x <= marg.grid.front()) return 0.0;
        if (x >= marg.grid.back()) return 1.0;
        return interp(marg.grid, cdf, x);
    };

    SurveyTable t;
    t.bin_edges = bin_edges;
    std::array<double, kSurveyBins> row{};
    double total = 0.0;
    for (int k = 0; k < kSurveyBins; ++k) {
        double mass = cdf_at(bin_edges[static_cast<std::size_t>(k + 1)]) -
                      cdf_at(bin_edges[static_cast<std::size_t>(k)]);
        // fold the tails so the row covers the whole support
        if (k == 0) mass += cdf_at(bin_edges.front());
        if (k == kSurveyBins - 1) mass += 1.0 - cdf_at(bin_edges.back());
        row[static_cast<std::size_t>(k)] = mass;
        total += mass;
    }
    for (auto& w : row) w = 100.0 * w / total;
    t.experts.push_back(row);
    t.validate();
    return t;
}

} // namespace cdfuse
