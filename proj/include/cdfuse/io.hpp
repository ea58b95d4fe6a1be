#pragma once
#include <string>
#include <vector>

#include "cdfuse/bayes.hpp"
#include "cdfuse/diagnostics.hpp"
#include "cdfuse/elicit.hpp"
#include "cdfuse/grid.hpp"

namespace cdfuse {

// Survey CSV: header row, then one expert per row with 12 percent columns,
// optionally preceded by an id column. Bin edges travel in run configs,
// not in the CSV. Throws ValidationError naming the offending line.
SurveyTable read_survey_csv(const std::string& path,
                            std::vector<double> bin_edges = default_bin_edges());
void write_survey_csv(const SurveyTable& t, const std::string& path);

// Grid CSV: delta,density[,cdf] at full precision, for plotting and
// re-ingestion. Reading recomputes nothing: values land as written.
void write_grid_csv(const GridDensity& g, const std::string& path,
                    const std::vector<double>* cdf = nullptr);
GridDensity read_grid_csv(const std::string& path);

// Pooled-histogram CSV: bin_lo,bin_hi,weight,density, one row per bin.
// Reading rebuilds the moments under the pooling convention (midpoint rule
// plus the within-bin uniform spread).
void write_histogram_csv(const PooledHistogram& h, const std::string& path);
PooledHistogram read_histogram_csv(const std::string& path);

// Generic CSV ingestion: the header fields, then one vector per data row.
// Blank lines are dropped; no type conversion is attempted.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

// Summary CSV in the reference table layout, 4 decimal places.
struct SummaryRow {
    std::string label;
    SummaryReport report;
};
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

void write_verdict_json(const DiscrepancyVerdict& v, const std::string& path);

// Parses {"burn_in": N, "chains": N, "proposal_scale": F,
// "mode": "adaptive"|"paper-mode", "seed": N, "thin": N, "blockwise": B}.
// Unknown keys are rejected so config typos fail loudly.
McmcConfig mcmc_config_from_json(const std::string& json_text);

} // namespace cdfuse
