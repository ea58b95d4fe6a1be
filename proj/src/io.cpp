#include "cdfuse/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cdfuse/errors.hpp"

namespace cdfuse {
namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& field, const std::string& where) {
    const char* s = field.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s, &end);
    while (end && *end == ' ') ++end;
    if (end == s || (end && *end != '\0') || errno == ERANGE)
        throw ValidationError(where + ": not a number: '" + field + "'");
    return v;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
    if (!out) throw ValidationError("write failed for " + path);
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

} // namespace

SurveyTable read_survey_csv(const std::string& path, std::vector<double> bin_edges) {
    auto lines = split_lines(read_file(path));
    if (lines.size() < 2) throw ValidationError(path + ": expected a header row and at least one expert row");

    SurveyTable t;
    t.bin_edges = std::move(bin_edges);

    bool has_ids = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split_fields(lines[i]);
        const std::string where = path + " line " + std::to_string(i + 1);
        bool row_has_id = fields.size() == kSurveyBins + 1;
        if (!row_has_id && fields.size() != kSurveyBins)
            throw ValidationError(where + ": expected " + std::to_string(kSurveyBins) +
                                  " weight columns (plus an optional id), got " +
                                  std::to_string(fields.size()) + " fields");
        if (t.experts.empty()) {
            has_ids = row_has_id;
        } else if (row_has_id != has_ids) {
            throw ValidationError(where + ": inconsistent column count across rows");
        }
        std::size_t off = 0;
        if (has_ids) {
            t.ids.push_back(fields[0]);
            off = 1;
        }
        std::array<double, kSurveyBins> row{};
        for (std::size_t j = 0; j < kSurveyBins; ++j)
            row[j] = parse_number(fields[off + j], where);
        t.experts.push_back(row);
    }
    t.validate();
    return t;
}

void write_survey_csv(const SurveyTable& t, const std::string& path) {
    std::string out;
    const bool has_ids = !t.ids.empty();
    if (has_ids) out += "expert,";
    for (std::size_t j = 0; j < kSurveyBins; ++j) {
        out += "bin" + std::to_string(j + 1);
        out += j + 1 < kSurveyBins ? ',' : '\n';
    }
    for (std::size_t i = 0; i < t.experts.size(); ++i) {
        if (has_ids) out += t.ids[i] + ",";
        for (std::size_t j = 0; j < kSurveyBins; ++j) {
            out += fmt("%.17g", t.experts[i][j]);
            out += j + 1 < kSurveyBins ? ',' : '\n';
        }
    }
    write_file(path, out);
}

void write_grid_csv(const GridDensity& g, const std::string& path,
                    const std::vector<double>* cdf) {
    if (cdf && cdf->size() != g.grid.size())
        throw UsageError("grid CSV: cdf column length does not match the grid");
    std::string out = cdf ? "delta,density,cdf\n" : "delta,density\n";
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
        out += fmt("%.10g", g.grid[i]);
        out += ',';
        out += fmt("%.10g", g.values[i]);
        if (cdf) {
            out += ',';
            out += fmt("%.10g", (*cdf)[i]);
        }
        out += '\n';
    }
    write_file(path, out);
}

GridDensity read_grid_csv(const std::string& path) {
    auto lines = split_lines(read_file(path));
    if (lines.size() < 2) throw ValidationError(path + ": expected a header row and data rows");
    GridDensity g;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split_fields(lines[i]);
        const std::string where = path + " line " + std::to_string(i + 1);
        if (fields.size() < 2) throw ValidationError(where + ": expected delta,density columns");
        g.grid.push_back(parse_number(fields[0], where));
        g.values.push_back(parse_number(fields[1], where));
    }
    return g;
}

void write_histogram_csv(const PooledHistogram& h, const std::string& path) {
    std::string out = "bin_lo,bin_hi,weight,density\n";
    for (std::size_t k = 0; k < kSurveyBins; ++k) {
        double lo = h.bin_edges[k];
        double hi = h.bin_edges[k + 1];
        out += fmt("%.17g", lo) + "," + fmt("%.17g", hi) + "," +
               fmt("%.17g", h.weights[k]) + "," + fmt("%.17g", h.weights[k] / (hi - lo)) + "\n";
    }
    write_file(path, out);
}

PooledHistogram read_histogram_csv(const std::string& path) {
    auto lines = split_lines(read_file(path));
    if (lines.size() != kSurveyBins + 1)
        throw ValidationError(path + ": expected " + std::to_string(kSurveyBins) +
                              " histogram rows");
    PooledHistogram h;
    for (std::size_t k = 0; k < kSurveyBins; ++k) {
        auto fields = split_fields(lines[k + 1]);
        const std::string where = path + " line " + std::to_string(k + 2);
        if (fields.size() < 3) throw ValidationError(where + ": expected bin_lo,bin_hi,weight");
        double lo = parse_number(fields[0], where);
        double hi = parse_number(fields[1], where);
        if (k == 0) h.bin_edges.push_back(lo);
        if (lo != h.bin_edges.back())
            throw ValidationError(where + ": bins are not contiguous");
        h.bin_edges.push_back(hi);
        h.weights[k] = parse_number(fields[2], where);
    }
    for (std::size_t k = 0; k < kSurveyBins; ++k) {
        double mid = 0.5 * (h.bin_edges[k] + h.bin_edges[k + 1]);
        h.mean += h.weights[k] * mid;
    }
    for (std::size_t k = 0; k < kSurveyBins; ++k) {
        double mid = 0.5 * (h.bin_edges[k] + h.bin_edges[k + 1]);
        double w = h.bin_edges[k + 1] - h.bin_edges[k];
        h.sd += h.weights[k] * ((mid - h.mean) * (mid - h.mean) + w * w / 12.0);
    }
    h.sd = std::sqrt(h.sd);
    return h;
}

CsvTable read_csv(const std::string& path) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError(path + ": empty CSV");
    CsvTable t;
    t.header = split_fields(lines[0]);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        t.rows.push_back(split_fields(lines[i]));
    }
    return t;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::string out = "row,mode,median,mean,i80_lo,i80_hi,i90_lo,i90_hi,i95_lo,i95_hi\n";
    for (const auto& r : rows) {
        const SummaryReport& s = r.report;
        const double cells[] = {s.mode,   s.median, s.mean,   s.i80.lo, s.i80.hi,
                                s.i90.lo, s.i90.hi, s.i95.lo, s.i95.hi};
        out += r.label;
        for (double c : cells) {
            out += ',';
            out += fmt("%.4f", c);
        }
        out += '\n';
    }
    write_file(path, out);
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
    auto lines = split_lines(read_file(path));
    if (lines.empty()) throw ValidationError(path + ": empty summary CSV");
    std::vector<SummaryRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split_fields(lines[i]);
        const std::string where = path + " line " + std::to_string(i + 1);
        if (fields.size() != 10) throw ValidationError(where + ": expected 10 columns");
        SummaryRow r;
        r.label = fields[0];
        double v[9];
        for (int j = 0; j < 9; ++j) v[j] = parse_number(fields[j + 1], where);
        r.report = SummaryReport{v[0], v[1], v[2], {v[3], v[4]}, {v[5], v[6]}, {v[7], v[8]}};
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_verdict_json(const DiscrepancyVerdict& v, const std::string& path) {
    nlohmann::json j;
    switch (v.statistic) {
        case Statistic::mode: j["statistic"] = "mode"; break;
        case Statistic::median: j["statistic"] = "median"; break;
        case Statistic::mean: j["statistic"] = "mean"; break;
    }
    j["prior"] = v.prior_value;
    j["likelihood"] = v.likelihood_value;
    j["posterior"] = v.posterior_value;
    j["discrepant"] = v.discrepant;
    j["any_statistic"] = v.any_statistic;
    if (v.direction)
        j["direction"] = {v.direction->first, v.direction->second};
    else
        j["direction"] = nullptr;
    write_file(path, j.dump(2) + "\n");
}

McmcConfig mcmc_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("mcmc config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("mcmc config: expected a JSON object");

    McmcConfig cfg;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "burn_in") {
                cfg.burn_in = value.get<int>();
            } else if (key == "chains") {
                cfg.chains = value.get<int>();
            } else if (key == "proposal_scale") {
                cfg.proposal_scale = value.get<double>();
            } else if (key == "mode") {
                auto m = value.get<std::string>();
                if (m == "adaptive")
                    cfg.mode = McmcConfig::Mode::adaptive;
                else if (m == "paper-mode")
                    cfg.mode = McmcConfig::Mode::paper;
                else
                    throw ValidationError("mcmc config: mode must be 'adaptive' or 'paper-mode', got '" + m + "'");
            } else if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "thin") {
                cfg.thin = value.get<int>();
            } else if (key == "blockwise") {
                cfg.blockwise = value.get<bool>();
            } else {
                throw ValidationError("mcmc config: unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::type_error&) {
            throw ValidationError("mcmc config: bad value type for '" + key + "'");
        }
    }
    return cfg;
}

} // namespace cdfuse
