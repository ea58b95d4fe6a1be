#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cdfuse/elicit.hpp"
#include "cdfuse/errors.hpp"
#include "cdfuse/grid.hpp"
#include "cdfuse/io.hpp"
#include "cdfuse/sim.hpp"
#include "cdfuse/specfun.hpp"

using namespace cdfuse;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string output; // stdout + stderr
};

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() /
                     ("cdfuse_cli_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    fs::path log = scratch_dir() / "last_run.log";
    std::string cmd = std::string(CDFUSE_BIN) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string data_path(const char* name) {
    return std::string(CDFUSE_DATA_DIR) + "/" + name;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const SummaryRow& row_named(const std::vector<SummaryRow>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.label == name) return r;
    REQUIRE_MESSAGE(false, "missing summary row " << name);
    return rows.front();
}

// Moment targets implied by the reference independent-beta hyperparameters.
struct CaptionTargets {
    double mu0, sigma0, mu_d, sigma_d;
};

CaptionTargets caption_targets() {
    double mu0 = 14.66 / 19.54, v0 = mu0 * (1.0 - mu0) / 20.54;
    double mu1 = 46.81 / 51.49, v1 = mu1 * (1.0 - mu1) / 52.49;
    return {mu0, std::sqrt(v0), mu1 - mu0, std::sqrt(v0 + v1)};
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

TEST_CASE("usage errors exit with code 2 and name the problem") {
    auto out = (scratch_dir() / "usage").string();

    RunResult r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                          " --trial 68,31,59,33 --prior indep-beta --sigma0 0.05 --out " + out);
    CHECK(r.code == 2);
    CHECK(r.output.find("mu0") != std::string::npos);

    r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                " --trial 68,31,59 --prior cd-normal --out " + out);
    CHECK(r.code == 2);
    CHECK(r.output.find("--trial") != std::string::npos);

    r = run_cli("analyze --survey " + (scratch_dir() / "missing.csv").string() +
                " --trial 68,31,59,33 --prior cd-normal --out " + out);
    CHECK(r.code == 2);

    r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                " --trial 68,31,59,33 --prior not-a-family --out " + out);
    CHECK(r.code == 2);
    CHECK(r.output.find("not-a-family") != std::string::npos);

    r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                " --trial 68,31,59,33 --prior cd-hist --mu-d 0.1 --out " + out);
    CHECK(r.code == 2);
}

TEST_CASE("infeasible moment targets exit with code 1") {
    auto out = (scratch_dir() / "infeasible").string();
    RunResult r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                          " --trial 68,31,59,33 --prior indep-beta --mu0 0.46 --sigma0 0.5 "
                          "--out " + out);
    CHECK(r.code == 1);
    CHECK(r.output.find("sigma0") != std::string::npos);
}

TEST_CASE("cd-normal analysis reproduces the reference combination") {
    auto out = scratch_dir() / "cdnormal";
    RunResult r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                          " --trial 68,31,59,33 --prior cd-normal --seed 42 --out " +
                          out.string());
    REQUIRE(r.code == 0);

    auto rows = read_summary_csv((out / "summary.csv").string());
    const SummaryReport& comb = row_named(rows, "combined").report;
    CHECK(std::fabs(comb.mean - 0.068) < 0.005);
    CHECK(std::fabs(comb.median - 0.068) < 0.005);
    CHECK(std::fabs(comb.i95.lo - (-0.035)) < 0.01);
    CHECK(std::fabs(comb.i95.hi - 0.171) < 0.01);

    const SummaryReport& lik = row_named(rows, "likelihood").report;
    CHECK(std::fabs(lik.mode - 0.104) < 0.002);
    CHECK(std::fabs(lik.mean - 0.103) < 0.002);

    // The near-normal case: fused evidence sits between its sources.
    const SummaryReport& prior = row_named(rows, "prior").report;
    CHECK(comb.mean > prior.mean);
    CHECK(comb.mean < lik.mean);

    std::string verdict = read_all(out / "verdict.json");
    CHECK(verdict.find("\"discrepant\": false") != std::string::npos);
    CHECK(verdict.find("\"statistic\": \"mean\"") != std::string::npos);

    // Grid artifacts re-ingest and are coherent: the combined CD's grid mean
    // matches the summary row.
    GridDensity g = read_grid_csv((out / "combined.csv").string());
    CHECK(g.grid.size() > 100);
    CHECK(grid_mean(g) == doctest::Approx(comb.mean).epsilon(1e-3));
}

TEST_CASE("conjugate analysis flags the discrepant posterior") {
    auto dir = scratch_dir() / "conjugate";
    fs::create_directories(dir);
    write_survey_csv(population_survey(BibetaParams{6.0, 20.0, 2.0}),
                     (dir / "survey.csv").string());
    {
        std::ofstream cfg(dir / "config.json");
        cfg << "{\"bin_edges\": [-0.05, 0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, "
               "0.35, 0.4, 0.45, 0.5, 0.55]}\n";
    }

    CaptionTargets t = caption_targets();
    auto out = dir / "run";
    RunResult r = run_cli("analyze --survey " + (dir / "survey.csv").string() +
                          " --trial 68,31,59,33 --prior indep-beta --mu0 " + fmt17(t.mu0) +
                          " --sigma0 " + fmt17(t.sigma0) + " --mu-d " + fmt17(t.mu_d) +
                          " --sigma-d " + fmt17(t.sigma_d) + " --config " +
                          (dir / "config.json").string() + " --out " + out.string());
    REQUIRE(r.code == 0);

    auto rows = read_summary_csv((out / "summary.csv").string());
    const SummaryReport& post = row_named(rows, "posterior").report;
    CHECK(std::fabs(post.mean - 0.2007) < 0.002);
    const SummaryReport& prior = row_named(rows, "prior").report;
    CHECK(std::fabs(prior.mean - 0.159) < 0.002);

    std::string verdict = read_all(out / "verdict.json");
    CHECK(verdict.find("\"discrepant\": true") != std::string::npos);

    GridDensity g = read_grid_csv((out / "posterior.csv").string());
    CHECK(grid_mean(g) == doctest::Approx(0.2007).epsilon(0.01));
}

TEST_CASE("identical seed and config give byte-identical artifacts") {
    auto base = scratch_dir() / "determinism";
    std::string common = "analyze --survey " + data_path("migraine_pr2_survey.csv") +
                         " --trial 68,31,59,33 --prior cd-hist --seed 7 --out ";
    REQUIRE(run_cli(common + (base / "a").string()).code == 0);
    REQUIRE(run_cli(common + (base / "b").string()).code == 0);
    for (const char* name :
         {"prior.csv", "likelihood.csv", "combined.csv", "summary.csv", "verdict.json",
          "run.json"}) {
        INFO(name);
        CHECK(read_all(base / "a" / name) == read_all(base / "b" / name));
    }

    std::string sim = "simulate --seed 11 --out ";
    REQUIRE(run_cli(sim + (base / "s1").string()).code == 0);
    REQUIRE(run_cli(sim + (base / "s2").string()).code == 0);
    for (const char* name : {"survey.csv", "pooled.csv", "meta.json"}) {
        INFO(name);
        CHECK(read_all(base / "s1" / name) == read_all(base / "s2" / name));
    }
}

TEST_CASE("simulate artifacts round-trip through the readers") {
    auto out = scratch_dir() / "simulate";
    RunResult r = run_cli("simulate --experts 7 --patients 200 --seed 99 --out " + out.string());
    REQUIRE(r.code == 0);

    SurveyTable table = read_survey_csv((out / "survey.csv").string(),
                                        sim_default_bin_edges());
    CHECK(table.experts.size() == 7);

    // Writing the parsed table reproduces the file byte for byte.
    write_survey_csv(table, (out / "rewritten.csv").string());
    CHECK(read_all(out / "survey.csv") == read_all(out / "rewritten.csv"));

    PooledHistogram pooled = read_histogram_csv((out / "pooled.csv").string());
    PooledHistogram direct = pool_survey(table);
    CHECK(pooled.mean == doctest::Approx(direct.mean).epsilon(1e-12));
    CHECK(pooled.sd == doctest::Approx(direct.sd).epsilon(1e-12));

    RunResult other = run_cli("simulate --experts 7 --patients 200 --seed 100 --out " +
                              (scratch_dir() / "simulate2").string());
    REQUIRE(other.code == 0);
    CHECK(read_all(out / "survey.csv") !=
          read_all(scratch_dir() / "simulate2" / "survey.csv"));
}

TEST_CASE("reproduce table2 skips Bayesian rows without prior inputs") {
    auto out = scratch_dir() / "table2";
    RunResult r = run_cli("reproduce --table table2 --survey " +
                          data_path("migraine_pr2_survey.csv") + " --manifest " +
                          data_path("reproduce_manifest.json") + " --out " + out.string());
    REQUIRE(r.code == 0);

    CsvTable report = read_csv((out / "report.csv").string());
    REQUIRE(report.header.size() == 7);
    int skipped = 0, ok = 0;
    for (const auto& row : report.rows) {
        REQUIRE(row.size() == 7);
        const std::string& name = row[0];
        const std::string& status = row[6];
        CHECK(status != "deviation");
        if (status == "skipped: missing input") {
            ++skipped;
            CHECK(name.find("beta") != std::string::npos); // only Bayesian rows skip
        }
        if (status == "ok") ++ok;
    }
    CHECK(skipped == 5);
    CHECK(ok >= 30);

    // The likelihood point estimates reproduce exactly at table precision.
    for (const auto& row : report.rows) {
        if (row[0] == "likelihood" &&
            (row[1] == "mode" || row[1] == "median" || row[1] == "mean"))
            CHECK(row[6] == "ok");
    }
}

TEST_CASE("reproduce table2 computes Bayesian rows when priors are supplied") {
    auto out = scratch_dir() / "table2_bayes";
    RunResult r = run_cli("reproduce --table table2 --survey " +
                          data_path("migraine_pr2_survey.csv") + " --manifest " +
                          data_path("reproduce_manifest.json") +
                          " --mu0 0.46 --sigma0 0.0456 --seed 3 --out " + out.string());
    REQUIRE(r.code == 0);

    CsvTable report = read_csv((out / "report.csv").string());
    int informational = 0;
    for (const auto& row : report.rows) {
        CHECK(row[6] != "skipped: missing input");
        if (row[6] == "informational") {
            ++informational;
            CHECK(!row[2].empty());
            // Unpublished inputs: values are reported, not judged, but the
            // posterior stays in a plausible neighbourhood of the reference.
            if (row[0] == "indep-beta-posterior" && row[1] == "mean")
                CHECK(std::fabs(std::stod(row[2]) - 0.071) < 0.03);
        }
    }
    CHECK(informational >= 15);
}

TEST_CASE("mcmc config file controls the sampler and rejects typos") {
    auto dir = scratch_dir() / "config";
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "bad.json");
        cfg << "{\"mcmc\": {\"burnin\": 10}}\n";
    }
    RunResult r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                          " --trial 68,31,59,33 --prior cd-normal --config " +
                          (dir / "bad.json").string() + " --out " + (dir / "out").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("burnin") != std::string::npos);

    {
        std::ofstream cfg(dir / "small.json");
        cfg << "{\"mcmc\": {\"burn_in\": 500, \"chains\": 400}}\n";
    }
    r = run_cli("analyze --survey " + data_path("migraine_pr2_survey.csv") +
                " --trial 68,31,59,33 --prior bibeta --mu0 0.46 --sigma0 0.0456 "
                "--config " + (dir / "small.json").string() + " --seed 5 --out " +
                (dir / "out").string());
    REQUIRE(r.code == 0);
    std::string run = read_all(dir / "out" / "run.json");
    CHECK(run.find("\"burn_in\": 500") != std::string::npos);
    CHECK(run.find("\"chains\": 400") != std::string::npos);

    // Sampled posterior sits between prior and likelihood (near-normal case)
    // even at smoke scale.
    auto rows = read_summary_csv((dir / "out" / "summary.csv").string());
    double post = row_named(rows, "posterior").report.mean;
    CHECK(post > row_named(rows, "prior").report.mean);
    CHECK(post < row_named(rows, "likelihood").report.mean + 0.01);
}

TEST_CASE("survey and summary readers reject malformed files") {
    auto dir = scratch_dir() / "malformed";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "short_row.csv");
        f << "bin1,bin2\n1,2,3\n";
    }
    CHECK_THROWS_AS(read_survey_csv((dir / "short_row.csv").string()), ValidationError);
    {
        std::ofstream f(dir / "bad_number.csv");
        f << "expert,b1,b2,b3,b4,b5,b6,b7,b8,b9,b10,b11,b12\n"
             "1,0,0,0,0,0,0,0,0,0,0,0,oops\n";
    }
    try {
        read_survey_csv((dir / "bad_number.csv").string());
        CHECK(false);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    CHECK_THROWS_AS(mcmc_config_from_json("{\"mode\": \"warp\"}"), ValidationError);
    CHECK_THROWS_AS(mcmc_config_from_json("{\"chains\": \"many\"}"), ValidationError);
    CHECK_THROWS_AS(mcmc_config_from_json("not json"), ValidationError);
}

TEST_CASE("summary table round-trips at table precision") {
    std::vector<SummaryRow> rows = {
        {"prior", {0.0493, 0.0471, 0.0482, {-0.05, 0.15}, {-0.06, 0.16}, {-0.08, 0.173}}},
        {"posterior", {0.069, 0.0702, 0.0711, {0.01, 0.13}, {-0.01, 0.15}, {-0.029, 0.174}}},
    };
    auto path = (scratch_dir() / "summary_roundtrip.csv").string();
    write_summary_csv(rows, path);
    auto parsed = read_summary_csv(path);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].label == "prior");
    CHECK(parsed[1].report.mean == doctest::Approx(0.0711).epsilon(1e-12));
    CHECK(parsed[1].report.i95.hi == doctest::Approx(0.174).epsilon(1e-12));
}
