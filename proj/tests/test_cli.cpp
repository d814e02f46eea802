#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "extdef/commands.hpp"
#include "extdef/csv_io.hpp"
#include "extdef/errors.hpp"

using namespace extdef;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("extdef_cli_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GlobalOptions opts_at(const std::string& dir, int workers = 1) {
    GlobalOptions o;
    o.out_dir = dir;
    o.workers = workers;
    return o;
}

}  // namespace

TEST_CASE("cmd_simulate writes observation and site files") {
    TempDir tmp("sim");
    json cfg{{"kind", "br"},
             {"n", 40},
             {"lambda", 2.0},
             {"kappa", 0.8},
             {"centre", {0.0, 0.0}},
             {"seed", 5},
             {"grid", {{"nx", 3}, {"ny", 3}}}};
    cmd_simulate(cfg, opts_at(tmp.sub("out")));
    const auto [obs, sites] = load_observations(tmp.sub("out") + "/observations.csv",
                                                tmp.sub("out") + "/sites.csv");
    CHECK(obs.n() == 40);
    CHECK(obs.d() == 9);
    CHECK(sites.size() == 9);

    json bad = cfg;
    bad["kind"] = "brownian";
    CHECK_THROWS_AS(cmd_simulate(bad, opts_at(tmp.sub("out2"))), config_error);
}

TEST_CASE("cmd_simulate study-scale shapes: 1000x64 BR and 1000x81 mixture") {
    TempDir tmp("simfull");
    json br{{"kind", "br"},
            {"n", 1000},
            {"lambda", 2.0},
            {"kappa", 0.8},
            {"centre", {0.0, 0.0}},
            {"seed", 1},
            {"grid", {{"nx", 8}, {"ny", 8}}}};
    cmd_simulate(br, opts_at(tmp.sub("br")));
    const auto [obs_br, sites_br] =
        load_observations(tmp.sub("br") + "/observations.csv", tmp.sub("br") + "/sites.csv");
    CHECK(obs_br.n() == 1000);
    CHECK(obs_br.d() == 64);

    json gm{{"kind", "gaussian_mixture"},
            {"n", 1000},
            {"p", 0.9},
            {"s0", "s41"},
            {"theta1", 2.0},
            {"theta2", 1.0},
            {"ns", {{"theta1", 2.0}, {"theta2", 0.8}, {"centre", {0.0, 0.0}}}},
            {"seed", 2},
            {"grid", {{"nx", 9}, {"ny", 9}}}};
    cmd_simulate(gm, opts_at(tmp.sub("gm")));
    const auto [obs_gm, sites_gm] =
        load_observations(tmp.sub("gm") + "/observations.csv", tmp.sub("gm") + "/sites.csv");
    CHECK(obs_gm.n() == 1000);
    CHECK(obs_gm.d() == 81);
}

TEST_CASE("cmd_simulate gaussian mixture and render output") {
    TempDir tmp("simgm");
    json cfg{{"kind", "gaussian_mixture"},
             {"n", 30},
             {"p", 0.9},
             {"s0", "s5"},
             {"theta1", 2.0},
             {"theta2", 1.0},
             {"ns", {{"theta1", 2.0}, {"theta2", 0.8}, {"centre", {0.0, 0.0}}}},
             {"seed", 6},
             {"grid", {{"nx", 3}, {"ny", 3}}}};
    cmd_simulate(cfg, opts_at(tmp.sub("out")));
    const auto [obs, sites] = load_observations(tmp.sub("out") + "/observations.csv",
                                                tmp.sub("out") + "/sites.csv");
    CHECK(obs.d() == 9);

    json br{{"kind", "br"},       {"n", 2},
            {"lambda", 2.0},      {"kappa", 0.8},
            {"centre", {0.0, 0.0}}, {"seed", 7},
            {"grid", {{"nx", 3}, {"ny", 3}}}, {"render", {{"nx", 12}, {"ny", 12}}}};
    cmd_simulate(br, opts_at(tmp.sub("render")));
    const std::string render = slurp(tmp.sub("render") + "/render.csv");
    CHECK(render.rfind("x,y,frechet,gumbel", 0) == 0);
    CHECK(std::count(render.begin(), render.end(), '\n') == 145);  // header + 144 cells
}

TEST_CASE("cmd_deform end to end: outputs, determinism, config errors") {
    TempDir tmp("deform");
    json sim{{"kind", "br"},   {"n", 250},
             {"lambda", 2.0},  {"kappa", 0.8},
             {"centre", {0.0, 0.0}}, {"seed", 9},
             {"grid", {{"nx", 4}, {"ny", 4}}}};
    cmd_simulate(sim, opts_at(tmp.sub("data")));

    json cfg{{"observations", tmp.sub("data") + "/observations.csv"},
             {"sites", tmp.sub("data") + "/sites.csv"},
             {"method", "chi_br"},
             {"q", 0.9},
             {"m0", 3},
             {"m_star", 4},
             {"seed", 3},
             {"optimizer", {{"max_evals", 800}, {"xtol", 1e-5}, {"restarts", 1}}}};
    cmd_deform(cfg, opts_at(tmp.sub("run1")));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/deformation.json"));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/d_sites.csv"));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/d_sites_unit.csv"));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/chi_g.csv"));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/chi_d.csv"));
    CHECK(std::filesystem::exists(tmp.sub("run1") + "/stages.csv"));

    // Rescaled coordinates live in the unit square.
    const SiteSet unit = load_sites(tmp.sub("run1") + "/d_sites_unit.csv");
    for (const auto& s : unit.sites()) {
        CHECK(s.x >= -1e-12);
        CHECK(s.x <= 1.0 + 1e-12);
        CHECK(s.y >= -1e-12);
        CHECK(s.y <= 1.0 + 1e-12);
    }

    // Determinism: identical bytes on a rerun with the same seed.
    cmd_deform(cfg, opts_at(tmp.sub("run2")));
    CHECK(slurp(tmp.sub("run1") + "/deformation.json") ==
          slurp(tmp.sub("run2") + "/deformation.json"));

    // The deformation tightens the dependence scatter around the fitted
    // curve on non-stationary data.
    std::ifstream jin(tmp.sub("run1") + "/deformation.json");
    json report;
    jin >> report;
    CHECK(report.at("rms_after").get<double>() < report.at("rms_before").get<double>());
    CHECK(report.at("bijective").get<bool>());

    json bad = cfg;
    bad["m_star"] = 99;
    CHECK_THROWS_AS(cmd_deform(bad, opts_at(tmp.sub("bad"))), config_error);
}

TEST_CASE("cmd_fit: four-row report and block validation") {
    TempDir tmp("fit");
    json sim{{"kind", "br"}, {"n", 200}, {"lambda", 1.0}, {"kappa", 1.0}, {"seed", 21},
             {"grid", {{"nx", 3}, {"ny", 3}}}};
    cmd_simulate(sim, opts_at(tmp.sub("data")));
    // Reuse the G sites as a stand-in D plane to exercise both planes.
    std::filesystem::copy_file(tmp.sub("data") + "/sites.csv", tmp.sub("data") + "/d_sites.csv");

    json cfg{{"observations", tmp.sub("data") + "/observations.csv"},
             {"sites", tmp.sub("data") + "/sites.csv"},
             {"d_sites", tmp.sub("data") + "/d_sites.csv"},
             {"families", {"br", "ibr"}},
             {"planes", {"g", "d"}},
             {"u_quantile", 0.9},
             {"block_b", 1}};
    cmd_fit(cfg, opts_at(tmp.sub("out")));

    const std::string table = slurp(tmp.sub("out") + "/fits.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 5);  // header + 4 rows

    std::ifstream jin(tmp.sub("out") + "/fits.json");
    json reports;
    jin >> reports;
    CHECK(reports.size() == 4);
    for (const auto& r : reports) {
        CHECK(r.at("claic").get<double>() >= 2.0 * r.at("ncll").get<double>() - 1e-6);
    }

    json bad = cfg;
    bad["block_b"] = 200;
    CHECK_THROWS_AS(cmd_fit(bad, opts_at(tmp.sub("bad"))), config_error);
}

TEST_CASE("cmd_diagnose: outputs and missing-file error") {
    TempDir tmp("diag");
    json sim{{"kind", "br"}, {"n", 300}, {"lambda", 1.0}, {"kappa", 1.0}, {"seed", 33},
             {"grid", {{"nx", 3}, {"ny", 4}}}};
    cmd_simulate(sim, opts_at(tmp.sub("data")));
    json fit_cfg{{"observations", tmp.sub("data") + "/observations.csv"},
                 {"sites", tmp.sub("data") + "/sites.csv"},
                 {"families", {"br"}},
                 {"planes", {"g"}},
                 {"u_quantile", 0.9},
                 {"block_b", 1}};
    cmd_fit(fit_cfg, opts_at(tmp.sub("fit")));

    json cfg{{"observations", tmp.sub("data") + "/observations.csv"},
             {"sites", tmp.sub("data") + "/sites.csv"},
             {"fit", tmp.sub("fit") + "/fits.json"},
             {"transect", "ns"},
             {"n_triples", 3},
             {"K", 5},
             {"n_boot", 120},
             {"q", 0.9},
             {"mc_samples", 100000},
             {"condexp_quantile", 0.9},
             {"seed", 2}};
    cmd_diagnose(cfg, opts_at(tmp.sub("out")));
    const std::string triples = slurp(tmp.sub("out") + "/triples.csv");
    CHECK(std::count(triples.begin(), triples.end(), '\n') == 4);
    const std::string ce = slurp(tmp.sub("out") + "/condexp.csv");
    // all ordered pairs on the G plane only (no d_sites given)
    CHECK(std::count(ce.begin(), ce.end(), '\n') == 1 + 12 * 11);

    json bad = cfg;
    bad["fit"] = tmp.sub("fit") + "/nope.json";
    CHECK_THROWS_AS(cmd_diagnose(bad, opts_at(tmp.sub("bad"))), config_error);
}

TEST_CASE("cmd_study: single-repetition smoke run") {
    TempDir tmp("study");
    json cfg{{"process",
              {{"kind", "br"}, {"lambda", 2.0}, {"kappa", 0.8}, {"centre", {0.0, 0.0}},
               {"n", 200}}},
             {"grid", {{"nx", 3}, {"ny", 3}}},
             {"repetitions", 1},
             {"methods", {"chi_br", "corr_frob"}},
             {"family", "br"},
             {"q", 0.9},
             {"u_quantile", 0.9},
             {"block_b", 1},
             {"m0", 3},
             {"m_star", 4},
             {"optimizer", {{"max_evals", 500}}},
             {"seed", 77}};
    cmd_study(cfg, opts_at(tmp.sub("out")));

    const std::string table = slurp(tmp.sub("out") + "/study_table.csv");
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);  // header + none + 2 methods
    const std::string reps = slurp(tmp.sub("out") + "/study_reps.csv");
    CHECK(std::count(reps.begin(), reps.end(), '\n') == 4);  // header + 3 outcome rows

    // Exactly one winner flagged.
    std::istringstream in(reps);
    std::string line;
    std::getline(in, line);
    int winners = 0;
    while (std::getline(in, line)) {
        const auto cells = split_csv_line(line);
        REQUIRE(cells.size() == 9);
        winners += cells[7] == "1";
    }
    CHECK(winners == 1);
}
