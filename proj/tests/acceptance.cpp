// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code 0 iff no failures
// (waived criteria do not fail).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "extdef/csv_io.hpp"
#include "extdef/dependence.hpp"
#include "extdef/diagnostics.hpp"
#include "extdef/fit.hpp"
#include "extdef/rng.hpp"
#include "extdef/simulate.hpp"
#include "extdef/study.hpp"
#include "extdef/tps.hpp"

using namespace extdef;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s  [%s]\n", number, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_waived(int number, const std::string& name, const std::string& detail) {
    std::printf("criterion %d (%s): WAIVED  [%s]\n", number, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

struct StudyOutcome {
    StudyResult result;
    int monotone_reps = 0;
    int total_reps = 0;
};

StudyOutcome run_table_study(const SiteSet& sites, const ProcessSpec& process, Family family,
                             std::uint64_t seed) {
    StudyConfig config;
    config.process = process;
    config.repetitions = 10;
    config.family = family;
    config.q = 0.9;
    config.u_quantile = 0.9;
    config.block_b = 1;
    config.m0 = 3;
    config.m_star = 0;  // quarter of the sites
    config.master_seed = seed;
    config.workers = 1;

    StudyOutcome out;
    out.result = run_study(sites, config, [&](const RepetitionResult& r) {
        std::printf("  rep %d winner=%s monotone=%d\n", r.rep, r.winner.c_str(),
                    r.stages_monotone ? 1 : 0);
        std::fflush(stdout);
    });
    out.total_reps = config.repetitions;
    for (const auto& r : out.result.reps)
        if (r.stages_monotone) ++out.monotone_reps;
    return out;
}

// ---------------------------------------------------------------- criteria

StudyOutcome criterion1_table1() {
    std::printf("running criterion 1 study (non-stationary BR, 64 sites, R=10)...\n");
    std::fflush(stdout);
    const SiteSet sites = grid_sites(8, 8);
    ProcessSpec process;
    process.kind = ProcessKind::BR;
    process.vario = {2.0, 0.8, Eigen::Vector2d(0.0, 0.0)};
    process.n = 1000;
    const StudyOutcome out = run_table_study(sites, process, Family::BR, 20260810);
    const int none_wins = out.result.wins.at("none");
    report(1, "scaled Table-1 study", none_wins == 0,
           "no-deformation wins " + std::to_string(none_wins) + "/10 (must be 0)");
    return out;
}

StudyOutcome criterion2_table3() {
    std::printf("running criterion 2 study (Gaussian mixture, 81 sites, R=10)...\n");
    std::fflush(stdout);
    const SiteSet sites = grid_sites(9, 9);
    ProcessSpec process;
    process.kind = ProcessKind::GaussianMixture;
    process.corr = {2.0, 1.0, std::nullopt};
    process.corr_ns = {2.0, 0.8, Eigen::Vector2d(0.0, 0.0)};
    process.p = 0.9;
    process.s0_id = "s41";  // grid point at the origin
    process.n = 1000;
    const StudyOutcome out = run_table_study(sites, process, Family::IBR, 20260811);
    const int chi_wins = out.result.wins.at("chi_br") + out.result.wins.at("chi_ibr");
    report(2, "scaled Table-3 study", chi_wins >= 8,
           "chi-method wins " + std::to_string(chi_wins) + "/10 (need >= 8)");
    return out;
}

void criterion3_simulator_fidelity() {
    const SiteSet sites = grid_sites(4, 4);
    const int n = 5000;
    const double q = 0.95;
    const ObservationMatrix obs = simulate_br(sites, {1.0, 1.0, std::nullopt}, n, 31415);
    const DependenceMatrix chi = empirical_chi_matrix(obs.as_raw(), q);
    const double count = (1.0 - q) * n;
    int within = 0, total = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const double theory = chi_br(sites.distance(i, j), 1.0, 1.0);
            const double se = std::sqrt(std::max(theory * (1.0 - theory), 1e-4) / count);
            ++total;
            if (std::fabs(chi.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                          theory) <= 3.0 * se)
                ++within;
        }
    }
    report(3, "simulator fidelity", within >= (total * 9 + 9) / 10,
           std::to_string(within) + "/" + std::to_string(total) +
               " pairs within 3 MC standard errors (need >= 90%)");
}

void criterion4_parameter_recovery() {
    const SiteSet sites = grid_sites(4, 4);
    double sum_lambda = 0.0, sum_kappa = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        const ObservationMatrix obs =
            simulate_br(sites, {1.0, 1.0, std::nullopt}, 1000, 5000 + static_cast<std::uint64_t>(s))
                .as_raw();
        const ModelFit fit = fit_pairwise_model(obs, sites, Family::BR, 0.9);
        sum_lambda += fit.lambda_hat;
        sum_kappa += fit.kappa_hat;
    }
    const double bias_lambda = sum_lambda / seeds - 1.0;
    const double bias_kappa = sum_kappa / seeds - 1.0;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "mean bias lambda=%.3f kappa=%.3f (|bias| <= 0.15)",
                  bias_lambda, bias_kappa);
    report(4, "parameter recovery", std::fabs(bias_lambda) <= 0.15 && std::fabs(bias_kappa) <= 0.15,
           detail);
}

void criterion5_max_mixture_scaling() {
    // Pairwise separations of at least 1.4 keep the Gaussian component's
    // finite-threshold chi below the Monte-Carlo noise at q = 0.98.
    const SiteSet sites = grid_sites(3, 2, -1.4, 1.4, -0.7, 0.7);
    const VariogramSpec vario{2.0, 0.8, Eigen::Vector2d(0.0, 0.0)};
    const MaternSpec corr{1.0, 1.2, std::nullopt};
    const double omega = 0.3, q = 0.98;
    const int n = 10000;
    const std::uint64_t seed = 2718;
    const ObservationMatrix h = simulate_max_mixture(sites, omega, vario, corr, n, seed);
    const ObservationMatrix x = simulate_br(sites, vario, n, derive_seed(seed, 1));
    const DependenceMatrix chi_h = empirical_chi_matrix(h.as_raw(), q);
    const DependenceMatrix chi_x = empirical_chi_matrix(x.as_raw(), q);
    const double count = (1.0 - q) * n;
    int within = 0, total = 0;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < chi_h.d(); ++i) {
        for (Eigen::Index j = i + 1; j < chi_h.d(); ++j) {
            const double ch = chi_h.values(i, j), cx = chi_x.values(i, j);
            const double se = std::sqrt(std::max(ch * (1.0 - ch), 1e-4) / count) +
                              omega * std::sqrt(std::max(cx * (1.0 - cx), 1e-4) / count);
            const double gap = std::fabs(ch - omega * cx) / se;
            worst = std::max(worst, gap);
            ++total;
            if (gap <= 3.0) ++within;
        }
    }
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%d/%d pairs within 3 SE, worst %.2f SE", within, total,
                  worst);
    report(5, "max-mixture chi scaling", within == total, detail);
}

void criterion6_identities() {
    bool pass = true;
    std::string detail = "all identities hold";

    // Matern theta2 = 1/2 closed form to 1e-12.
    for (double h = 0.0; h <= 12.0; h += 0.093) {
        for (double theta1 : {0.5, 1.0, 2.3}) {
            const double expect = std::exp(-std::sqrt(2.0) * h / theta1);
            if (std::fabs(matern_corr(h, theta1, 0.5) - expect) > 1e-12) {
                pass = false;
                detail = "Matern(0.5) closed form violated";
            }
        }
    }

    // BR exponent homogeneity to 1e-10 relative.
    Rng rng(606);
    for (int trial = 0; trial < 500 && pass; ++trial) {
        const double z1 = 0.05 + 4.0 * rng.uniform();
        const double z2 = 0.05 + 4.0 * rng.uniform();
        const double a = 0.05 + 3.0 * rng.uniform();
        const double t = 0.1 + 5.0 * rng.uniform();
        const double lhs = br_exponent(t * z1, t * z2, a);
        const double rhs = br_exponent(z1, z2, a) / t;
        if (std::fabs(lhs - rhs) > 1e-10 * std::fabs(rhs)) {
            pass = false;
            detail = "BR exponent homogeneity violated";
        }
    }

    // Inverted-BR inclusion-exclusion identity to 1e-10.
    for (double hh : {0.2, 0.9, 2.1}) {
        for (double u : {0.5, 1.4, 3.2}) {
            const double theta = theta_from_a(br_dependence_a(hh, 1.1, 0.7));
            const double direct = 1.0 - 2.0 * std::exp(-u) + std::exp(-theta * u);
            if (std::fabs(ibr_pair_cdf(u, u, 1.1, 0.7, hh) - direct) > 1e-10) {
                pass = false;
                detail = "IBR inclusion-exclusion identity violated";
            }
        }
    }

    // Affine Jacobian determinant b1^2 b2^2 (1 - rho^2) from the fold
    // checker's analytic Jacobian.
    const SiteSet sites({{"a", 0, 0}, {"b", 1, 0}, {"c", 0, 1}, {"d", 1, 1}}, Plane::G);
    for (double rho : {-0.8, -0.2, 0.0, 0.4, 0.9}) {
        SplineParams p;
        p.b1 = 1.3;
        p.b2 = 0.7;
        p.rho = rho;
        p.delta1.resize(0);
        p.delta2.resize(0);
        const double expect = p.b1 * p.b1 * p.b2 * p.b2 * (1.0 - rho * rho);
        if (std::fabs(jacobian_determinant(p, sites, 0.37, 0.81) - expect) > 1e-12) {
            pass = false;
            detail = "affine Jacobian determinant mismatch";
        }
    }

    report(6, "special-function and formula identities", pass, detail);
}

void criterion7_monotonicity(const StudyOutcome& s1, const StudyOutcome& s2) {
    const int good = s1.monotone_reps + s2.monotone_reps;
    const int total = s1.total_reps + s2.total_reps;
    report(7, "deformation monotonicity", good == total,
           std::to_string(good) + "/" + std::to_string(total) +
               " study repetitions with non-increasing stage objectives (need all)");
}

void criterion8_diagnostics() {
    // Triple chi under independence.
    const double q = 0.8;
    const double analytic = (1.0 - q) * (1.0 - q);
    bool pass = true;
    std::string detail;
    {
        Rng rng(1001);
        const Eigen::Index n = 40000;
        ObservationMatrix obs;
        obs.scale = Scale::Raw;
        obs.site_ids = {"a", "b", "c"};
        obs.values.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) obs.values(i, j) = rng.normal();
        const double est = triple_chi_empirical(obs, 0, 1, 2, q);
        const double se = std::sqrt(analytic / (static_cast<double>(n) * (1.0 - q)));
        if (std::fabs(est - analytic) > 3.0 * se) {
            pass = false;
            detail = "independence triple chi outside 3 SE";
        }
    }

    // Bootstrap interval coverage over 200 iid repetitions.
    const int reps = 200;
    int covered = 0;
    std::vector<int> flags(reps, 0);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
        Rng rng(derive_seed(424242, static_cast<std::uint64_t>(r)));
        const Eigen::Index n = 2000;
        Eigen::MatrixXd cols(n, 3);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) cols(i, j) = rng.normal();
        const auto [lo, hi] = stationary_bootstrap_ci(cols, 1.0, 500, q, {0.025, 0.975},
                                                      derive_seed(515151, static_cast<std::uint64_t>(r)));
        flags[static_cast<std::size_t>(r)] = (lo <= analytic && analytic <= hi) ? 1 : 0;
    }
    for (const int f : flags) covered += f;
    const double coverage = static_cast<double>(covered) / reps;
    if (std::fabs(coverage - 0.95) > 0.05) {
        pass = false;
        detail = "bootstrap coverage " + std::to_string(coverage) + " outside 0.95 +- 0.05";
    }
    if (pass)
        detail = "independence triple chi within 3 SE; bootstrap coverage " +
                 std::to_string(coverage);
    report(8, "diagnostics", pass, detail);
}

void criterion9_case_study() {
    const char* env = std::getenv("EXTDEF_AUS_DATA");
    const std::string dir = env ? env : "data/australia";
    const std::string obs_path = dir + "/observations.csv";
    const std::string sites_path = dir + "/sites.csv";
    if (!std::filesystem::exists(obs_path) || !std::filesystem::exists(sites_path)) {
        report_waived(9, "case-study regression",
                      "Australian temperature dataset not available (set EXTDEF_AUS_DATA)");
        return;
    }
    // Deform with chi_br at q = 0.98 (great-earth distances), fit BR on both
    // planes with the 98% threshold and seasonal blocks, then compare against
    // the reported D-plane estimates.
    const auto [obs, g_sites] = load_observations(obs_path, sites_path, Metric::GreatEarth);
    DeformConfig dc;
    dc.method = DeformMethod::ChiBR;
    dc.q = 0.98;
    dc.m_star = static_cast<int>((g_sites.size() + 2) / 4);
    dc.seed = 1;
    const DeformationResult def = fit_deformation(obs, g_sites, dc);

    const long season = 90;  // DJF season length in days
    ModelFit fit_g = fit_pairwise_model(obs, g_sites, Family::BR, 0.98);
    fit_g.claic = claic(fit_g, std::min<long>(season, obs.n() / 2));
    ModelFit fit_d = fit_pairwise_model(obs, def.d_sites, Family::BR, 0.98);
    fit_d.claic = claic(fit_d, std::min<long>(season, obs.n() / 2));

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "D-plane (kappa,lambda)=(%.2f,%.2f) vs (1.71,0.95); CLAIC D %.4g vs G %.4g",
                  fit_d.kappa_hat, fit_d.lambda_hat, fit_d.claic, fit_g.claic);
    const bool pass = std::fabs(fit_d.kappa_hat - 1.71) <= 0.25 &&
                      std::fabs(fit_d.lambda_hat - 0.95) <= 0.5 && fit_d.claic < fit_g.claic;
    report(9, "case-study regression", pass, detail);
}

}  // namespace

int main() {
    std::printf("=== acceptance suite ===\n");
    criterion6_identities();
    criterion3_simulator_fidelity();
    criterion4_parameter_recovery();
    criterion5_max_mixture_scaling();
    criterion8_diagnostics();
    const StudyOutcome s1 = criterion1_table1();
    const StudyOutcome s2 = criterion2_table3();
    criterion7_monotonicity(s1, s2);
    criterion9_case_study();
    std::printf("=== %s ===\n", g_failures == 0 ? "ALL CRITERIA SATISFIED" : "FAILURES PRESENT");
    return g_failures > 0 ? 1 : 0;
}
