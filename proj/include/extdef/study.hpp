#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "extdef/deform.hpp"
#include "extdef/fit.hpp"
#include "extdef/simulate.hpp"

namespace extdef {

/// One simulation-study configuration: simulate R samples of a process,
/// deform each with every method plus the no-deformation baseline, fit the
/// designated dependence family on each plane, and rank methods by CLAIC.
struct StudyConfig {
    ProcessSpec process;
    int repetitions = 10;
    std::vector<DeformMethod> methods = {DeformMethod::ChiBR, DeformMethod::ChiIBR,
                                         DeformMethod::CorrFrob, DeformMethod::SmithGauss};
    Family family = Family::BR;
    double q = 0.9;  // chi threshold used inside the deformations
    double u_quantile = 0.9;
    long block_b = 1;
    int m0 = 3;
    int m_star = 0;  // 0 = quarter of the sites
    OptimizerSettings optimizer;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

struct MethodOutcome {
    std::string method;  // "none" or a deformation method name
    double claic = 0.0;
    double ncll = 0.0;
    double lambda_hat = 0.0;
    double kappa_hat = 0.0;
    double deform_objective = 0.0;  // 0 for "none"
    bool deform_warning = false;
};

struct RepetitionResult {
    int rep = 0;
    std::vector<MethodOutcome> outcomes;  // baseline first, then methods in order
    std::string winner;
    bool stages_monotone = true;  // accepted stage objectives non-increasing
};

struct StudyResult {
    std::vector<RepetitionResult> reps;
    std::map<std::string, int> wins;
    std::map<std::string, double> proportions;
};

/// Runs the full study. The per-repetition anchor sequence is derived from
/// the repetition seed, identical across methods. The callback fires as
/// each repetition completes (under a lock when workers > 1).
StudyResult run_study(const SiteSet& sites, const StudyConfig& config,
                      const std::function<void(const RepetitionResult&)>& on_rep = {});

}  // namespace extdef
