#include "extdef/study.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "extdef/errors.hpp"
#include "extdef/rng.hpp"

namespace extdef {

namespace {

RepetitionResult run_repetition(const SiteSet& sites, const StudyConfig& config, int rep) {
    const std::uint64_t rep_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(rep) + 1);
    ProcessSpec spec = config.process;
    spec.seed = rep_seed;
    const ObservationMatrix obs = simulate(sites, spec).as_raw();

    RepetitionResult result;
    result.rep = rep;

    const auto fit_on = [&](const SiteSet& plane_sites) {
        ModelFit fit = fit_pairwise_model(obs, plane_sites, config.family, config.u_quantile);
        fit.claic = claic(fit, config.block_b);
        return fit;
    };

    {
        const ModelFit baseline = fit_on(sites);
        result.outcomes.push_back({"none", baseline.claic, baseline.ncll, baseline.lambda_hat,
                                   baseline.kappa_hat, 0.0, false});
    }

    DeformConfig dc;
    dc.q = config.q;
    dc.m0 = config.m0;
    dc.m_star = config.m_star;
    dc.seed = derive_seed(rep_seed, 0xA17C0);  // anchor stream, shared by all methods
    dc.optimizer = config.optimizer;

    for (const DeformMethod method : config.methods) {
        dc.method = method;
        const DeformationResult def = fit_deformation(obs, sites, dc);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& st : def.stages) {
            if (!st.bijective) continue;
            if (st.objective > prev + 1e-9 * std::max(1.0, std::fabs(prev)))
                result.stages_monotone = false;
            prev = st.objective;
        }
        const ModelFit fit = fit_on(def.d_sites);
        result.outcomes.push_back({to_string(method), fit.claic, fit.ncll, fit.lambda_hat,
                                   fit.kappa_hat, def.objective, def.warning});
    }

    result.winner = result.outcomes[0].method;
    double best = result.outcomes[0].claic;
    for (const auto& o : result.outcomes) {
        if (o.claic < best) {
            best = o.claic;
            result.winner = o.method;
        }
    }
    return result;
}

}  // namespace

StudyResult run_study(const SiteSet& sites, const StudyConfig& config,
                      const std::function<void(const RepetitionResult&)>& on_rep) {
    if (config.repetitions < 1) throw config_error("run_study: repetitions must be >= 1");
    StudyResult result;
    result.reps.resize(static_cast<std::size_t>(config.repetitions));

    const int workers = std::max(1, config.workers);
    std::mutex mu;
    std::atomic<int> next{0};
    std::exception_ptr failure;

    const auto worker = [&]() {
        while (true) {
            const int rep = next.fetch_add(1);
            if (rep >= config.repetitions) return;
            try {
                RepetitionResult r = run_repetition(sites, config, rep);
                std::lock_guard<std::mutex> lock(mu);
                if (on_rep) on_rep(r);
                result.reps[static_cast<std::size_t>(rep)] = std::move(r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next.store(config.repetitions);
                return;
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.wins["none"] = 0;
    for (const DeformMethod m : config.methods) result.wins[to_string(m)] = 0;
    for (const auto& r : result.reps) ++result.wins[r.winner];
    for (const auto& [name, count] : result.wins)
        result.proportions[name] =
            static_cast<double>(count) / static_cast<double>(config.repetitions);
    return result;
}

}  // namespace extdef
