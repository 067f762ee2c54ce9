#pragma once

// Replicated beta sweeps on a concrete problem: run the engine for every
// (beta, replicate) cell with derived seeds, aggregate final best fitness,
// and compare settings with a Mann-Whitney test.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cealab/engine.hpp"
#include "cealab/errors.hpp"
#include "cealab/grid.hpp"
#include "cealab/parallel.hpp"
#include "cealab/stats.hpp"

namespace cealab {

struct SweepSpec {
    std::vector<double> betas;
    std::uint32_t replicates = 30;
    std::uint32_t max_generations = 1500;
    double crossover_rate = 1.0;
    GridShape shape{20, 20};
    std::uint64_t base_seed = 0;
    unsigned workers = 1;

    void validate() const {
        if (betas.empty())
            throw ConfigError("sweep: need at least one beta");
        if (replicates < 2)
            throw ConfigError("sweep: need replicates >= 2 for standard deviations");
    }
};

struct SweepRun {
    double beta;
    std::uint32_t replicate;
    std::uint64_t seed;
    double final_fitness;
    std::uint32_t generations_to_best;
};

struct SweepSummaryRow {
    double beta;
    std::size_t n;
    double mean;
    double sd;
    double best; // best final fitness across replicates under the problem's sense
};

struct SweepResult {
    std::vector<SweepRun> runs; // ordered by (beta index, replicate)

    std::vector<double> final_values(double beta) const {
        std::vector<double> v;
        for (const auto& r : runs)
            if (r.beta == beta)
                v.push_back(r.final_fitness);
        return v;
    }
};

/// Per-beta aggregates recomputed from the per-run values.
inline std::vector<SweepSummaryRow> summarize_sweep(const SweepResult& result, bool maximize) {
    std::vector<double> betas;
    for (const auto& r : result.runs)
        if (std::find(betas.begin(), betas.end(), r.beta) == betas.end())
            betas.push_back(r.beta);
    std::vector<SweepSummaryRow> rows;
    rows.reserve(betas.size());
    for (const double beta : betas) {
        const auto values = result.final_values(beta);
        const auto s = stats::summarize(values);
        const double best = maximize ? *std::max_element(values.begin(), values.end())
                                     : *std::min_element(values.begin(), values.end());
        rows.push_back({beta, s.n, s.mean, s.sd, best});
    }
    return rows;
}

/// Skip-list support for resumable sweeps: cells already on disk are kept
/// verbatim and not recomputed.
struct SweepCell {
    double beta;
    std::uint32_t replicate;
    bool operator==(const SweepCell&) const = default;
};

/// on_complete, when set, is invoked for every freshly computed run; with
/// several workers it runs concurrently, so the callback must synchronize.
template <EvolutionModel Model>
SweepResult run_sweep(const Model& model, const SweepSpec& spec,
                      std::span<const SweepRun> already_done = {},
                      const std::function<void(const SweepRun&)>& on_complete = {}) {
    spec.validate();
    struct Job {
        std::size_t slot;
        double beta;
        std::uint32_t replicate;
    };
    std::vector<Job> jobs;
    SweepResult result;
    result.runs.resize(spec.betas.size() * spec.replicates);
    std::size_t slot = 0;
    for (const double beta : spec.betas)
        for (std::uint32_t r = 0; r < spec.replicates; ++r, ++slot) {
            const auto done = std::find_if(already_done.begin(), already_done.end(),
                                           [&](const SweepRun& d) {
                                               return d.beta == beta && d.replicate == r;
                                           });
            if (done != already_done.end())
                result.runs[slot] = *done;
            else
                jobs.push_back({slot, beta, r});
        }

    parallel_for(jobs.size(), spec.workers, [&](std::size_t j) {
        const Job& job = jobs[j];
        EngineConfig cfg;
        cfg.beta = job.beta;
        cfg.max_generations = spec.max_generations;
        cfg.crossover_rate = spec.crossover_rate;
        cfg.seed = replicate_seed(spec.base_seed, job.beta, job.replicate);
        CellularEngine<Model> engine(model, spec.shape, cfg);
        const auto rec = engine.run();
        result.runs[job.slot] =
            SweepRun{job.beta, job.replicate, cfg.seed, rec.final_best(), rec.generations_to_best()};
        if (on_complete)
            on_complete(result.runs[job.slot]);
    });
    return result;
}

struct SignificanceReport {
    double beta_a;
    double beta_b;
    std::size_t n_a;
    std::size_t n_b;
    double u;       // Mann-Whitney U of the beta_a sample
    double p_value; // two-sided
    int direction;  // +1: beta_a better, -1: beta_b better, 0: none
};

/// Two-sample Mann-Whitney comparison of the final-fitness distributions of
/// two sweep settings, with the winning direction under the problem's sense.
inline SignificanceReport compare_settings(const SweepResult& result, double beta_a, double beta_b,
                                           bool maximize) {
    const auto a = result.final_values(beta_a);
    const auto b = result.final_values(beta_b);
    if (a.size() < 2 || b.size() < 2)
        throw ConfigError("compare_settings: need at least 2 replicates per beta (beta_a has " +
                          std::to_string(a.size()) + ", beta_b has " + std::to_string(b.size()) +
                          ")");
    const auto mw = stats::mann_whitney(a, b);
    // mw.direction > 0 means the beta_a sample tends to larger values
    int direction = 0;
    if (mw.direction != 0)
        direction = (mw.direction > 0) == maximize ? +1 : -1;
    return {beta_a, beta_b, a.size(), b.size(), mw.u_a, mw.p_value, direction};
}

} // namespace cealab
