#pragma once

// Equilibrium-model experiments: selection is the only active operator and
// the population carries just two fitness levels, one planted best solution
// and lambda - 1 null solutions. Monitoring the count N(t) of best copies
// gives growth curves and takeover times as a function of beta.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cealab/engine.hpp"
#include "cealab/grid.hpp"
#include "cealab/parallel.hpp"
#include "cealab/rng.hpp"
#include "cealab/stats.hpp"

namespace cealab {

/// Degenerate problem for takeover studies: the genotype is its own fitness
/// (0 or 1, maximized) and the variation operators are inert.
struct TwoLevelModel {
    using Genotype = std::uint8_t;
    static constexpr bool kMaximize = true;

    double evaluate(Genotype g) const noexcept { return double(g); }
    Genotype random_genotype(Rng&) const noexcept { return 0; }
    std::pair<Genotype, Genotype> crossover(Genotype a, Genotype b, Rng&) const noexcept {
        return {a, b};
    }
    Genotype mutate(Genotype g, Rng&) const noexcept { return g; }
};

struct TakeoverConfig {
    GridShape shape{64, 64};
    double beta = 0.2;
    std::uint32_t replicates = 100;
    std::uint32_t max_generations = 0; // 0: default cap of 10 * lambda
    std::uint64_t seed = 0;
    std::optional<CellIndex> start_cell; // fixed placement; random when unset
    unsigned workers = 1;

    std::uint32_t cap() const noexcept {
        return max_generations != 0 ? max_generations : 10u * shape.size();
    }
};

/// N(t) trajectory of one replicate. takeover_time is the first t with
/// N(t) = lambda, unset when the cap was reached first (always at beta = 1).
/// wrap_generation is the first t at which the occupied front reaches the
/// opposite side of the torus along either axis.
struct GrowthCurve {
    std::vector<std::uint32_t> counts; // counts[t] = N(t), counts[0] = 1
    std::optional<std::uint32_t> takeover_time;
    std::optional<std::uint32_t> wrap_generation;
    CellIndex start_cell = 0;

    std::uint32_t final_count() const noexcept { return counts.back(); }
};

/// First differences N(t+1) - N(t) (signed only for generality; elitism
/// makes them non-negative).
inline std::vector<std::int64_t> growth_rate(const GrowthCurve& curve) {
    std::vector<std::int64_t> d;
    if (curve.counts.size() < 2)
        return d;
    d.reserve(curve.counts.size() - 1);
    for (std::size_t t = 1; t < curve.counts.size(); ++t)
        d.push_back(std::int64_t(curve.counts[t]) - std::int64_t(curve.counts[t - 1]));
    return d;
}

/// One takeover replicate: plant a single best solution and run selection
/// with elitist replacement until the grid is conquered or the cap hits.
inline GrowthCurve takeover_run(const TakeoverConfig& cfg, std::uint64_t run_seed) {
    EngineConfig ecfg;
    ecfg.beta = cfg.beta;
    ecfg.max_generations = cfg.cap();
    ecfg.crossover_rate = 1.0; // inert with TwoLevelModel; kept at paper default
    ecfg.seed = run_seed;
    CellularEngine<TwoLevelModel> engine(TwoLevelModel{}, cfg.shape, ecfg);

    const CellIndex start =
        cfg.start_cell.value_or(static_cast<CellIndex>(
            Rng::substream(run_seed, {stream::kInitStream, 0xbe57}).index(cfg.shape.size())));

    GrowthCurve curve;
    curve.start_cell = start;
    curve.counts.push_back(1);

    const std::uint32_t lambda = cfg.shape.size();
    const std::uint32_t half_h = cfg.shape.height / 2;
    const std::uint32_t half_w = cfg.shape.width / 2;
    const std::uint32_t start_row = cfg.shape.row_of(start);
    const std::uint32_t start_col = cfg.shape.col_of(start);

    engine.run(
        [start](CellIndex c, Rng&) { return std::uint8_t(c == start ? 1 : 0); },
        [&](std::uint32_t t, const Population<std::uint8_t>& pop, const StepStats&) {
            std::uint32_t n = 0;
            std::uint32_t max_dr = 0, max_dc = 0;
            for (CellIndex c = 0; c < lambda; ++c) {
                if (pop.cells[c] == 0)
                    continue;
                ++n;
                const auto axis = [](std::uint32_t a, std::uint32_t b, std::uint32_t extent) {
                    const std::uint32_t d = a > b ? a - b : b - a;
                    return std::min(d, extent - d);
                };
                max_dr = std::max(max_dr, axis(pop.shape.row_of(c), start_row, pop.shape.height));
                max_dc = std::max(max_dc, axis(pop.shape.col_of(c), start_col, pop.shape.width));
            }
            curve.counts.push_back(n);
            if (!curve.wrap_generation && (max_dr >= half_h || max_dc >= half_w))
                curve.wrap_generation = t;
            if (n == lambda) {
                curve.takeover_time = t;
                return false;
            }
            return true;
        });
    return curve;
}

struct TakeoverSweepRow {
    double beta;
    std::uint32_t replicates;
    std::uint32_t undefined_count; // replicates that hit the cap
    double mean_takeover;          // over defined replicates
    double sd_takeover;
};

struct TakeoverSweepResult {
    std::vector<TakeoverSweepRow> rows;
    std::vector<std::vector<GrowthCurve>> curves; // per beta, per replicate
};

/// Average takeover time per beta over replicates (the takeover-vs-beta
/// summary). Curves are kept so callers can derive growth-rate series.
/// (beta, replicate) cells run as independent jobs on cfg.workers threads;
/// results do not depend on the worker count.
inline TakeoverSweepResult takeover_sweep(const std::vector<double>& betas, TakeoverConfig cfg) {
    TakeoverSweepResult result;
    result.curves.assign(betas.size(), {});
    for (auto& per_beta : result.curves)
        per_beta.resize(cfg.replicates);

    parallel_for(betas.size() * cfg.replicates, cfg.workers, [&](std::size_t job) {
        const std::size_t b = job / cfg.replicates;
        const auto r = std::uint32_t(job % cfg.replicates);
        TakeoverConfig local = cfg;
        local.beta = betas[b];
        result.curves[b][r] = takeover_run(local, replicate_seed(cfg.seed, betas[b], r));
    });

    result.rows.reserve(betas.size());
    for (std::size_t b = 0; b < betas.size(); ++b) {
        std::vector<double> times;
        std::uint32_t undefined = 0;
        for (const auto& curve : result.curves[b]) {
            if (curve.takeover_time)
                times.push_back(double(*curve.takeover_time));
            else
                ++undefined;
        }
        const auto s = stats::summarize(times);
        result.rows.push_back({betas[b], cfg.replicates, undefined, s.mean, s.sd});
    }
    return result;
}

/// Mean N(t) and mean growth rate across replicates, padded with lambda
/// (a conquered grid stays conquered) so curves of different lengths align.
struct AveragedGrowth {
    std::vector<double> mean_counts; // index t
    std::vector<double> mean_rates;  // index t-1 = rate into generation t
    double mean_wrap_generation = 0.0;
    std::uint32_t wrap_samples = 0;
};

inline AveragedGrowth average_growth(const std::vector<GrowthCurve>& curves,
                                     std::uint32_t lambda) {
    AveragedGrowth avg;
    std::size_t horizon = 0;
    for (const auto& c : curves)
        horizon = std::max(horizon, c.counts.size());
    if (horizon == 0)
        return avg;
    avg.mean_counts.assign(horizon, 0.0);
    for (const auto& c : curves) {
        for (std::size_t t = 0; t < horizon; ++t)
            avg.mean_counts[t] +=
                t < c.counts.size() ? double(c.counts[t]) : double(lambda);
        if (c.wrap_generation) {
            avg.mean_wrap_generation += double(*c.wrap_generation);
            ++avg.wrap_samples;
        }
    }
    for (auto& v : avg.mean_counts)
        v /= double(curves.size());
    if (avg.wrap_samples > 0)
        avg.mean_wrap_generation /= double(avg.wrap_samples);
    avg.mean_rates.reserve(horizon - 1);
    for (std::size_t t = 1; t < horizon; ++t)
        avg.mean_rates.push_back(avg.mean_counts[t] - avg.mean_counts[t - 1]);
    return avg;
}

} // namespace cealab
