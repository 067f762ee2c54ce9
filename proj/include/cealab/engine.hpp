#pragma once

// Synchronous cellular evolutionary engine with elitist replacement and
// mating-type instrumentation.
//
// One generation, for every cell i of the toroidal grid:
//   1. two parents are chosen by centric selection on i's Von Neumann
//      neighborhood (reading only the pre-step population);
//   2. if both selections landed on the same cell, crossover is skipped and
//      that genotype is duplicated; otherwise crossover is applied with
//      probability crossover_rate (parents are cloned when it is not);
//   3. both children are mutated and evaluated;
//   4. the better child replaces the incumbent in a temporary grid only if
//      it is strictly fitter; the whole grid is swapped in at the end.
//
// Each mating is classified by how many of the two selected parents carry
// the current population-best fitness (type 00/01/11; "copy of the best"
// means fitness equality, not genotype identity). A child strictly fitter
// than the pre-step population best is recorded as an improvement event
// attributed to its cell's mating type.
//
// Randomness: cell i in generation g draws from the sub-stream
// (seed, {kStepStream, g, i}); initialization uses (seed, {kInitStream, i}).
// Within a cell's stream the consumption order is: parent one (one uniform
// per candidate draw plus one 4-way pick when the draw is a neighbor),
// parent two, then the crossover coin (only when the parent cells are
// distinct), then crossover draws, then mutation draws for child one and
// child two. Results are therefore independent of cell visit order.

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cealab/errors.hpp"
#include "cealab/grid.hpp"
#include "cealab/rng.hpp"
#include "cealab/selection.hpp"

namespace cealab {

enum class MatingType : std::uint8_t { m00 = 0, m01 = 1, m11 = 2 };

inline const char* to_string(MatingType t) {
    switch (t) {
    case MatingType::m00: return "00";
    case MatingType::m01: return "01";
    default: return "11";
    }
}

/// A parent is a copy of the best iff its fitness equals the current
/// population-best fitness.
inline MatingType classify_mating(double parent_a_fitness, double parent_b_fitness,
                                  double current_best_fitness) {
    const int best_parents = int(parent_a_fitness == current_best_fitness) +
                             int(parent_b_fitness == current_best_fitness);
    return best_parents == 2 ? MatingType::m11
                             : (best_parents == 1 ? MatingType::m01 : MatingType::m00);
}

/// Per-generation mating counts; n00 + n01 + n11 = lambda always.
struct LedgerRow {
    std::uint32_t n00 = 0;
    std::uint32_t n01 = 0;
    std::uint32_t n11 = 0;

    std::uint32_t total() const noexcept { return n00 + n01 + n11; }
    void count(MatingType t) noexcept {
        switch (t) {
        case MatingType::m00: ++n00; break;
        case MatingType::m01: ++n01; break;
        case MatingType::m11: ++n11; break;
        }
    }
};

/// Mating-type counts per generation plus their running sums Sigma_ij(T).
class MatingLedger {
  public:
    void push(const LedgerRow& row) {
        rows_.push_back(row);
        totals_[0] += row.n00;
        totals_[1] += row.n01;
        totals_[2] += row.n11;
    }

    const std::vector<LedgerRow>& rows() const noexcept { return rows_; }
    std::size_t generations() const noexcept { return rows_.size(); }

    /// Cumulative counts over generations 1..horizon (all rows if horizon is larger).
    std::array<std::uint64_t, 3> sigma(std::size_t horizon) const noexcept {
        if (horizon >= rows_.size())
            return totals_;
        std::array<std::uint64_t, 3> s{0, 0, 0};
        for (std::size_t t = 0; t < horizon; ++t) {
            s[0] += rows_[t].n00;
            s[1] += rows_[t].n01;
            s[2] += rows_[t].n11;
        }
        return s;
    }

    const std::array<std::uint64_t, 3>& totals() const noexcept { return totals_; }

  private:
    std::vector<LedgerRow> rows_;
    std::array<std::uint64_t, 3> totals_{0, 0, 0};
};

/// A mating produced a child strictly fitter than the pre-step population best.
struct ImprovementEvent {
    std::uint32_t generation;
    CellIndex cell;
    MatingType mating_type;
    double old_best_fitness;
    double new_best_fitness;
};

struct EngineConfig {
    double beta = 0.2;
    std::uint32_t max_generations = 1500;
    double crossover_rate = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(beta >= 0.0 && beta <= 1.0))
            throw ConfigError("engine: beta must lie in [0,1], got " + std::to_string(beta));
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
            throw ConfigError("engine: crossover_rate must lie in [0,1], got " +
                              std::to_string(crossover_rate));
    }
};

template <typename G>
struct Population {
    GridShape shape;
    std::vector<G> cells;
    std::vector<double> fitness;

    std::uint32_t size() const noexcept { return shape.size(); }
};

template <typename M>
concept EvolutionModel = requires(const M& m, const typename M::Genotype& g, Rng& rng) {
    typename M::Genotype;
    { m.evaluate(g) } -> std::convertible_to<double>;
    { m.random_genotype(rng) } -> std::same_as<typename M::Genotype>;
    { m.crossover(g, g, rng) } -> std::same_as<std::pair<typename M::Genotype, typename M::Genotype>>;
    { m.mutate(g, rng) } -> std::same_as<typename M::Genotype>;
    { M::kMaximize } -> std::convertible_to<bool>;
};

struct StepStats {
    LedgerRow ledger_row;
    std::vector<ImprovementEvent> events;
    double best_before = 0.0;
    double best_after = 0.0;
};

template <typename G>
struct RunRecord {
    std::vector<double> best_fitness; // index = generation, entry 0 is the initial best
    MatingLedger ledger;
    std::vector<ImprovementEvent> events;
    Population<G> final_population;

    std::uint32_t generations() const noexcept {
        return static_cast<std::uint32_t>(best_fitness.size() - 1);
    }
    double final_best() const noexcept { return best_fitness.back(); }

    /// First generation at which the final best fitness was reached.
    std::uint32_t generations_to_best() const noexcept {
        const double target = final_best();
        for (std::size_t t = 0; t < best_fitness.size(); ++t)
            if (best_fitness[t] == target)
                return static_cast<std::uint32_t>(t);
        return generations();
    }
};

namespace stream {
inline constexpr std::uint64_t kInitStream = 0xA11C1;
inline constexpr std::uint64_t kStepStream = 0xA11C2;
inline constexpr std::uint64_t kRunStream = 0xA11C3; // replicate seeds at the experiment layer
} // namespace stream

/// Seed of replicate r in an experiment cell parameterized by beta. Every
/// replicated experiment (takeover, sigma table, sweeps) uses this scheme,
/// so execution order and worker count never change results.
inline std::uint64_t replicate_seed(std::uint64_t base_seed, double beta,
                                    std::uint32_t replicate) {
    return derive_seed(base_seed, {stream::kRunStream, seed_tag(beta), replicate});
}

template <EvolutionModel Model>
class CellularEngine {
  public:
    using Genotype = typename Model::Genotype;

    CellularEngine(Model model, GridShape shape, EngineConfig cfg)
        : model_(std::move(model)), shape_(shape), cfg_(checked(std::move(cfg))),
          params_(cfg_.beta) {
        neighborhoods_.reserve(shape_.size());
        for (CellIndex c = 0; c < shape_.size(); ++c)
            neighborhoods_.push_back(neighborhood(shape_, c));
    }

    const GridShape& shape() const noexcept { return shape_; }
    const EngineConfig& config() const noexcept { return cfg_; }
    const Model& model() const noexcept { return model_; }

    static bool better(double a, double b) noexcept {
        return Model::kMaximize ? a > b : a < b;
    }

    /// Population from a per-cell initializer (CellIndex, Rng&) -> Genotype.
    template <typename Init>
    Population<Genotype> initialize(Init&& init) const {
        Population<Genotype> pop{shape_, {}, {}};
        pop.cells.reserve(shape_.size());
        pop.fitness.reserve(shape_.size());
        for (CellIndex c = 0; c < shape_.size(); ++c) {
            Rng rng = Rng::substream(cfg_.seed, {stream::kInitStream, c});
            pop.cells.push_back(init(c, rng));
            pop.fitness.push_back(model_.evaluate(pop.cells.back()));
        }
        return pop;
    }

    Population<Genotype> initialize() const {
        return initialize([this](CellIndex, Rng& rng) { return model_.random_genotype(rng); });
    }

    double population_best(const Population<Genotype>& pop) const {
        double best = pop.fitness[0];
        for (double f : pop.fitness)
            if (better(f, best))
                best = f;
        return best;
    }

    /// One synchronous generation; pop is replaced by the new grid.
    StepStats step(Population<Genotype>& pop, std::uint32_t generation) const {
        if (pop.shape != shape_ || pop.cells.size() != shape_.size() ||
            pop.fitness.size() != shape_.size())
            throw ConfigError("engine step: population does not match the engine grid");

        StepStats stats;
        stats.best_before = population_best(pop);

        std::vector<Genotype> next_cells(pop.cells);
        std::vector<double> next_fitness(pop.fitness);
        const auto fitness_of = [&pop](CellIndex c) { return pop.fitness[c]; };
        const auto fitter = [](double a, double b) { return better(a, b); };

        for (CellIndex i = 0; i < shape_.size(); ++i) {
            Rng rng = Rng::substream(cfg_.seed, {stream::kStepStream, generation, i});
            const auto sel_a = centric_select(params_, neighborhoods_[i], fitness_of, fitter, rng);
            const auto sel_b = centric_select(params_, neighborhoods_[i], fitness_of, fitter, rng);
            const CellIndex pa = sel_a.winner;
            const CellIndex pb = sel_b.winner;

            const MatingType mating =
                classify_mating(pop.fitness[pa], pop.fitness[pb], stats.best_before);
            stats.ledger_row.count(mating);

            Genotype child1, child2;
            if (pa == pb) {
                // same cell selected twice: no crossover, the parent is duplicated
                child1 = pop.cells[pa];
                child2 = pop.cells[pa];
            } else if (rng.next_double() < cfg_.crossover_rate) {
                auto pair = model_.crossover(pop.cells[pa], pop.cells[pb], rng);
                child1 = std::move(pair.first);
                child2 = std::move(pair.second);
            } else {
                child1 = pop.cells[pa];
                child2 = pop.cells[pb];
            }
            child1 = model_.mutate(child1, rng);
            child2 = model_.mutate(child2, rng);

            const double f1 = model_.evaluate(child1);
            const double f2 = model_.evaluate(child2);
            const bool second_wins = better(f2, f1);
            const double f_best_child = second_wins ? f2 : f1;

            if (better(f_best_child, pop.fitness[i])) {
                next_cells[i] = second_wins ? std::move(child2) : std::move(child1);
                next_fitness[i] = f_best_child;
            }
            if (better(f_best_child, stats.best_before))
                stats.events.push_back({generation, i, mating, stats.best_before, f_best_child});
        }

        if (stats.ledger_row.total() != shape_.size())
            throw InternalError("engine step: mating counts do not sum to lambda");

        pop.cells = std::move(next_cells);
        pop.fitness = std::move(next_fitness);
        stats.best_after = population_best(pop);
        return stats;
    }

    /// Full run. The observer is called after every generation with
    /// (generation, population, step stats) and may stop the run early by
    /// returning false.
    template <typename Init, typename Observer>
    RunRecord<Genotype> run(Init&& init, Observer&& observe) const {
        RunRecord<Genotype> rec{{}, {}, {}, initialize(std::forward<Init>(init))};
        rec.best_fitness.reserve(cfg_.max_generations + 1);
        rec.best_fitness.push_back(population_best(rec.final_population));
        for (std::uint32_t g = 1; g <= cfg_.max_generations; ++g) {
            StepStats stats = step(rec.final_population, g);
            rec.ledger.push(stats.ledger_row);
            rec.events.insert(rec.events.end(), stats.events.begin(), stats.events.end());
            rec.best_fitness.push_back(stats.best_after);
            if (!observe(g, std::as_const(rec.final_population), std::as_const(stats)))
                break;
        }
        return rec;
    }

    template <typename Init>
    RunRecord<Genotype> run(Init&& init) const {
        return run(std::forward<Init>(init),
                   [](std::uint32_t, const Population<Genotype>&, const StepStats&) { return true; });
    }

    RunRecord<Genotype> run() const {
        return run([this](CellIndex, Rng& rng) { return model_.random_genotype(rng); });
    }

  private:
    static EngineConfig checked(EngineConfig cfg) {
        cfg.validate();
        return cfg;
    }

    Model model_;
    GridShape shape_;
    EngineConfig cfg_;
    CentricParams params_;
    std::vector<Neighborhood> neighborhoods_;
};

/// Row-per-generation text serialization:
/// generation, best fitness, mating counts, improvement flag.
template <typename G, typename DoubleFormatter>
void write_run_record_csv(const RunRecord<G>& rec, std::ostream& out, DoubleFormatter&& fmt) {
    out << "generation,best_fitness,n00,n01,n11,improved\n";
    std::vector<std::uint8_t> improved(rec.best_fitness.size(), 0);
    for (const auto& e : rec.events)
        if (e.generation < improved.size())
            improved[e.generation] = 1;
    for (std::size_t t = 0; t < rec.best_fitness.size(); ++t) {
        const LedgerRow row = t == 0 ? LedgerRow{} : rec.ledger.rows()[t - 1];
        out << t << ',' << fmt(rec.best_fitness[t]) << ',' << row.n00 << ',' << row.n01 << ','
            << row.n11 << ',' << int(improved[t]) << '\n';
    }
}

} // namespace cealab
