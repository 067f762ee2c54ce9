#include <catch2/catch_amalgamated.hpp>

#include <utility>
#include <vector>

#include "cealab/engine.hpp"
#include "cealab/equilibrium.hpp"
#include "cealab/problems/qap.hpp"

using namespace cealab;

namespace {

// integer genotype, fitness = value, inert operators
struct InertModel {
    using Genotype = int;
    static constexpr bool kMaximize = false;
    double evaluate(int g) const { return double(g); }
    int random_genotype(Rng& rng) const { return int(rng.below(100)); }
    std::pair<int, int> crossover(int a, int b, Rng&) const { return {a, b}; }
    int mutate(int g, Rng&) const { return g; }
};

// genotype tagged with its origin cell; crossover of distinct owners poisons
// the tag, so genetic flow between cells is observable
struct TaggedModel {
    using Genotype = std::pair<int, int>; // (owner, score)
    static constexpr bool kMaximize = true;
    double evaluate(const Genotype& g) const { return double(g.second); }
    Genotype random_genotype(Rng& rng) const { return {-2, int(rng.below(5))}; }
    std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, Rng&) const {
        if (a.first != b.first)
            return {{-1, a.second}, {-1, b.second}};
        return {a, b};
    }
    Genotype mutate(const Genotype& g, Rng& rng) const {
        return {g.first, g.second + int(rng.below(2))};
    }
};

// every child improves on its parent by one
struct AlwaysImproveModel {
    using Genotype = int;
    static constexpr bool kMaximize = true;
    double evaluate(int g) const { return double(g); }
    int random_genotype(Rng&) const { return 0; }
    std::pair<int, int> crossover(int a, int b, Rng&) const { return {a, b}; }
    int mutate(int g, Rng&) const { return g + 1; }
};

// fitness |g|: distinct genotypes can share the best fitness
struct AbsModel {
    using Genotype = int;
    static constexpr bool kMaximize = false;
    double evaluate(int g) const { return std::abs(double(g)); }
    int random_genotype(Rng&) const { return 4; }
    std::pair<int, int> crossover(int a, int b, Rng&) const { return {a, b}; }
    int mutate(int g, Rng&) const { return g; }
};

} // namespace

TEST_CASE("uniform population with inert operators: step is the identity") {
    EngineConfig cfg;
    cfg.beta = 0.2;
    cfg.seed = 42;
    CellularEngine<InertModel> engine(InertModel{}, GridShape(4, 4), cfg);
    auto pop = engine.initialize([](CellIndex, Rng&) { return 5; });
    const auto before = pop.cells;
    const auto stats = engine.step(pop, 1);
    REQUIRE(pop.cells == before);
    REQUIRE(stats.events.empty());
    REQUIRE(stats.ledger_row.n11 == 16); // everyone carries the best fitness
}

TEST_CASE("beta = 1 seals every cell: no crossover, no genetic flow") {
    EngineConfig cfg;
    cfg.beta = 1.0;
    cfg.max_generations = 50;
    cfg.seed = 9;
    CellularEngine<TaggedModel> engine(TaggedModel{}, GridShape(5, 5), cfg);
    const auto rec = engine.run([](CellIndex c, Rng&) {
        return std::pair<int, int>{int(c), 0};
    });
    for (CellIndex c = 0; c < 25; ++c) {
        REQUIRE(rec.final_population.cells[c].first == int(c)); // own lineage only
        REQUIRE(rec.final_population.cells[c].second >= 0);     // climbed, never lost
    }
    // scores climb like lambda independent hill climbers
    REQUIRE(rec.best_fitness.back() > rec.best_fitness.front());
}

TEST_CASE("beta = 1 with a single planted best: one 11-mating, the rest 00") {
    EngineConfig cfg;
    cfg.beta = 1.0;
    cfg.max_generations = 3;
    cfg.seed = 3;
    CellularEngine<TwoLevelModel> engine(TwoLevelModel{}, GridShape(4, 4), cfg);
    const auto rec = engine.run([](CellIndex c, Rng&) { return std::uint8_t(c == 5 ? 1 : 0); });
    for (const auto& row : rec.ledger.rows()) {
        REQUIRE(row.n11 == 1);
        REQUIRE(row.n01 == 0);
        REQUIRE(row.n00 == 15);
    }
    REQUIRE(rec.best_fitness.back() == 1.0);
}

TEST_CASE("classify_mating counts best-fitness parents") {
    REQUIRE(classify_mating(1.0, 1.0, 1.0) == MatingType::m11);
    REQUIRE(classify_mating(0.0, 1.0, 1.0) == MatingType::m01);
    REQUIRE(classify_mating(1.0, 0.0, 1.0) == MatingType::m01);
    REQUIRE(classify_mating(0.0, 0.5, 1.0) == MatingType::m00);
}

TEST_CASE("copies of the best are identified by fitness, not genotype") {
    EngineConfig cfg;
    cfg.beta = 0.5;
    cfg.seed = 31;
    CellularEngine<AbsModel> engine(AbsModel{}, GridShape(3, 3), cfg);
    // alternating +1 / -1: distinct genotypes, all at the best fitness 1
    auto pop = engine.initialize([](CellIndex c, Rng&) { return c % 2 == 0 ? 1 : -1; });
    const auto stats = engine.step(pop, 1);
    REQUIRE(stats.ledger_row.n11 == 9);
}

TEST_CASE("ledger conservation: rows sum to lambda and totals to lambda * T") {
    problems::QapInstance inst(3, {0, 2, 1, 2, 0, 3, 1, 3, 0}, {0, 1, 2, 1, 0, 1, 2, 1, 0});
    EngineConfig cfg;
    cfg.beta = 0.3;
    cfg.max_generations = 20;
    cfg.seed = 77;
    CellularEngine<problems::QapModel> engine(problems::QapModel(inst), GridShape(4, 5), cfg);
    const auto rec = engine.run();
    REQUIRE(rec.ledger.generations() == 20);
    for (const auto& row : rec.ledger.rows())
        REQUIRE(row.total() == 20);
    const auto totals = rec.ledger.totals();
    REQUIRE(totals[0] + totals[1] + totals[2] == 20ull * 20ull);
    const auto sigma5 = rec.ledger.sigma(5);
    REQUIRE(sigma5[0] + sigma5[1] + sigma5[2] == 5ull * 20ull);
}

TEST_CASE("elitism: no cell ever worsens, so the best trajectory is monotone") {
    problems::QapInstance inst(4, {0, 5, 2, 4, 5, 0, 3, 0, 2, 3, 0, 0, 4, 0, 0, 0},
                               {0, 1, 2, 3, 1, 0, 1, 2, 2, 1, 0, 1, 3, 2, 1, 0});
    EngineConfig cfg;
    cfg.beta = 0.2;
    cfg.max_generations = 30;
    cfg.seed = 5;
    CellularEngine<problems::QapModel> engine(problems::QapModel(inst), GridShape(3, 3), cfg);

    auto pop = engine.initialize();
    auto fitness_before = pop.fitness;
    for (std::uint32_t g = 1; g <= cfg.max_generations; ++g) {
        engine.step(pop, g);
        for (CellIndex c = 0; c < pop.size(); ++c)
            REQUIRE(pop.fitness[c] <= fitness_before[c]);
        fitness_before = pop.fitness;
        // cached fitness stays consistent with re-evaluation
        REQUIRE(pop.fitness[g % pop.size()] ==
                problems::qap_evaluate(inst, pop.cells[g % pop.size()]));
    }
}

TEST_CASE("identical seeds give bit-identical run records") {
    problems::QapInstance inst(3, {0, 2, 1, 2, 0, 3, 1, 3, 0}, {0, 1, 2, 1, 0, 1, 2, 1, 0});
    EngineConfig cfg;
    cfg.beta = 0.4;
    cfg.max_generations = 15;
    cfg.seed = 123;
    CellularEngine<problems::QapModel> engine(problems::QapModel(inst), GridShape(3, 3), cfg);
    const auto a = engine.run();
    const auto b = engine.run();
    REQUIRE(a.best_fitness == b.best_fitness);
    REQUIRE(a.final_population.cells == b.final_population.cells);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.ledger.rows().size(); ++i) {
        REQUIRE(a.ledger.rows()[i].n00 == b.ledger.rows()[i].n00);
        REQUIRE(a.ledger.rows()[i].n11 == b.ledger.rows()[i].n11);
    }

    // a different seed changes the stochastic history (the tiny instance
    // converges to the same optimum, so compare mating counts instead)
    cfg.seed = 124;
    CellularEngine<problems::QapModel> other(problems::QapModel(inst), GridShape(3, 3), cfg);
    const auto c = other.run();
    bool any_difference = false;
    for (std::size_t i = 0; i < c.ledger.rows().size(); ++i)
        any_difference = any_difference || c.ledger.rows()[i].n00 != a.ledger.rows()[i].n00 ||
                         c.ledger.rows()[i].n11 != a.ledger.rows()[i].n11;
    REQUIRE(any_difference);
}

TEST_CASE("simultaneous improvements are all recorded") {
    EngineConfig cfg;
    cfg.beta = 0.2;
    cfg.seed = 8;
    CellularEngine<AlwaysImproveModel> engine(AlwaysImproveModel{}, GridShape(3, 3), cfg);
    auto pop = engine.initialize([](CellIndex, Rng&) { return 0; });
    const auto stats = engine.step(pop, 1);
    REQUIRE(stats.events.size() == 9); // every cell beat the old best simultaneously
    for (const auto& e : stats.events) {
        REQUIRE(e.old_best_fitness == 0.0);
        REQUIRE(e.new_best_fitness == 1.0);
        REQUIRE(e.mating_type == MatingType::m11);
    }
    REQUIRE(stats.best_after == 1.0);
}

TEST_CASE("max_generations = 0 leaves only the initial best in the trajectory") {
    EngineConfig cfg;
    cfg.max_generations = 0;
    cfg.seed = 2;
    CellularEngine<InertModel> engine(InertModel{}, GridShape(3, 3), cfg);
    const auto rec = engine.run();
    REQUIRE(rec.best_fitness.size() == 1);
    REQUIRE(rec.generations() == 0);
}

TEST_CASE("configuration errors are caught before evolution") {
    EngineConfig bad;
    bad.beta = 1.5;
    REQUIRE_THROWS_AS(CellularEngine<InertModel>(InertModel{}, GridShape(3, 3), bad), ConfigError);

    EngineConfig cfg;
    CellularEngine<InertModel> engine(InertModel{}, GridShape(3, 3), cfg);
    CellularEngine<InertModel> other(InertModel{}, GridShape(4, 4), cfg);
    auto pop = other.initialize();
    REQUIRE_THROWS_AS(engine.step(pop, 1), ConfigError);
}

// Independent re-implementation of one synchronous generation, driven by the
// documented per-cell stream contract. Any intra-generation leakage or
// divergence from the selection/variation/replacement semantics shows up as
// a mismatch on a population where many cells change at once.
TEST_CASE("single step matches a hand-simulated generation on the recorded streams") {
    problems::QapInstance inst(
        6,
        {0, 3, 1, 0, 2, 4, 3, 0, 0, 5, 1, 2, 1, 0, 0, 2, 2, 1,
         0, 5, 2, 0, 1, 3, 2, 1, 2, 1, 0, 0, 4, 2, 1, 3, 0, 0},
        {0, 1, 2, 3, 2, 1, 1, 0, 1, 2, 3, 2, 2, 1, 0, 1, 2, 3,
         3, 2, 1, 0, 1, 2, 2, 3, 2, 1, 0, 1, 1, 2, 3, 2, 1, 0});
    const problems::QapModel model(inst);
    const GridShape shape(3, 3);
    EngineConfig cfg;
    cfg.beta = 0.35;
    cfg.crossover_rate = 0.8;
    cfg.seed = 20257;
    cfg.max_generations = 1;
    CellularEngine<problems::QapModel> engine(model, shape, cfg);

    for (std::uint32_t generation : {1u, 2u, 7u}) {
        auto pop = engine.initialize();
        // scripted replay against the documented stream and draw order
        std::vector<problems::Permutation> expected_cells = pop.cells;
        std::vector<double> expected_fitness = pop.fitness;
        LedgerRow expected_row;
        double best = pop.fitness[0];
        for (double f : pop.fitness)
            best = std::min(best, f);

        for (CellIndex i = 0; i < shape.size(); ++i) {
            Rng rng = Rng::substream(cfg.seed, {stream::kStepStream, generation, i});
            const auto nbhd = neighborhood(shape, i);
            const auto draw = [&]() -> CellIndex {
                if (rng.next_double() < cfg.beta)
                    return nbhd.center;
                switch (rng.below(4)) {
                case 0: return nbhd.north;
                case 1: return nbhd.south;
                case 2: return nbhd.east;
                default: return nbhd.west;
                }
            };
            const auto tournament = [&]() {
                const CellIndex a = draw();
                const CellIndex b = draw();
                return pop.fitness[b] < pop.fitness[a] ? b : a;
            };
            const CellIndex pa = tournament();
            const CellIndex pb = tournament();
            expected_row.count(classify_mating(pop.fitness[pa], pop.fitness[pb], best));

            problems::Permutation c1, c2;
            if (pa == pb) {
                c1 = pop.cells[pa];
                c2 = pop.cells[pa];
            } else if (rng.next_double() < cfg.crossover_rate) {
                std::tie(c1, c2) = problems::upmx_extended_crossover(pop.cells[pa], pop.cells[pb], rng);
            } else {
                c1 = pop.cells[pa];
                c2 = pop.cells[pb];
            }
            c1 = problems::swap_mutation(c1, rng);
            c2 = problems::swap_mutation(c2, rng);
            const double f1 = problems::qap_evaluate(inst, c1);
            const double f2 = problems::qap_evaluate(inst, c2);
            const bool second = f2 < f1;
            const double fc = second ? f2 : f1;
            if (fc < pop.fitness[i]) {
                expected_cells[i] = second ? c2 : c1;
                expected_fitness[i] = fc;
            }
        }

        const auto stats = engine.step(pop, generation);
        REQUIRE(pop.cells == expected_cells);
        REQUIRE(pop.fitness == expected_fitness);
        REQUIRE(stats.ledger_row.n00 == expected_row.n00);
        REQUIRE(stats.ledger_row.n01 == expected_row.n01);
        REQUIRE(stats.ledger_row.n11 == expected_row.n11);
    }
}

TEST_CASE("run record serializes one row per generation") {
    EngineConfig cfg;
    cfg.beta = 0.2;
    cfg.max_generations = 4;
    cfg.seed = 6;
    CellularEngine<TwoLevelModel> engine(TwoLevelModel{}, GridShape(3, 3), cfg);
    const auto rec = engine.run([](CellIndex c, Rng&) { return std::uint8_t(c == 0 ? 1 : 0); });
    std::ostringstream out;
    write_run_record_csv(rec, out, [](double v) { return std::to_string(v); });
    const std::string text = out.str();
    REQUIRE(text.starts_with("generation,best_fitness,n00,n01,n11,improved\n"));
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 6); // header + gens 0..4
}
