// Minimal tour of the library: a takeover curve, a short QAP run, and the
// improvement probability P(T) for the run's own mating counts.

#include <fstream>
#include <iostream>

#include "cealab/cealab.hpp"

using namespace cealab;

int main(int argc, char** argv) {
    // how fast does a single best solution conquer a 16x16 torus?
    TakeoverConfig tcfg;
    tcfg.shape = GridShape(16, 16);
    tcfg.beta = 0.2;
    const auto curve = takeover_run(tcfg, 1);
    std::cout << "takeover on 16x16 at beta 0.2: " << *curve.takeover_time << " generations\n";

    // a short evolutionary run on a QAP instance
    const char* path = argc > 1 ? argv[1] : "data/nug12.dat";
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot read " << path << " (pass a QAPLIB file as the first argument)\n";
        return 2;
    }
    const auto instance = problems::qap_load(in, path);

    EngineConfig cfg;
    cfg.beta = 0.85;
    cfg.max_generations = 300;
    cfg.seed = 7;
    CellularEngine<problems::QapModel> engine(problems::QapModel(instance), GridShape(10, 10), cfg);
    const auto record = engine.run();
    std::cout << instance.name() << ": best cost " << record.final_best() << " after "
              << record.generations_to_best() << " generations, "
              << record.events.size() << " improvement events\n";

    // chance of improving within the horizon, for illustrative probabilities
    const PemProbabilities probs{1e-5, 1e-4, 1e-6};
    const auto sigma = record.ledger.totals();
    std::cout << "P(improvement within " << record.generations() << " generations) = "
              << big_p(probs, sigma) << "\n";
    return 0;
}
