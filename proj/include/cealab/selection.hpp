#pragma once

// Centric selection: a biased two-candidate deterministic tournament over a
// Von Neumann neighborhood. The center cell is drawn with probability beta,
// each of the four neighbors with (1 - beta) / 4. beta = 1/5 recovers the
// uniform binary tournament; beta = 1 always selects the center.

#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>

#include "cealab/grid.hpp"
#include "cealab/rng.hpp"

namespace cealab {

/// The selection-pressure parameter and its derived per-cell probabilities.
struct CentricParams {
    double beta;

    explicit CentricParams(double b) : beta(b) {
        if (!(b >= 0.0 && b <= 1.0))
            throw std::invalid_argument("centric selection: beta must lie in [0,1], got " +
                                        std::to_string(b));
    }

    double center_probability() const noexcept { return beta; }
    double neighbor_probability() const noexcept { return (1.0 - beta) / 4.0; }
};

/// Returns true when fitness a is strictly better than b.
template <typename F>
concept FitnessCompare = std::predicate<F, double, double>;

/// Minimization / maximization comparators problems hand to the selector.
struct MinimizeCompare {
    bool operator()(double a, double b) const noexcept { return a < b; }
};
struct MaximizeCompare {
    bool operator()(double a, double b) const noexcept { return a > b; }
};

/// One tournament candidate draw: center with probability beta, otherwise a
/// uniformly chosen orthogonal neighbor.
inline CellIndex draw_candidate(const CentricParams& params, const Neighborhood& nbhd, Rng& rng) {
    if (rng.next_double() < params.beta)
        return nbhd.center;
    switch (rng.below(4)) {
    case 0: return nbhd.north;
    case 1: return nbhd.south;
    case 2: return nbhd.east;
    default: return nbhd.west;
    }
}

struct SelectionOutcome {
    CellIndex winner;
    std::pair<CellIndex, CellIndex> candidates;
};

/// Two independent candidate draws (with replacement) followed by a
/// deterministic tournament. Ties go to the first-drawn candidate, which
/// keeps runs exactly replayable.
template <typename FitnessOf, FitnessCompare Better>
SelectionOutcome centric_select(const CentricParams& params, const Neighborhood& nbhd,
                                FitnessOf&& fitness_of, Better&& better, Rng& rng) {
    const CellIndex first = draw_candidate(params, nbhd, rng);
    const CellIndex second = draw_candidate(params, nbhd, rng);
    const CellIndex winner = better(fitness_of(second), fitness_of(first)) ? second : first;
    return SelectionOutcome{winner, {first, second}};
}

} // namespace cealab
