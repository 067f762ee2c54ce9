#pragma once

// cealab: a cellular evolutionary-algorithm laboratory built around centric
// selection, a two-candidate tournament whose center-cell probability beta
// tunes the selective pressure of a toroidal-grid EA with one knob.
//
// The library ships the synchronous cellular engine with mating-type
// instrumentation, QAP and NK-landscape problem backends with their
// variation operators, takeover-time experiments (equilibrium model), and
// the punctuated-equilibria analytics that estimate per-mating-type
// improvement probabilities and the pressure setting maximizing the chance
// of further improvement.

#include "cealab/engine.hpp"
#include "cealab/equilibrium.hpp"
#include "cealab/errors.hpp"
#include "cealab/experiments.hpp"
#include "cealab/grid.hpp"
#include "cealab/io.hpp"
#include "cealab/parallel.hpp"
#include "cealab/pem.hpp"
#include "cealab/problems/nk.hpp"
#include "cealab/problems/qap.hpp"
#include "cealab/rng.hpp"
#include "cealab/selection.hpp"
#include "cealab/stats.hpp"

namespace cealab {
inline constexpr const char* kVersion = "0.1.0";
}
