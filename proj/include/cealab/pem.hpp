#pragma once

// Punctuated-equilibria analytics. A run is modeled as stagnation periods
// punctuated by improvements; each of the lambda matings per generation has
// a type-dependent probability (P00, P01, P11) of producing a new best
// solution. From per-generation mating counts n_ij(t):
//
//   p(t) = 1 - (1-P00)^n00(t) (1-P01)^n01(t) (1-P11)^n11(t)
//   P(T) = 1 - (1-P00)^S00 (1-P01)^S01 (1-P11)^S11,  S_ij = sum_t n_ij(t)
//
// Powers are accumulated in log space (log1p / expm1) since the exponents
// reach lambda * T ~ 4e4. The P_ij are estimated from instrumented runs by
// a per-window Beta-posterior process; the Sigma_ij(beta) table comes from
// two-level takeover experiments and is problem independent. beta* for a
// window is the grid argmax of P(T), with the stationarity residual
//   log(1-P00) dS00/dbeta + log(1-P01) dS01/dbeta + log(1-P11) dS11/dbeta
// evaluated by finite differences on the table as a diagnostic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cealab/engine.hpp"
#include "cealab/equilibrium.hpp"
#include "cealab/errors.hpp"
#include "cealab/grid.hpp"

namespace cealab {

struct PemProbabilities {
    double p00 = 0.0;
    double p01 = 0.0;
    double p11 = 0.0;

    void validate() const {
        for (double p : {p00, p01, p11})
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("PEM probabilities must lie in [0,1]");
    }

    double of(MatingType t) const noexcept {
        switch (t) {
        case MatingType::m00: return p00;
        case MatingType::m01: return p01;
        default: return p11;
        }
    }
};

namespace detail {

/// sum of n_ij * log(1 - P_ij); -inf when some P_ij = 1 with n_ij > 0.
inline double log_no_improvement(const PemProbabilities& probs, double n00, double n01,
                                 double n11) {
    double acc = 0.0;
    const auto add = [&acc](double n, double p) {
        if (n <= 0.0)
            return; // skip to avoid 0 * -inf when p = 1
        if (p >= 1.0)
            acc = -std::numeric_limits<double>::infinity();
        else
            acc += n * std::log1p(-p);
    };
    add(n00, probs.p00);
    add(n01, probs.p01);
    add(n11, probs.p11);
    return acc;
}

} // namespace detail

/// Probability that generation t finds a new best solution, given that
/// generation's mating counts.
inline double p_of_t(const PemProbabilities& probs, std::uint64_t n00, std::uint64_t n01,
                     std::uint64_t n11) {
    probs.validate();
    return -std::expm1(detail::log_no_improvement(probs, double(n00), double(n01), double(n11)));
}

inline double p_of_t(const PemProbabilities& probs, const LedgerRow& row) {
    return p_of_t(probs, row.n00, row.n01, row.n11);
}

/// Probability of improving the best solution within the horizon covered by
/// the cumulative mating counts. Real-valued sigmas are accepted because
/// tabulated values are replicate averages.
inline double big_p(const PemProbabilities& probs, const std::array<double, 3>& sigmas) {
    probs.validate();
    if (sigmas[0] < 0.0 || sigmas[1] < 0.0 || sigmas[2] < 0.0)
        throw std::invalid_argument("big_p: cumulative counts must be non-negative");
    return -std::expm1(detail::log_no_improvement(probs, sigmas[0], sigmas[1], sigmas[2]));
}

inline double big_p(const PemProbabilities& probs, const std::array<std::uint64_t, 3>& sigmas) {
    return big_p(probs, std::array<double, 3>{double(sigmas[0]), double(sigmas[1]),
                                              double(sigmas[2])});
}

/// Both readings of the expected improvement time over a horizon:
/// `paper_form` is sum_t t * p(t); `hitting_time_form` weights each term by
/// the survival probability prod_{s<t} (1 - p(s)), the standard expectation
/// of the first success (truncated at the horizon).
struct ExpectedTime {
    double paper_form = 0.0;
    double hitting_time_form = 0.0;
};

inline ExpectedTime expected_time(const PemProbabilities& probs,
                                  std::span<const LedgerRow> per_generation,
                                  std::size_t horizon) {
    probs.validate();
    ExpectedTime e;
    double log_survival = 0.0;
    const std::size_t last = std::min(horizon, per_generation.size());
    for (std::size_t idx = 0; idx < last; ++idx) {
        const double t = double(idx + 1);
        const double log_miss = detail::log_no_improvement(
            probs, double(per_generation[idx].n00), double(per_generation[idx].n01),
            double(per_generation[idx].n11));
        const double p = -std::expm1(log_miss);
        e.paper_form += t * p;
        e.hitting_time_form += t * p * std::exp(log_survival);
        log_survival += log_miss;
    }
    return e;
}

// ---------------------------------------------------------------------------
// Bayesian estimation of the P_ij from instrumented runs
// ---------------------------------------------------------------------------

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;

    BetaPrior() = default;
    BetaPrior(double a_, double b_) : a(a_), b(b_) {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::invalid_argument("Beta prior parameters must be positive");
    }
    double mean() const noexcept { return a / (a + b); }
};

/// Success/trial counter with a Beta(a, b) prior.
struct BayesEstimator {
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;

    void observe(std::uint64_t s, std::uint64_t m) {
        successes += s;
        trials += m;
    }
    double posterior_mean(const BetaPrior& prior) const noexcept {
        return (double(successes) + prior.a) / (double(trials) + prior.a + prior.b);
    }
    double posterior_sd(const BetaPrior& prior) const noexcept {
        const double mu = posterior_mean(prior);
        return std::sqrt(mu * (1.0 - mu) / (double(trials) + prior.a + prior.b + 1.0));
    }
};

/// The mating-type observables of one run: the per-generation ledger rows
/// and the improvement events' (generation, type) pairs.
struct RunObservations {
    std::vector<LedgerRow> matings;
    std::vector<std::pair<std::uint32_t, MatingType>> improvements;
};

template <typename G>
RunObservations observe_run(const RunRecord<G>& rec) {
    RunObservations obs;
    obs.matings = rec.ledger.rows();
    obs.improvements.reserve(rec.events.size());
    for (const auto& e : rec.events)
        obs.improvements.emplace_back(e.generation, e.mating_type);
    return obs;
}

/// Per-window estimates: posterior means averaged across runs, with the
/// pooled trial/success counts kept for diagnostics.
struct WindowEstimate {
    std::uint32_t window_start = 0; // generations window_start+1 .. window_start+width
    PemProbabilities probs;
    std::array<std::uint64_t, 3> trials{0, 0, 0};
    std::array<std::uint64_t, 3> successes{0, 0, 0};
    std::array<bool, 3> had_empty_window{false, false, false};
};

/// Windowed Beta-posterior estimation of (P00, P01, P11), averaged across
/// runs. Within each window of `width` generations, a type's trials are its
/// matings and its successes the improvement events attributed to it. A run
/// contributing zero trials of some type in a window contributes the prior
/// mean (flagged in had_empty_window). Ragged tails shorter than one window
/// are dropped.
inline std::vector<WindowEstimate> estimate_pij(std::span<const RunObservations> runs,
                                                std::uint32_t width,
                                                const BetaPrior& prior = BetaPrior{}) {
    if (runs.empty())
        throw std::invalid_argument("estimate_pij: need at least one run");
    if (width == 0)
        throw std::invalid_argument("estimate_pij: window width must be positive");
    std::size_t generations = std::numeric_limits<std::size_t>::max();
    for (const auto& r : runs)
        generations = std::min(generations, r.matings.size());
    const std::size_t windows = generations / width;

    std::vector<WindowEstimate> out(windows);
    for (std::size_t w = 0; w < windows; ++w) {
        auto& est = out[w];
        est.window_start = static_cast<std::uint32_t>(w * width);
        std::array<double, 3> mean_sum{0.0, 0.0, 0.0};
        for (const auto& run : runs) {
            std::array<BayesEstimator, 3> counters{};
            for (std::size_t t = w * width; t < (w + 1) * width; ++t) {
                counters[0].observe(0, run.matings[t].n00);
                counters[1].observe(0, run.matings[t].n01);
                counters[2].observe(0, run.matings[t].n11);
            }
            for (const auto& [gen, type] : run.improvements) {
                // events are tagged with 1-based generations
                if (gen > est.window_start && gen <= est.window_start + width)
                    counters[std::size_t(type)].observe(1, 0);
            }
            for (std::size_t k = 0; k < 3; ++k) {
                mean_sum[k] += counters[k].posterior_mean(prior);
                est.trials[k] += counters[k].trials;
                est.successes[k] += counters[k].successes;
                if (counters[k].trials == 0)
                    est.had_empty_window[k] = true;
            }
        }
        est.probs.p00 = mean_sum[0] / double(runs.size());
        est.probs.p01 = mean_sum[1] / double(runs.size());
        est.probs.p11 = mean_sum[2] / double(runs.size());
    }
    return out;
}

/// Online variant: the estimate reported at window w uses all generations
/// from 1 through the end of window w, i.e. the running posterior of a
/// Bayesian process updated during the run. Once a mating type stops
/// occurring (a converged population mates almost exclusively 11), its
/// estimate freezes at the last informed value instead of falling back to
/// the prior, which keeps late-window beta* computations meaningful.
inline std::vector<WindowEstimate> estimate_pij_running(std::span<const RunObservations> runs,
                                                        std::uint32_t width,
                                                        const BetaPrior& prior = BetaPrior{}) {
    if (runs.empty())
        throw std::invalid_argument("estimate_pij_running: need at least one run");
    if (width == 0)
        throw std::invalid_argument("estimate_pij_running: window width must be positive");
    std::size_t generations = std::numeric_limits<std::size_t>::max();
    for (const auto& r : runs)
        generations = std::min(generations, r.matings.size());
    const std::size_t windows = generations / width;

    std::vector<WindowEstimate> out(windows);
    std::vector<std::array<BayesEstimator, 3>> counters(runs.size());
    for (std::size_t w = 0; w < windows; ++w) {
        auto& est = out[w];
        est.window_start = static_cast<std::uint32_t>(w * width);
        est.trials = {0, 0, 0};
        est.successes = {0, 0, 0};
        std::array<double, 3> mean_sum{0.0, 0.0, 0.0};
        for (std::size_t run_index = 0; run_index < runs.size(); ++run_index) {
            const auto& run = runs[run_index];
            auto& counter = counters[run_index];
            for (std::size_t t = w * width; t < (w + 1) * width; ++t) {
                counter[0].observe(0, run.matings[t].n00);
                counter[1].observe(0, run.matings[t].n01);
                counter[2].observe(0, run.matings[t].n11);
            }
            for (const auto& [gen, type] : run.improvements)
                if (gen > w * width && gen <= (w + 1) * width)
                    counter[std::size_t(type)].observe(1, 0);
            for (std::size_t k = 0; k < 3; ++k) {
                mean_sum[k] += counter[k].posterior_mean(prior);
                est.trials[k] += counter[k].trials;
                est.successes[k] += counter[k].successes;
                if (counter[k].trials == 0)
                    est.had_empty_window[k] = true;
            }
        }
        est.probs.p00 = mean_sum[0] / double(runs.size());
        est.probs.p01 = mean_sum[1] / double(runs.size());
        est.probs.p11 = mean_sum[2] / double(runs.size());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sigma table: cumulative mating counts per beta, problem independent
// ---------------------------------------------------------------------------

struct SigmaRow {
    double beta = 0.0;
    std::uint32_t horizon = 0;
    std::uint32_t replicates = 0;
    std::uint32_t lambda = 0;
    std::array<std::uint64_t, 3> totals{0, 0, 0}; // summed over replicates

    std::array<double, 3> sigma() const noexcept {
        const double r = double(replicates);
        return {double(totals[0]) / r, double(totals[1]) / r, double(totals[2]) / r};
    }
};

class SigmaTable {
  public:
    SigmaTable() = default;
    explicit SigmaTable(std::vector<SigmaRow> rows) : rows_(std::move(rows)) {
        std::sort(rows_.begin(), rows_.end(),
                  [](const SigmaRow& a, const SigmaRow& b) { return a.beta < b.beta; });
        for (std::size_t i = 1; i < rows_.size(); ++i)
            if (rows_[i].beta == rows_[i - 1].beta)
                throw std::invalid_argument("SigmaTable: duplicate beta " +
                                            std::to_string(rows_[i].beta));
    }

    const std::vector<SigmaRow>& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }

    std::vector<double> betas() const {
        std::vector<double> b;
        b.reserve(rows_.size());
        for (const auto& r : rows_)
            b.push_back(r.beta);
        return b;
    }

    const SigmaRow* find(double beta) const noexcept {
        for (const auto& r : rows_)
            if (r.beta == beta)
                return &r;
        return nullptr;
    }

    void merge(const SigmaTable& other) {
        auto rows = rows_;
        for (const auto& r : other.rows())
            if (!find(r.beta))
                rows.push_back(r);
        *this = SigmaTable(std::move(rows));
    }

  private:
    std::vector<SigmaRow> rows_;
};

/// Takeover-style two-level experiments, continued for exactly `horizon`
/// generations (after takeover every mating is type 11), classifying all
/// lambda matings per generation. Identical replicate seeds as takeover_run
/// so the table describes the same diffusion process.
inline SigmaTable build_sigma_table(const std::vector<double>& betas, std::uint32_t horizon,
                                    const GridShape& shape, std::uint32_t replicates,
                                    std::uint64_t base_seed) {
    if (replicates == 0 || horizon == 0)
        throw std::invalid_argument("build_sigma_table: need horizon >= 1 and replicates >= 1");
    std::vector<SigmaRow> rows;
    rows.reserve(betas.size());
    for (const double beta : betas) {
        SigmaRow row;
        row.beta = beta;
        row.horizon = horizon;
        row.replicates = replicates;
        row.lambda = shape.size();
        for (std::uint32_t r = 0; r < replicates; ++r) {
            const std::uint64_t run_seed = replicate_seed(base_seed, beta, r);
            EngineConfig ecfg;
            ecfg.beta = beta;
            ecfg.max_generations = horizon;
            ecfg.seed = run_seed;
            CellularEngine<TwoLevelModel> engine(TwoLevelModel{}, shape, ecfg);
            const CellIndex start = static_cast<CellIndex>(
                Rng::substream(run_seed, {stream::kInitStream, 0xbe57}).index(shape.size()));
            const auto rec =
                engine.run([start](CellIndex c, Rng&) { return std::uint8_t(c == start ? 1 : 0); });
            const auto s = rec.ledger.totals();
            row.totals[0] += s[0];
            row.totals[1] += s[1];
            row.totals[2] += s[2];
        }
        rows.push_back(row);
    }
    return SigmaTable(std::move(rows));
}

// ---------------------------------------------------------------------------
// Optimal beta per window
// ---------------------------------------------------------------------------

struct BetaStarPoint {
    std::uint32_t window_start = 0;
    double beta_star = 0.0;
    double big_p_at_star = 0.0;
    double eq1_residual = 0.0;      // stationarity diagnostic, near 0 at interior optima
    std::vector<double> tied_betas; // all betas whose P ties the maximum (incl. beta_star)
    bool low_confidence = false;    // no improvement was ever observed in the window
};

namespace detail {

/// Stationarity residual at grid row `at`, using centered differences on the
/// neighboring tabulated betas (one-sided at the grid edges).
inline double eq1_residual(const PemProbabilities& probs, const SigmaTable& table,
                           std::size_t at) {
    const auto& rows = table.rows();
    if (rows.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    const std::size_t lo = at == 0 ? 0 : at - 1;
    const std::size_t hi = at + 1 == rows.size() ? at : at + 1;
    const double dbeta = rows[hi].beta - rows[lo].beta;
    const auto s_lo = rows[lo].sigma();
    const auto s_hi = rows[hi].sigma();
    double residual = 0.0;
    const std::array<double, 3> probs_arr{probs.p00, probs.p01, probs.p11};
    for (std::size_t k = 0; k < 3; ++k) {
        const double dsigma = (s_hi[k] - s_lo[k]) / dbeta;
        if (probs_arr[k] >= 1.0)
            return -std::numeric_limits<double>::infinity();
        residual += std::log1p(-probs_arr[k]) * dsigma;
    }
    return residual;
}

} // namespace detail

/// Grid argmax of P(T) over the tabulated betas for every probability
/// window. The comparison happens on the log-survival
/// L(beta) = sum_ij Sigma_ij(beta) log(1 - P_ij), since P itself saturates
/// at 1 in double precision for realistic exponents (lambda * T ~ 4e4) and
/// maximizing P is the same as maximizing L. Betas whose L lies within
/// tie_tol (relative) of the maximum are reported as ties; beta_star is the
/// first (smallest) beta attaining the exact maximum.
inline std::vector<BetaStarPoint> optimal_beta(std::span<const WindowEstimate> series,
                                               const SigmaTable& table, double tie_tol = 1e-9) {
    if (table.rows().size() < 2)
        throw ConfigError("optimal_beta: sigma table needs at least two beta rows");
    std::vector<BetaStarPoint> out;
    out.reserve(series.size());
    for (const auto& window : series) {
        window.probs.validate();
        BetaStarPoint pt;
        pt.window_start = window.window_start;
        pt.low_confidence =
            window.successes[0] == 0 && window.successes[1] == 0 && window.successes[2] == 0;

        // P = 1 - exp(L) is maximal where the log-survival L is minimal
        std::vector<double> log_survival;
        log_survival.reserve(table.rows().size());
        double best = std::numeric_limits<double>::infinity();
        for (const auto& row : table.rows()) {
            const auto sigma = row.sigma();
            log_survival.push_back(
                detail::log_no_improvement(window.probs, sigma[0], sigma[1], sigma[2]));
            best = std::min(best, log_survival.back());
        }
        const bool certain = std::isinf(best); // some P_ij = 1 with positive exposure
        const double tol = tie_tol * std::max(std::abs(best), tie_tol);
        std::size_t star_index = 0;
        bool star_found = false;
        for (std::size_t i = 0; i < log_survival.size(); ++i) {
            const bool tied = certain ? std::isinf(log_survival[i])
                                      : log_survival[i] - best <= tol;
            if (tied)
                pt.tied_betas.push_back(table.rows()[i].beta);
            if (tied && !star_found) {
                star_index = i;
                star_found = true;
            }
            if (!certain && log_survival[i] < log_survival[star_index])
                star_index = i;
        }
        pt.beta_star = table.rows()[star_index].beta;
        pt.big_p_at_star = -std::expm1(log_survival[star_index]);
        pt.eq1_residual = detail::eq1_residual(window.probs, table, star_index);
        out.push_back(std::move(pt));
    }
    return out;
}

} // namespace cealab
