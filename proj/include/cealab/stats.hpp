#pragma once

// Small statistics toolbox used by the experiment recipes and the test
// suites: summary statistics, chi-square goodness of fit, two-sample
// Kolmogorov-Smirnov, Mann-Whitney U, and least-squares line fitting.
// Distribution CDFs come from boost::math; the tests themselves are
// implemented here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace cealab::stats {

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation (n - 1 denominator)

    double standard_error() const { return n > 0 ? sd / std::sqrt(double(n)) : 0.0; }
};

inline Summary summarize(std::span<const double> xs) {
    Summary s;
    s.n = xs.size();
    if (s.n == 0)
        return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) {
            const double d = x - s.mean;
            ss += d * d;
        }
        s.sd = std::sqrt(ss / double(s.n - 1));
    }
    return s;
}

inline double normal_cdf(double z) {
    return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

/// P(X > x) for X ~ chi-squared with df degrees of freedom.
inline double chi_squared_sf(double x, double df) {
    if (x <= 0.0)
        return 1.0;
    return boost::math::cdf(boost::math::complement(
        boost::math::chi_squared_distribution<double>(df), x));
}

struct ChiSquareResult {
    double statistic;
    double df;
    double p_value;
};

/// Goodness of fit of observed counts against expected probabilities.
inline ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                                      std::span<const double> expected_probs) {
    if (observed.size() != expected_probs.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof: size mismatch");
    const double total = double(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
    double stat = 0.0;
    std::size_t bins = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_probs[i] * total;
        if (e == 0.0) {
            if (observed[i] != 0)
                return {std::numeric_limits<double>::infinity(), double(observed.size() - 1), 0.0};
            continue; // structural zero, not a fitted bin
        }
        const double d = double(observed[i]) - e;
        stat += d * d / e;
        ++bins;
    }
    if (bins < 2) // only structural zeros besides one live bin: nothing to fit
        return {stat, 0.0, stat == 0.0 ? 1.0 : 0.0};
    const double df = double(bins - 1);
    return {stat, df, chi_squared_sf(stat, df)};
}

/// Asymptotic Kolmogorov distribution tail Q_KS(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0)
        return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-12)
            break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double d;
    double p_value;
};

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    double d = 0.0, fa = 0.0, fb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double xa = a[i], xb = b[j];
        if (xa <= xb)
            fa = double(++i) / na;
        if (xb <= xa)
            fb = double(++j) / nb;
        d = std::max(d, std::abs(fa - fb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    return {d, kolmogorov_q(lambda)};
}

struct MannWhitneyResult {
    double u_a;      // U statistic for the first sample
    double z;        // normal approximation with tie correction and continuity correction
    double p_value;  // two-sided
    int direction;   // -1: a tends lower, +1: a tends higher, 0: no evidence
};

/// Two-sided Mann-Whitney U test via the tie-corrected normal approximation.
inline MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    const std::size_t na = a.size(), nb = b.size();
    if (na < 2 || nb < 2)
        throw std::invalid_argument("mann_whitney: need at least 2 observations per sample");
    struct Tagged {
        double value;
        bool from_a;
    };
    std::vector<Tagged> all;
    all.reserve(na + nb);
    for (double x : a)
        all.push_back({x, true});
    for (double x : b)
        all.push_back({x, false});
    std::sort(all.begin(), all.end(), [](const Tagged& l, const Tagged& r) { return l.value < r.value; });

    const double n = double(na + nb);
    double rank_sum_a = 0.0;
    double tie_term = 0.0; // sum of t^3 - t over tie groups
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].value == all[i].value)
            ++j;
        const double t = double(j - i);
        const double avg_rank = double(i + j + 1) / 2.0; // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (all[k].from_a)
                rank_sum_a += avg_rank;
        tie_term += t * t * t - t;
        i = j;
    }

    const double u_a = rank_sum_a - double(na) * double(na + 1) / 2.0;
    const double mean_u = double(na) * double(nb) / 2.0;
    const double var_u =
        double(na) * double(nb) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_u <= 0.0)
        return {u_a, 0.0, 1.0, 0}; // all observations tied
    const double cc = u_a > mean_u ? -0.5 : (u_a < mean_u ? 0.5 : 0.0);
    const double z = (u_a - mean_u + cc) / std::sqrt(var_u);
    const double p = 2.0 * (1.0 - normal_cdf(std::abs(z)));
    const int direction = u_a > mean_u ? +1 : (u_a < mean_u ? -1 : 0);
    return {u_a, z, std::min(p, 1.0), direction};
}

struct LineFit {
    double slope;
    double intercept;
    double r2;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("linear_fit: need matching samples of size >= 2");
    const double n = double(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw std::invalid_argument("linear_fit: degenerate x values");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    const double r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return {slope, intercept, r2};
}

/// Index b in [min_segment, n - min_segment] splitting (xs, ys) into two
/// least-squares segments with minimal total squared error. Returns the
/// first index of the second segment.
inline std::size_t two_segment_breakpoint(std::span<const double> xs, std::span<const double> ys,
                                          std::size_t min_segment = 3) {
    const std::size_t n = xs.size();
    if (ys.size() != n || n < 2 * min_segment)
        throw std::invalid_argument("two_segment_breakpoint: series too short");
    const auto sse = [&](std::size_t lo, std::size_t hi) {
        const auto fit = linear_fit(xs.subspan(lo, hi - lo), ys.subspan(lo, hi - lo));
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
            s += r * r;
        }
        return s;
    };
    std::size_t best = min_segment;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t b = min_segment; b + min_segment <= n; ++b) {
        const double s = sse(0, b) + sse(b, n);
        if (s < best_sse) {
            best_sse = s;
            best = b;
        }
    }
    return best;
}

} // namespace cealab::stats
