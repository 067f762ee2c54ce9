#pragma once

// Quadratic assignment problem: instance storage, QAPLIB-layout parsing,
// the cost function, and the permutation variation operators (extended
// uniform-PMX crossover, single-swap mutation).
//
// File layout (QAPLIB): the dimension n, then two n x n whitespace-separated
// matrices. The first matrix is read as flows F, the second as distances D.
// For the symmetric Nugent instances the order does not change the cost.

#include <cstdint>
#include <istream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cealab/errors.hpp"
#include "cealab/rng.hpp"

namespace cealab::problems {

/// A permutation of {0..n-1}; p[i] is the location of facility i.
using Permutation = std::vector<std::uint32_t>;

inline bool is_permutation(const Permutation& p) {
    std::vector<bool> seen(p.size(), false);
    for (auto v : p) {
        if (v >= p.size() || seen[v])
            return false;
        seen[v] = true;
    }
    return true;
}

inline Permutation random_permutation(std::size_t n, Rng& rng) {
    Permutation p(n);
    std::iota(p.begin(), p.end(), 0u);
    shuffle(p, rng);
    return p;
}

class QapInstance {
  public:
    QapInstance(std::size_t n, std::vector<double> flow, std::vector<double> distance,
                std::string name = {})
        : n_(n), flow_(std::move(flow)), distance_(std::move(distance)), name_(std::move(name)) {
        if (n_ == 0 || flow_.size() != n_ * n_ || distance_.size() != n_ * n_)
            throw std::invalid_argument("QapInstance: matrices must be n x n");
    }

    std::size_t size() const noexcept { return n_; }
    const std::string& name() const noexcept { return name_; }
    double flow(std::size_t i, std::size_t j) const noexcept { return flow_[i * n_ + j]; }
    double distance(std::size_t k, std::size_t l) const noexcept { return distance_[k * n_ + l]; }
    const std::vector<double>& flow_matrix() const noexcept { return flow_; }
    const std::vector<double>& distance_matrix() const noexcept { return distance_; }

  private:
    std::size_t n_;
    std::vector<double> flow_;     // F[i][j], flow between facilities
    std::vector<double> distance_; // D[k][l], distance between locations
    std::string name_;
};

/// Cost of an assignment: sum over all ordered pairs (i, j), i = j included,
/// of D[p(i)][p(j)] * F[i][j]. Minimized.
inline double qap_evaluate(const QapInstance& inst, const Permutation& p) {
    const std::size_t n = inst.size();
    if (p.size() != n)
        throw std::invalid_argument("qap_evaluate: permutation size mismatch");
    const auto& f = inst.flow_matrix();
    const auto& d = inst.distance_matrix();
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pi = p[i];
        for (std::size_t j = 0; j < n; ++j)
            cost += d[pi * n + p[j]] * f[i * n + j];
    }
    return cost;
}

namespace detail {

// Whitespace tokenizer that knows its line and per-line token position.
class NumberReader {
  public:
    explicit NumberReader(std::istream& in) : in_(in) {}

    double next(const char* what) {
        std::string tok;
        while (true) {
            const int c = in_.get();
            if (c == std::istream::traits_type::eof()) {
                if (!tok.empty())
                    break;
                throw ParseError(std::string("unexpected end of file, expected ") + what, line_,
                                 token_ + 1);
            }
            if (c == '\n') {
                if (!tok.empty()) {
                    in_.unget();
                    break;
                }
                ++line_;
                token_ = 0;
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty())
                    break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        ++token_;
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size())
                throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError("expected a number, got \"" + tok + "\"", line_, token_);
        }
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t token() const noexcept { return token_; }

  private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t token_ = 0;
};

} // namespace detail

/// Parse a QAPLIB-layout stream: n, then the flow matrix, then the distance
/// matrix. Negative entries, non-numeric tokens and short files are rejected
/// with the offending line and token position.
inline QapInstance qap_load(std::istream& in, std::string name = {}) {
    detail::NumberReader reader(in);
    const double n_raw = reader.next("instance size n");
    if (n_raw < 1.0 || n_raw != static_cast<double>(static_cast<std::size_t>(n_raw)))
        throw ParseError("instance size must be a positive integer", reader.line(),
                         reader.token());
    const auto n = static_cast<std::size_t>(n_raw);

    const auto read_matrix = [&](const char* which) {
        std::vector<double> m(n * n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) {
                const double v =
                    reader.next((std::string(which) + " matrix row " + std::to_string(r + 1)).c_str());
                if (v < 0.0)
                    throw ParseError(std::string("negative entry in ") + which + " matrix",
                                     reader.line(), reader.token());
                m[r * n + c] = v;
            }
        return m;
    };

    auto flow = read_matrix("flow");
    auto distance = read_matrix("distance");
    return QapInstance(n, std::move(flow), std::move(distance), std::move(name));
}

/// Extended uniform-PMX crossover. Starting from copies of the parents,
/// repeat floor(n / 3) times: draw a fresh uniform position i, find j with
/// child1(i) = child2(j) and k with child2(i) = child1(k), then swap
/// positions (i, j) in child1 and (i, k) in child2. Swapping inside each
/// child keeps both children permutations; the repeats act on the evolving
/// children, and a drawn position may repeat.
inline std::pair<Permutation, Permutation> upmx_extended_crossover(const Permutation& p1,
                                                                   const Permutation& p2,
                                                                   Rng& rng) {
    const std::size_t n = p1.size();
    if (p2.size() != n)
        throw std::invalid_argument("upmx_extended_crossover: parent size mismatch");
    Permutation c1 = p1, c2 = p2;
    // inv*[v] = position of value v
    std::vector<std::uint32_t> inv1(n), inv2(n);
    for (std::uint32_t pos = 0; pos < n; ++pos) {
        inv1[c1[pos]] = pos;
        inv2[c2[pos]] = pos;
    }
    const auto swap_tracked = [](Permutation& c, std::vector<std::uint32_t>& inv, std::uint32_t a,
                                 std::uint32_t b) {
        std::swap(c[a], c[b]);
        inv[c[a]] = a;
        inv[c[b]] = b;
    };
    for (std::size_t round = 0; round < n / 3; ++round) {
        const auto i = static_cast<std::uint32_t>(rng.index(n));
        const std::uint32_t j = inv2[c1[i]];
        const std::uint32_t k = inv1[c2[i]];
        swap_tracked(c1, inv1, i, j);
        swap_tracked(c2, inv2, i, k);
    }
    return {std::move(c1), std::move(c2)};
}

/// One uniformly chosen transposition of two distinct positions.
inline Permutation swap_mutation(const Permutation& g, Rng& rng) {
    const std::size_t n = g.size();
    if (n < 2)
        throw std::invalid_argument("swap_mutation: permutation must have length >= 2");
    Permutation out = g;
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a)
        ++b;
    std::swap(out[a], out[b]);
    return out;
}

/// Problem model binding a QAP instance to the engine: minimization,
/// extended-UPMX crossover, one swap mutation per offspring.
class QapModel {
  public:
    using Genotype = Permutation;
    static constexpr bool kMaximize = false;

    explicit QapModel(const QapInstance& inst) : inst_(&inst) {}

    double evaluate(const Genotype& g) const { return qap_evaluate(*inst_, g); }
    Genotype random_genotype(Rng& rng) const { return random_permutation(inst_->size(), rng); }
    std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, Rng& rng) const {
        return upmx_extended_crossover(a, b, rng);
    }
    Genotype mutate(const Genotype& g, Rng& rng) const { return swap_mutation(g, rng); }

    const QapInstance& instance() const noexcept { return *inst_; }

  private:
    const QapInstance* inst_;
};

} // namespace cealab::problems
