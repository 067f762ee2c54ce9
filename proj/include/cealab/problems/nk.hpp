#pragma once

// NK fitness landscapes: tunable-ruggedness functions on binary strings of
// length n. Each locus i owns a component table of 2^(k+1) values uniform in
// [0,1], indexed by the bit at i followed by the bits at its k linked loci;
// fitness is the mean of the n component lookups. Maximized.
//
// Link layouts:
//   adjacent - the k nearest loci with periodic boundaries, taken in offset
//              order +1, -1, +2, -2, ... (the right side gets the extra
//              locus when k is odd);
//   random   - k distinct loci drawn uniformly from {0..n-1} \ {i}.
//
// Component keys pack the relevant bits most-significant-first:
//   key = x_i, then for each linked locus j in stored order key = key*2 + x_j.
//
// Landscapes persist to a self-describing JSON file (see save/load) carrying
// n, k, kind, seed, links and tables, so a run replays bit-for-bit on any
// machine regardless of how the landscape was first generated.

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cealab/errors.hpp"
#include "cealab/rng.hpp"

namespace cealab::problems {

using Bitstring = std::vector<std::uint8_t>;

enum class NkNeighborhood { adjacent, random };

inline std::string to_string(NkNeighborhood kind) {
    return kind == NkNeighborhood::adjacent ? "adjacent" : "random";
}

inline NkNeighborhood nk_neighborhood_from_string(const std::string& s) {
    if (s == "adjacent")
        return NkNeighborhood::adjacent;
    if (s == "random")
        return NkNeighborhood::random;
    throw InputError("unknown NK neighborhood kind \"" + s + "\" (expected adjacent|random)");
}

class NkLandscape {
  public:
    NkLandscape(std::uint32_t n, std::uint32_t k, NkNeighborhood kind, std::uint64_t seed,
                std::vector<std::vector<std::uint32_t>> links,
                std::vector<std::vector<double>> tables)
        : n_(n), k_(k), kind_(kind), seed_(seed), links_(std::move(links)),
          tables_(std::move(tables)) {
        validate();
    }

    std::uint32_t n() const noexcept { return n_; }
    std::uint32_t k() const noexcept { return k_; }
    NkNeighborhood kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::vector<std::uint32_t>>& links() const noexcept { return links_; }
    const std::vector<std::vector<double>>& tables() const noexcept { return tables_; }

    bool operator==(const NkLandscape&) const = default;

  private:
    void validate() const {
        if (n_ == 0 || k_ > n_ - 1)
            throw std::invalid_argument("NkLandscape: need 0 <= k <= n-1");
        if (links_.size() != n_ || tables_.size() != n_)
            throw std::invalid_argument("NkLandscape: links/tables must have n rows");
        const std::size_t table_size = std::size_t{1} << (k_ + 1);
        for (std::uint32_t i = 0; i < n_; ++i) {
            if (links_[i].size() != k_)
                throw std::invalid_argument("NkLandscape: locus " + std::to_string(i) +
                                            " must link exactly k loci");
            std::vector<bool> seen(n_, false);
            for (auto l : links_[i]) {
                if (l >= n_ || l == i || seen[l])
                    throw std::invalid_argument("NkLandscape: invalid link at locus " +
                                                std::to_string(i));
                seen[l] = true;
            }
            if (tables_[i].size() != table_size)
                throw std::invalid_argument("NkLandscape: table at locus " + std::to_string(i) +
                                            " must have 2^(k+1) entries");
            for (double y : tables_[i])
                if (!(y >= 0.0 && y <= 1.0))
                    throw std::invalid_argument("NkLandscape: table entries must lie in [0,1]");
        }
    }

    std::uint32_t n_;
    std::uint32_t k_;
    NkNeighborhood kind_;
    std::uint64_t seed_;
    std::vector<std::vector<std::uint32_t>> links_; // per locus, k linked loci
    std::vector<std::vector<double>> tables_;       // per locus, 2^(k+1) component values
};

/// Deterministically generate a landscape from (n, k, kind, seed). Per locus
/// the links are produced first (random kind only), then the table, all from
/// one seed-derived stream.
inline NkLandscape nk_generate(std::uint32_t n, std::uint32_t k, NkNeighborhood kind,
                               std::uint64_t seed) {
    if (n == 0 || k > n - 1)
        throw std::invalid_argument("nk_generate: need 0 <= k <= n-1, got n=" + std::to_string(n) +
                                    " k=" + std::to_string(k));
    Rng rng(derive_seed(seed, {0x6e6bU})); // landscape-generation stream
    std::vector<std::vector<std::uint32_t>> links(n);
    std::vector<std::vector<double>> tables(n);
    const std::size_t table_size = std::size_t{1} << (k + 1);

    for (std::uint32_t i = 0; i < n; ++i) {
        auto& l = links[i];
        l.reserve(k);
        if (kind == NkNeighborhood::adjacent) {
            for (std::uint32_t d = 1; l.size() < k; ++d) {
                const std::uint32_t right = (i + d) % n;
                const std::uint32_t left = (i + n - d) % n;
                l.push_back(right);
                if (l.size() < k && left != right)
                    l.push_back(left);
            }
        } else {
            std::vector<std::uint32_t> pool;
            pool.reserve(n - 1);
            for (std::uint32_t j = 0; j < n; ++j)
                if (j != i)
                    pool.push_back(j);
            for (std::uint32_t taken = 0; taken < k; ++taken) {
                const std::size_t pick = taken + rng.index(pool.size() - taken);
                std::swap(pool[taken], pool[pick]);
                l.push_back(pool[taken]);
            }
        }
        auto& t = tables[i];
        t.resize(table_size);
        for (auto& y : t)
            y = rng.next_double();
    }
    return NkLandscape(n, k, kind, seed, std::move(links), std::move(tables));
}

/// Mean of the n component lookups; always in [0, 1]. Maximized.
inline double nk_evaluate(const NkLandscape& L, const Bitstring& g) {
    if (g.size() != L.n())
        throw std::invalid_argument("nk_evaluate: genotype length mismatch");
    double sum = 0.0;
    for (std::uint32_t i = 0; i < L.n(); ++i) {
        std::size_t key = g[i];
        for (auto j : L.links()[i])
            key = (key << 1) | g[j];
        sum += L.tables()[i][key];
    }
    return sum / double(L.n());
}

/// One-point crossover: cut uniform in {1..n-1}, suffixes exchanged.
inline std::pair<Bitstring, Bitstring> one_point_crossover(const Bitstring& a, const Bitstring& b,
                                                           Rng& rng) {
    const std::size_t n = a.size();
    if (b.size() != n)
        throw std::invalid_argument("one_point_crossover: parent length mismatch");
    Bitstring c1 = a, c2 = b;
    if (n < 2)
        return {std::move(c1), std::move(c2)};
    const std::size_t cut = 1 + rng.index(n - 1);
    for (std::size_t i = cut; i < n; ++i)
        std::swap(c1[i], c2[i]);
    return {std::move(c1), std::move(c2)};
}

/// Independent per-bit flip with probability 1/n.
inline Bitstring bitflip_mutation(const Bitstring& g, Rng& rng) {
    Bitstring out = g;
    const double rate = 1.0 / double(out.size());
    for (auto& bit : out)
        if (rng.chance(rate))
            bit ^= 1u;
    return out;
}

inline Bitstring random_bitstring(std::size_t n, Rng& rng) {
    Bitstring g(n);
    for (auto& bit : g)
        bit = static_cast<std::uint8_t>(rng.below(2));
    return g;
}

/// JSON persistence. Field names: format, n, k, kind, seed, links, tables.
inline void nk_save(const NkLandscape& L, std::ostream& out) {
    nlohmann::json j;
    j["format"] = "cealab-nk-v1";
    j["n"] = L.n();
    j["k"] = L.k();
    j["kind"] = to_string(L.kind());
    j["seed"] = L.seed();
    j["links"] = L.links();
    j["tables"] = L.tables();
    out << j.dump(1, '\t') << '\n';
}

inline NkLandscape nk_load(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("NK landscape file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "cealab-nk-v1")
            throw InputError("NK landscape file: unknown format tag");
        return NkLandscape(j.at("n").get<std::uint32_t>(), j.at("k").get<std::uint32_t>(),
                           nk_neighborhood_from_string(j.at("kind").get<std::string>()),
                           j.at("seed").get<std::uint64_t>(),
                           j.at("links").get<std::vector<std::vector<std::uint32_t>>>(),
                           j.at("tables").get<std::vector<std::vector<double>>>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("NK landscape file: missing or mistyped field: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("NK landscape file: ") + e.what());
    }
}

/// Problem model binding a landscape to the engine: maximization, one-point
/// crossover, per-bit flip mutation at rate 1/n.
class NkModel {
  public:
    using Genotype = Bitstring;
    static constexpr bool kMaximize = true;

    explicit NkModel(const NkLandscape& L) : landscape_(&L) {}

    double evaluate(const Genotype& g) const { return nk_evaluate(*landscape_, g); }
    Genotype random_genotype(Rng& rng) const { return random_bitstring(landscape_->n(), rng); }
    std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, Rng& rng) const {
        return one_point_crossover(a, b, rng);
    }
    Genotype mutate(const Genotype& g, Rng& rng) const { return bitflip_mutation(g, rng); }

    const NkLandscape& landscape() const noexcept { return *landscape_; }

  private:
    const NkLandscape* landscape_;
};

} // namespace cealab::problems
