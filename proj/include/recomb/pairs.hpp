#pragma once

// Journal co-citation pairs. Every article contributes all C(k,2) unordered
// combinations of its k reference slots; counts aggregate over the corpus
// together with the per-journal marginals that the closed-form metrics need.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recomb/common.hpp"
#include "recomb/corpus.hpp"

namespace recomb {

enum class PairMode {
    multiset,  // slot combinations with multiplicity (default)
    dedup,     // each distinct pair at most once per article
};

enum class SelfPairs {
    include,  // (j,j) pairs from repeated journals are counted (default)
    exclude,
};

struct PairOptions {
    PairMode mode = PairMode::multiset;
    SelfPairs self = SelfPairs::include;
};

// One pair occurrence set for a single article: canonical packed keys with
// multiplicities. Empty (and flagged) when the article has < 2 slots.
struct ArticlePairs {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> pairs;  // key -> multiplicity
    bool unpairable = false;
};

ArticlePairs article_pairs(std::span<const std::uint32_t> slot_journals,
                           const PairOptions& options = {});
ArticlePairs article_pairs(const Corpus& corpus, std::size_t article,
                           const PairOptions& options = {});

struct PairCounts {
    PairOptions options;

    // Observed pairs, keys ascending; `index` maps key -> position in `keys`.
    std::vector<std::uint64_t> keys;
    std::vector<std::uint32_t> counts;
    PairIndexMap index;

    // Marginals: every pair occurrence adds 1 to each endpoint (2 to a self
    // pair's journal), so T = 2 * total_mass.
    std::vector<std::uint64_t> journal_sums;
    std::uint64_t total_mass = 0;
    std::uint64_t T = 0;

    std::size_t n_pairs() const { return keys.size(); }
    const std::uint32_t* find(std::uint64_t key) const { return index.find(key); }
};

PairCounts count_pairs(const Corpus& corpus, const PairOptions& options = {},
                       int workers = 1);

// journal_a,journal_b,count with identifier strings; rows in canonical order.
std::string pairs_to_csv(const Corpus& corpus, const PairCounts& counts);

}  // namespace recomb
