#include "recomb/pairs.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace recomb {

ArticlePairs article_pairs(std::span<const std::uint32_t> slot_journals,
                           const PairOptions& options) {
    ArticlePairs out;
    const std::size_t k = slot_journals.size();
    if (k < 2) {
        out.unpairable = true;
        return out;
    }
    // Small k: collect occurrences, then collapse. k is a reference count, so
    // C(k,2) stays comfortably in the hundreds.
    std::vector<std::uint64_t> occ;
    occ.reserve(k * (k - 1) / 2);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (options.self == SelfPairs::exclude && slot_journals[i] == slot_journals[j]) {
                continue;
            }
            occ.push_back(pack_pair(slot_journals[i], slot_journals[j]));
        }
    }
    std::sort(occ.begin(), occ.end());
    for (std::size_t i = 0; i < occ.size();) {
        std::size_t j = i;
        while (j < occ.size() && occ[j] == occ[i]) ++j;
        const auto mult = static_cast<std::uint32_t>(j - i);
        out.pairs.emplace_back(occ[i], options.mode == PairMode::dedup ? 1u : mult);
        i = j;
    }
    return out;
}

ArticlePairs article_pairs(const Corpus& corpus, std::size_t article,
                           const PairOptions& options) {
    return article_pairs(std::span<const std::uint32_t>(
                             corpus.ref_journal.data() + corpus.refs_begin(article),
                             corpus.refs_count(article)),
                         options);
}

PairCounts count_pairs(const Corpus& corpus, const PairOptions& options, int workers) {
    const std::size_t n_articles = corpus.articles.size();

    // Shard-local keyed tables; integer merges are exact and order-free, and
    // the final dense ids come from a global key sort, so any partition of the
    // articles yields identical output.
    const auto shards = static_cast<std::size_t>(std::max(1, workers));
    std::vector<std::map<std::uint64_t, std::uint64_t>> local(shards);
    std::vector<std::uint64_t> local_mass(shards, 0);

    const std::size_t chunk = n_articles == 0 ? 1 : (n_articles + shards - 1) / shards;
    parallel_tasks(shards, workers, [&](std::size_t s) {
        const std::size_t begin = s * chunk;
        const std::size_t end = std::min(n_articles, begin + chunk);
        auto& table = local[s];
        auto& mass = local_mass[s];
        for (std::size_t a = begin; a < end; ++a) {
            const ArticlePairs ap = article_pairs(corpus, a, options);
            for (const auto& [key, mult] : ap.pairs) {
                table[key] += mult;
                mass += mult;
            }
        }
    });

    std::map<std::uint64_t, std::uint64_t> merged;
    std::uint64_t total_mass = 0;
    for (std::size_t s = 0; s < local.size(); ++s) {
        for (const auto& [key, count] : local[s]) merged[key] += count;
        total_mass += local_mass[s];
    }

    PairCounts out;
    out.options = options;
    out.total_mass = total_mass;
    out.keys.reserve(merged.size());
    out.counts.reserve(merged.size());
    out.index.reserve(merged.size());
    out.journal_sums.assign(corpus.n_journals(), 0);
    for (const auto& [key, count] : merged) {
        if (count > std::numeric_limits<std::uint32_t>::max()) {
            throw std::runtime_error("pair count overflows 32 bits");
        }
        out.index.insert_or_get(key, static_cast<std::uint32_t>(out.keys.size()));
        out.keys.push_back(key);
        out.counts.push_back(static_cast<std::uint32_t>(count));
        out.journal_sums[pair_lo(key)] += count;
        out.journal_sums[pair_hi(key)] += count;  // self pairs get 2 here
    }
    out.T = 2 * out.total_mass;
    return out;
}

std::string pairs_to_csv(const Corpus& corpus, const PairCounts& counts) {
    // Canonical export order: identifier strings, row-wise min/max, sorted.
    std::vector<std::size_t> order(counts.n_pairs());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto row_names = [&](std::size_t i) {
        const std::string& x = corpus.journal_name(pair_lo(counts.keys[i]));
        const std::string& y = corpus.journal_name(pair_hi(counts.keys[i]));
        return x <= y ? std::pair<const std::string&, const std::string&>(x, y)
                      : std::pair<const std::string&, const std::string&>(y, x);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return row_names(l) < row_names(r);
    });
    std::ostringstream out;
    out << "journal_a,journal_b,count\n";
    for (std::size_t i : order) {
        const auto [a, b] = row_names(i);
        out << a << "," << b << "," << counts.counts[i] << "\n";
    }
    return std::move(out).str();
}

}  // namespace recomb
