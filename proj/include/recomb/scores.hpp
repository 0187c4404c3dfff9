#pragma once

// Pair z-scores against the Monte Carlo null, the marginal-based alternatives
// (K50, commonality), article-level novelty/conventionality summaries, the
// median split, the four-way classification, and figure-ready distributions.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recomb/corpus.hpp"
#include "recomb/nullmodel.hpp"
#include "recomb/pairs.hpp"

namespace recomb {

struct PairScoreTable {
    // Aligned with PairCounts dense pair ids.
    std::vector<double> z;
    std::vector<std::uint8_t> degenerate;  // 1: sd was 0 and 1/(2R) substituted
    std::uint32_t R = 0;

    std::size_t n_pairs() const { return z.size(); }
};

// z = (obs - mean) / sd; sd = 0 substitutes sd' = 1/(2R) and flags the pair.
// obs == mean with sd == 0 gives exactly z = 0.
PairScoreTable pair_zscores(const PairCounts& counts, const NullStats& nulls);

// K50 = (obs - E) / sqrt(S_i * S_j) with E = S_i * S_j / T; marginals only.
std::vector<double> k50_scores(const PairCounts& counts);

// commonality = obs / E, the observed-over-expected ratio.
std::vector<double> commonality_scores(const PairCounts& counts);

struct ArticleScore {
    std::size_t article = 0;  // ordinal into Corpus::articles
    std::uint32_t n_pairs = 0;
    double z10 = 0.0;
    double zmed = 0.0;
    bool scored = false;  // false: no scored pairs, excluded from profiles
    // Filled by classify():
    int novelty_bin = -1;
    int conventionality_bin = -1;
    int category = -1;  // 1=(HN,HC) 2=(HN,LC) 3=(LN,HC) 4=(LN,LC)

    double novelty() const { return -z10; }          // reverse-coded 10th pct
    double conventionality() const { return zmed; }  // median pair z
};

// Percentile of a sorted sample by linear interpolation between closest
// ranks: position p * (n - 1), zero-based.
double percentile_sorted(std::span<const double> sorted_values, double p);

// Per-article z10 / zmed over the article's pair z multiset (with
// multiplicity). Articles with zero scored pairs come back scored=false.
std::vector<ArticleScore> article_profiles(const Corpus& corpus, const PairCounts& counts,
                                           const PairScoreTable& scores, int workers = 1);

enum class SplitScope { corpus, field };

struct SplitThreshold {
    SplitScope scope = SplitScope::corpus;
    double corpus_value = 0.0;
    std::map<std::uint32_t, double> field_values;  // dense field -> threshold
    std::vector<std::uint32_t> empty_fields;       // fields with no scored articles

    double value_for(std::uint32_t field) const;
};

SplitThreshold split_threshold(const Corpus& corpus, std::span<const ArticleScore> profiles,
                               SplitScope scope);

// Core used by both the corpus path and the artifact (CSV) path.
SplitThreshold split_threshold_values(std::span<const double> zmeds,
                                      std::span<const std::uint32_t> fields, SplitScope scope,
                                      std::size_t n_fields);

struct BinAssignment {
    int novelty_bin = 0;
    int conventionality_bin = 0;
    int category = 4;
};

BinAssignment classify_one(double z10, double zmed, double threshold);

struct CategoryShares {
    std::array<std::size_t, 4> counts{};  // categories 1..4
    std::size_t total = 0;
    double share(int category) const {
        return total == 0 ? 0.0 : static_cast<double>(counts[category - 1]) / total;
    }
};

// Fills bins and category in-place; novelty_bin = [z10 < 0],
// conventionality_bin = [zmed >= threshold].
CategoryShares classify(const Corpus& corpus, std::span<ArticleScore> profiles,
                        const SplitThreshold& threshold);

// id,n_pairs,z10,zmed,novelty,novelty_bin,conventionality_bin,category
std::string article_scores_to_csv(const Corpus& corpus, std::span<const ArticleScore> profiles);

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    double probability = 0.0;
};

std::vector<HistogramBin> probability_histogram(std::span<const double> values,
                                                double bin_width);

struct GroupMean {
    int group = 0;  // e.g. country count
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

std::vector<GroupMean> group_means(std::span<const int> groups, std::span<const double> values);

struct CategoryCount {
    int group = 0;
    int category = 0;
    std::size_t n = 0;
};

std::vector<CategoryCount> category_counts(std::span<const int> groups,
                                           std::span<const int> categories);

std::string histogram_to_csv(std::span<const HistogramBin> bins);
std::string group_means_to_csv(std::span<const GroupMean> rows, std::string_view group_name);
std::string category_counts_to_csv(std::span<const CategoryCount> rows,
                                   std::string_view group_name);

}  // namespace recomb
