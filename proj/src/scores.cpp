#include "recomb/scores.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "recomb/csv.hpp"

namespace recomb {

PairScoreTable pair_zscores(const PairCounts& counts, const NullStats& nulls) {
    if (nulls.n_pairs != counts.n_pairs()) {
        throw std::runtime_error("pair_zscores: null stats do not cover the observed pairs");
    }
    PairScoreTable table;
    table.R = nulls.R;
    table.z.resize(counts.n_pairs());
    table.degenerate.resize(counts.n_pairs());
    const double sigma_floor = 1.0 / (2.0 * nulls.R);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const double obs = counts.counts[p];
        const double mu = nulls.mean[p];
        const double sd = nulls.sd[p];
        if (sd == 0.0) {
            table.degenerate[p] = 1;
            table.z[p] = obs == mu ? 0.0 : (obs - mu) / sigma_floor;
        } else {
            table.degenerate[p] = 0;
            table.z[p] = (obs - mu) / sd;
        }
    }
    return table;
}

std::vector<double> k50_scores(const PairCounts& counts) {
    std::vector<double> out(counts.n_pairs());
    const double T = static_cast<double>(counts.T);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const double si = static_cast<double>(counts.journal_sums[pair_lo(counts.keys[p])]);
        const double sj = static_cast<double>(counts.journal_sums[pair_hi(counts.keys[p])]);
        const double expected = si * sj / T;
        out[p] = (static_cast<double>(counts.counts[p]) - expected) / std::sqrt(si * sj);
    }
    return out;
}

std::vector<double> commonality_scores(const PairCounts& counts) {
    std::vector<double> out(counts.n_pairs());
    const double T = static_cast<double>(counts.T);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const double si = static_cast<double>(counts.journal_sums[pair_lo(counts.keys[p])]);
        const double sj = static_cast<double>(counts.journal_sums[pair_hi(counts.keys[p])]);
        const double expected = si * sj / T;
        out[p] = static_cast<double>(counts.counts[p]) / expected;
    }
    return out;
}

double percentile_sorted(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) {
        throw std::invalid_argument("percentile of an empty sample");
    }
    const std::size_t n = sorted_values.size();
    if (n == 1) return sorted_values[0];
    const double pos = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return sorted_values[n - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::vector<ArticleScore> article_profiles(const Corpus& corpus, const PairCounts& counts,
                                           const PairScoreTable& scores, int workers) {
    if (scores.n_pairs() != counts.n_pairs()) {
        throw std::runtime_error("article_profiles: score table size mismatch");
    }
    std::vector<ArticleScore> profiles(corpus.articles.size());
    parallel_for_blocks(corpus.articles.size(), workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> zs;
        for (std::size_t a = begin; a < end; ++a) {
            ArticleScore& prof = profiles[a];
            prof.article = a;
            const ArticlePairs ap = article_pairs(corpus, a, counts.options);
            zs.clear();
            for (const auto& [key, mult] : ap.pairs) {
                const std::uint32_t* idx = counts.find(key);
                if (idx == nullptr) {
                    throw std::runtime_error("article_profiles: pair missing from counts");
                }
                for (std::uint32_t m = 0; m < mult; ++m) zs.push_back(scores.z[*idx]);
            }
            if (zs.empty()) {
                prof.scored = false;
                continue;
            }
            std::sort(zs.begin(), zs.end());
            prof.scored = true;
            prof.n_pairs = static_cast<std::uint32_t>(zs.size());
            prof.z10 = percentile_sorted(zs, 0.10);
            prof.zmed = percentile_sorted(zs, 0.50);
        }
    });
    return profiles;
}

double SplitThreshold::value_for(std::uint32_t field) const {
    if (scope == SplitScope::corpus) return corpus_value;
    const auto it = field_values.find(field);
    if (it == field_values.end()) {
        throw std::out_of_range("no split threshold for field index " + std::to_string(field));
    }
    return it->second;
}

SplitThreshold split_threshold_values(std::span<const double> zmeds,
                                      std::span<const std::uint32_t> fields, SplitScope scope,
                                      std::size_t n_fields) {
    SplitThreshold out;
    out.scope = scope;
    if (zmeds.empty()) throw std::runtime_error("split_threshold: no scored articles");
    if (scope == SplitScope::corpus) {
        std::vector<double> sorted(zmeds.begin(), zmeds.end());
        std::sort(sorted.begin(), sorted.end());
        out.corpus_value = percentile_sorted(sorted, 0.50);
        return out;
    }
    if (fields.size() != zmeds.size()) {
        throw std::invalid_argument("split_threshold: field labels missing");
    }
    std::map<std::uint32_t, std::vector<double>> by_field;
    for (std::size_t i = 0; i < zmeds.size(); ++i) by_field[fields[i]].push_back(zmeds[i]);
    for (std::uint32_t f = 0; f < n_fields; ++f) {
        auto it = by_field.find(f);
        if (it == by_field.end()) {
            out.empty_fields.push_back(f);  // omitted with warning upstream
            continue;
        }
        std::sort(it->second.begin(), it->second.end());
        out.field_values[f] = percentile_sorted(it->second, 0.50);
    }
    return out;
}

SplitThreshold split_threshold(const Corpus& corpus, std::span<const ArticleScore> profiles,
                               SplitScope scope) {
    std::vector<double> zmeds;
    std::vector<std::uint32_t> fields;
    for (const auto& p : profiles) {
        if (!p.scored) continue;
        zmeds.push_back(p.zmed);
        fields.push_back(corpus.article_field(p.article));
    }
    return split_threshold_values(zmeds, fields, scope, corpus.n_fields());
}

BinAssignment classify_one(double z10, double zmed, double threshold) {
    BinAssignment bin;
    bin.novelty_bin = z10 < 0.0 ? 1 : 0;             // strict: z10 == 0 is LN
    bin.conventionality_bin = zmed >= threshold ? 1 : 0;  // ties are HC
    if (bin.novelty_bin == 1) {
        bin.category = bin.conventionality_bin == 1 ? 1 : 2;
    } else {
        bin.category = bin.conventionality_bin == 1 ? 3 : 4;
    }
    return bin;
}

CategoryShares classify(const Corpus& corpus, std::span<ArticleScore> profiles,
                        const SplitThreshold& threshold) {
    CategoryShares shares;
    for (auto& p : profiles) {
        if (!p.scored) continue;
        const double cut = threshold.value_for(corpus.article_field(p.article));
        const BinAssignment bin = classify_one(p.z10, p.zmed, cut);
        p.novelty_bin = bin.novelty_bin;
        p.conventionality_bin = bin.conventionality_bin;
        p.category = bin.category;
        ++shares.counts[static_cast<std::size_t>(p.category - 1)];
        ++shares.total;
    }
    return shares;
}

std::string article_scores_to_csv(const Corpus& corpus, std::span<const ArticleScore> profiles) {
    std::ostringstream out;
    out << "id,n_pairs,z10,zmed,novelty,novelty_bin,conventionality_bin,category\n";
    for (const auto& p : profiles) {
        if (!p.scored) continue;
        out << csv_escape(corpus.articles[p.article].id) << "," << p.n_pairs << ","
            << format_double(p.z10) << "," << format_double(p.zmed) << ","
            << format_double(p.novelty()) << "," << p.novelty_bin << ","
            << p.conventionality_bin << "," << p.category << "\n";
    }
    return std::move(out).str();
}

std::vector<HistogramBin> probability_histogram(std::span<const double> values,
                                                double bin_width) {
    if (values.empty()) return {};
    if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
    double lo = values[0];
    double hi = values[0];
    for (const double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const auto first = static_cast<long long>(std::floor(lo / bin_width));
    const auto last = static_cast<long long>(std::floor(hi / bin_width));
    std::vector<std::size_t> counts(static_cast<std::size_t>(last - first + 1), 0);
    for (const double v : values) {
        auto bin = static_cast<long long>(std::floor(v / bin_width)) - first;
        ++counts[static_cast<std::size_t>(bin)];
    }
    std::vector<HistogramBin> bins;
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        HistogramBin b;
        b.left = static_cast<double>(first + static_cast<long long>(i)) * bin_width;
        b.right = b.left + bin_width;
        b.probability = static_cast<double>(counts[i]) / n;
        bins.push_back(b);
    }
    return bins;
}

std::vector<GroupMean> group_means(std::span<const int> groups, std::span<const double> values) {
    if (groups.size() != values.size()) throw std::invalid_argument("group/value size mismatch");
    std::map<int, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        auto& [sum, n] = sums[groups[i]];
        sum += values[i];
        ++n;
    }
    std::vector<GroupMean> out;
    for (const auto& [g, sn] : sums) {
        GroupMean gm;
        gm.group = g;
        gm.n = sn.second;
        gm.mean = sn.first / static_cast<double>(sn.second);
        double ss = 0.0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (groups[i] == g) {
                const double d = values[i] - gm.mean;
                ss += d * d;
            }
        }
        gm.stderr_ = gm.n > 1 ? std::sqrt(ss / static_cast<double>(gm.n - 1)) /
                                    std::sqrt(static_cast<double>(gm.n))
                              : 0.0;
        out.push_back(gm);
    }
    return out;
}

std::vector<CategoryCount> category_counts(std::span<const int> groups,
                                           std::span<const int> categories) {
    if (groups.size() != categories.size()) {
        throw std::invalid_argument("group/category size mismatch");
    }
    std::map<std::pair<int, int>, std::size_t> counts;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        ++counts[{groups[i], categories[i]}];
    }
    std::vector<CategoryCount> out;
    for (const auto& [key, n] : counts) out.push_back({key.first, key.second, n});
    return out;
}

std::string histogram_to_csv(std::span<const HistogramBin> bins) {
    std::ostringstream out;
    out << "bin_left,bin_right,probability\n";
    for (const auto& b : bins) {
        out << format_double(b.left) << "," << format_double(b.right) << ","
            << format_double(b.probability) << "\n";
    }
    return std::move(out).str();
}

std::string group_means_to_csv(std::span<const GroupMean> rows, std::string_view group_name) {
    std::ostringstream out;
    out << group_name << ",mean,stderr,n\n";
    for (const auto& r : rows) {
        out << r.group << "," << format_double(r.mean) << "," << format_double(r.stderr_) << ","
            << r.n << "\n";
    }
    return std::move(out).str();
}

std::string category_counts_to_csv(std::span<const CategoryCount> rows,
                                   std::string_view group_name) {
    std::ostringstream out;
    out << group_name << ",category,n\n";
    for (const auto& r : rows) out << r.group << "," << r.category << "," << r.n << "\n";
    return std::move(out).str();
}

}  // namespace recomb
