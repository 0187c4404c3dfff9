#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "recomb/common.hpp"
#include "recomb/corpus.hpp"
#include "recomb/nullmodel.hpp"
#include "recomb/pairs.hpp"
#include "recomb/scores.hpp"
#include "recomb/synth.hpp"

using namespace recomb;

namespace {

Corpus corpus_from_refs(const std::vector<std::vector<std::string>>& articles) {
    std::string text;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        text += R"({"id":"a)" + std::to_string(i) +
                R"(","year":2005,"journal":"V","field":"F","countries":["US"],"n_authors":1,"refs":[)";
        for (std::size_t r = 0; r < articles[i].size(); ++r) {
            if (r) text += ",";
            text += R"({"journal":")" + articles[i][r] + R"(","year":2003})";
        }
        text += "]}\n";
    }
    return parse_corpus_text(text);
}

// Hand-rolled NullStats with given means/sds for the observed pairs.
NullStats fake_nulls(const PairCounts& counts, const std::vector<double>& mean,
                     const std::vector<double>& sd, std::uint32_t R = 10) {
    NullStats nulls;
    nulls.R = R;
    nulls.n_pairs = counts.n_pairs();
    nulls.mean = mean;
    nulls.sd = sd;
    return nulls;
}

}  // namespace

TEST_SUITE("scores") {

TEST_CASE("z-score formula and the sigma-zero substitution") {
    const Corpus c = corpus_from_refs({{"A", "B"}});
    PairCounts counts = count_pairs(c);
    REQUIRE(counts.n_pairs() == 1);

    SUBCASE("plain formula") {
        counts.counts[0] = 5;
        const PairScoreTable t = pair_zscores(counts, fake_nulls(counts, {3.0}, {1.0}));
        CHECK(t.z[0] == doctest::Approx(2.0));
        CHECK(t.degenerate[0] == 0);
    }
    SUBCASE("centered degenerate gives exactly zero") {
        counts.counts[0] = 4;
        const PairScoreTable t = pair_zscores(counts, fake_nulls(counts, {4.0}, {0.0}));
        CHECK(t.z[0] == 0.0);
        CHECK(t.degenerate[0] == 1);
    }
    SUBCASE("off-center degenerate uses sigma = 1/(2R)") {
        counts.counts[0] = 3;
        const PairScoreTable t = pair_zscores(counts, fake_nulls(counts, {1.0}, {0.0}, 10));
        CHECK(t.z[0] == doctest::Approx(40.0));  // (3-1)/(1/20)
        CHECK(t.degenerate[0] == 1);
    }
}

TEST_CASE("z-scores require null coverage of every observed pair") {
    const Corpus c = corpus_from_refs({{"A", "B"}});
    const PairCounts counts = count_pairs(c);
    NullStats bad;
    bad.R = 10;
    bad.n_pairs = 0;
    CHECK_THROWS_AS(pair_zscores(counts, bad), std::runtime_error);
}

TEST_CASE("k50 on the smallest corpus") {
    const Corpus c = corpus_from_refs({{"A", "B"}});
    const PairCounts counts = count_pairs(c);
    const std::vector<double> k50 = k50_scores(counts);
    // S_A = S_B = 1, T = 2, E = 0.5, K50 = (1 - 0.5)/sqrt(1) = 0.5
    CHECK(k50[0] == doctest::Approx(0.5));
    const std::vector<double> commonality = commonality_scores(counts);
    CHECK(commonality[0] == doctest::Approx(2.0));
}

TEST_CASE("k50 and commonality match a dense-matrix oracle on a random corpus") {
    SynthParams params;
    params.n_articles = 20;
    params.n_journals = 10;
    params.refs_mean = 4.0;
    params.seed = 31;
    const Corpus c = generate(params);
    const PairCounts counts = count_pairs(c);
    const std::vector<double> k50 = k50_scores(counts);
    const std::vector<double> commonality = commonality_scores(counts);

    // Dense recomputation: build the full symmetric count matrix, derive row
    // sums and totals from it, and apply the definitions directly.
    const std::size_t J = c.n_journals();
    std::vector<std::vector<double>> m(J, std::vector<double>(J, 0.0));
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const std::uint32_t a = pair_lo(counts.keys[p]);
        const std::uint32_t b = pair_hi(counts.keys[p]);
        m[a][b] += counts.counts[p];
        if (a != b) m[b][a] += counts.counts[p];
        else m[a][b] += counts.counts[p];  // diagonal holds twice the self count
    }
    std::vector<double> row_sum(J, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < J; ++i) {
        for (std::size_t j = 0; j < J; ++j) row_sum[i] += m[i][j];
        grand += row_sum[i];
    }
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const std::uint32_t a = pair_lo(counts.keys[p]);
        const std::uint32_t b = pair_hi(counts.keys[p]);
        const double expected = row_sum[a] * row_sum[b] / grand;
        const double obs = counts.counts[p];
        CHECK(k50[p] ==
              doctest::Approx((obs - expected) / std::sqrt(row_sum[a] * row_sum[b]))
                  .epsilon(1e-12));
        CHECK(commonality[p] == doctest::Approx(obs / expected).epsilon(1e-12));
    }
}

TEST_CASE("k50 sign, commonality ratio, and the centered case agree") {
    SynthParams params;
    params.n_articles = 25;
    params.n_journals = 8;
    params.n_communities = 4;
    params.refs_mean = 4.0;
    params.seed = 77;
    const Corpus c = generate(params);
    const PairCounts counts = count_pairs(c);
    const std::vector<double> k50 = k50_scores(counts);
    const std::vector<double> commonality = commonality_scores(counts);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        if (k50[p] > 0) CHECK(commonality[p] > 1.0);
        if (k50[p] < 0) CHECK(commonality[p] < 1.0);
        if (std::abs(k50[p]) < 1e-15) CHECK(commonality[p] == doctest::Approx(1.0));
    }
}

TEST_CASE("percentile interpolation on the documented examples") {
    const std::vector<double> single = {4.0};
    CHECK(percentile_sorted(single, 0.10) == 4.0);
    CHECK(percentile_sorted(single, 0.50) == 4.0);
    const std::vector<double> three = {-2.0, 0.0, 2.0};
    CHECK(percentile_sorted(three, 0.50) == doctest::Approx(0.0));
    // position 0.1 * (3-1) = 0.2 -> -2 + 0.2 * (0 - (-2)) = -1.6
    CHECK(percentile_sorted(three, 0.10) == doctest::Approx(-1.6));
    const std::vector<double> constant = {3.0, 3.0, 3.0, 3.0};
    CHECK(percentile_sorted(constant, 0.10) == 3.0);
    CHECK(percentile_sorted(constant, 0.50) == 3.0);
}

TEST_CASE("article profiles use the pair multiset with multiplicity") {
    const Corpus c = corpus_from_refs({{"A", "A", "B"}});
    const PairCounts counts = count_pairs(c);
    // pair (A,A) mult 1, (A,B) mult 2
    std::vector<double> mean(counts.n_pairs(), 0.0);
    std::vector<double> sd(counts.n_pairs(), 1.0);
    PairCounts& mutable_counts = const_cast<PairCounts&>(counts);
    const std::uint32_t aa = *counts.find(pack_pair(c.journal_index("A"), c.journal_index("A")));
    const std::uint32_t ab = *counts.find(pack_pair(c.journal_index("A"), c.journal_index("B")));
    mutable_counts.counts[aa] = 9;  // z = 9
    mutable_counts.counts[ab] = 1;  // z = 1
    const PairScoreTable t = pair_zscores(counts, fake_nulls(counts, mean, sd));
    const auto profiles = article_profiles(c, counts, t);
    REQUIRE(profiles.size() == 1);
    CHECK(profiles[0].scored);
    CHECK(profiles[0].n_pairs == 3);  // multiset {9, 1, 1}
    CHECK(profiles[0].zmed == doctest::Approx(1.0));
    // sorted {1,1,9}: position 0.2 -> 1.0
    CHECK(profiles[0].z10 == doctest::Approx(1.0));
    CHECK(profiles[0].novelty() == doctest::Approx(-1.0));
}

TEST_CASE("empty-ref articles are excluded with a flag") {
    const Corpus c = corpus_from_refs({{"A", "B"}, {}});
    const PairCounts counts = count_pairs(c);
    const PairScoreTable t = pair_zscores(
        counts, fake_nulls(counts, std::vector<double>(counts.n_pairs(), 0.0),
                           std::vector<double>(counts.n_pairs(), 1.0)));
    const auto profiles = article_profiles(c, counts, t);
    CHECK(profiles[0].scored);
    CHECK_FALSE(profiles[1].scored);
}

TEST_CASE("split thresholds: odd, even, per-field") {
    std::vector<ArticleScore> profiles(4);
    for (std::size_t i = 0; i < 4; ++i) {
        profiles[i].scored = true;
        profiles[i].zmed = static_cast<double>(i + 1);  // 1,2,3,4
    }
    const std::vector<std::uint32_t> fields = {0, 0, 1, 1};
    SUBCASE("odd count median") {
        const auto t = split_threshold_values(std::vector<double>{1, 2, 3}, {},
                                              SplitScope::corpus, 0);
        CHECK(t.corpus_value == doctest::Approx(2.0));
    }
    SUBCASE("even count median interpolates") {
        const auto t = split_threshold_values(std::vector<double>{1, 2, 3, 4}, {},
                                              SplitScope::corpus, 0);
        CHECK(t.corpus_value == doctest::Approx(2.5));
    }
    SUBCASE("per-field thresholds are per-set medians") {
        const std::vector<double> zmeds = {1, 2, 3, 4};
        const auto t = split_threshold_values(zmeds, fields, SplitScope::field, 2);
        CHECK(t.field_values.at(0) == doctest::Approx(1.5));
        CHECK(t.field_values.at(1) == doctest::Approx(3.5));
    }
    SUBCASE("fields without articles are reported") {
        const std::vector<double> zmeds = {1, 2, 3, 4};
        const auto t = split_threshold_values(zmeds, fields, SplitScope::field, 3);
        CHECK(t.empty_fields == std::vector<std::uint32_t>{2});
    }
}

TEST_CASE("classification rules at the boundaries") {
    // HN requires strictly negative z10; conventionality ties count as high.
    CHECK(classify_one(-1.2, 10.0, 5.0).category == 1);
    CHECK(classify_one(0.0, 1.0, 5.0).category == 4);  // z10 == 0 is LN
    CHECK(classify_one(0.0, 5.0, 5.0).conventionality_bin == 1);
    CHECK(classify_one(-0.1, 4.9, 5.0).category == 2);
    CHECK(classify_one(0.1, 5.1, 5.0).category == 3);
}

TEST_CASE("randomized profiles: bins follow the coding rules, categories partition") {
    rng::Stream stream(2024, {1});
    std::vector<ArticleScore> profiles(500);
    std::vector<double> zmeds;
    for (auto& p : profiles) {
        p.scored = true;
        p.z10 = (stream.uniform01() - 0.5) * 8.0;
        p.zmed = p.z10 + stream.uniform01() * 6.0;
        zmeds.push_back(p.zmed);
    }
    const auto threshold = split_threshold_values(zmeds, {}, SplitScope::corpus, 0);
    std::array<std::size_t, 4> counts{};
    std::size_t hc = 0;
    for (auto& p : profiles) {
        const auto bin = classify_one(p.z10, p.zmed, threshold.corpus_value);
        CHECK((bin.novelty_bin == 1) == (p.z10 < 0.0));
        CHECK((bin.novelty_bin == 1) == (-p.z10 > 0.0));  // reverse coding
        CHECK((bin.conventionality_bin == 1) == (p.zmed >= threshold.corpus_value));
        REQUIRE(bin.category >= 1);
        REQUIRE(bin.category <= 4);
        ++counts[static_cast<std::size_t>(bin.category - 1)];
        hc += static_cast<std::size_t>(bin.conventionality_bin);
    }
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] == profiles.size());

    // Median-split balance: share of HC in [0.5, 0.5 + ties/N].
    std::size_t ties = 0;
    for (const double z : zmeds) {
        if (z == threshold.corpus_value) ++ties;
    }
    const double share = static_cast<double>(hc) / static_cast<double>(profiles.size());
    CHECK(share >= 0.5 - 1e-12);
    CHECK(share <= 0.5 + static_cast<double>(ties + 1) / profiles.size() + 1e-12);
}

TEST_CASE("global shift: conventionality bins invariant, novelty bins not") {
    rng::Stream stream(55, {2});
    std::vector<double> z10(300);
    std::vector<double> zmed(300);
    for (std::size_t i = 0; i < z10.size(); ++i) {
        z10[i] = (stream.uniform01() - 0.6) * 4.0;
        zmed[i] = z10[i] + stream.uniform01() * 3.0;
    }
    const double shift = 2.5;
    std::vector<double> zmed_shifted = zmed;
    for (auto& z : zmed_shifted) z += shift;
    const auto t0 = split_threshold_values(zmed, {}, SplitScope::corpus, 0);
    const auto t1 = split_threshold_values(zmed_shifted, {}, SplitScope::corpus, 0);
    CHECK(t1.corpus_value == doctest::Approx(t0.corpus_value + shift));
    bool novelty_changed = false;
    for (std::size_t i = 0; i < z10.size(); ++i) {
        const auto before = classify_one(z10[i], zmed[i], t0.corpus_value);
        const auto after = classify_one(z10[i] + shift, zmed_shifted[i], t1.corpus_value);
        CHECK(before.conventionality_bin == after.conventionality_bin);
        if (before.novelty_bin != after.novelty_bin) novelty_changed = true;
    }
    CHECK(novelty_changed);  // the sign test does not move with the threshold
}

TEST_CASE("probability histogram normalizes and handles the degenerate case") {
    const std::vector<double> constant(25, 0.0);
    const auto bins = probability_histogram(constant, 0.5);
    REQUIRE(bins.size() == 1);
    CHECK(bins[0].probability == doctest::Approx(1.0));

    rng::Stream stream(9, {3});
    std::vector<double> values(1000);
    for (auto& v : values) v = (stream.uniform01() - 0.5) * 20.0;
    double total = 0.0;
    for (const auto& b : probability_histogram(values, 1.0)) total += b.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("group means match a direct group-by recomputation") {
    rng::Stream stream(123, {4});
    std::vector<int> groups(400);
    std::vector<double> values(400);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i] = static_cast<int>(stream.bounded(5)) + 1;
        values[i] = stream.uniform01() * 10.0;
    }
    const auto means = group_means(groups, values);
    for (const auto& gm : means) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (groups[i] == gm.group) {
                sum += values[i];
                ++n;
            }
        }
        CHECK(gm.n == n);
        CHECK(gm.mean == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
    }
}

TEST_CASE("article scores csv has the documented columns") {
    const Corpus c = corpus_from_refs({{"A", "B"}});
    const PairCounts counts = count_pairs(c);
    const PairScoreTable t =
        pair_zscores(counts, fake_nulls(counts, {0.5}, {0.25}));
    auto profiles = article_profiles(c, counts, t);
    const auto threshold = split_threshold(c, profiles, SplitScope::corpus);
    classify(c, std::span<ArticleScore>(profiles), threshold);
    const std::string csv = article_scores_to_csv(c, profiles);
    CHECK(csv.rfind("id,n_pairs,z10,zmed,novelty,novelty_bin,conventionality_bin,category\n",
                    0) == 0);
    CHECK(csv.find("a0,1,2,2,-2,0,1,3") != std::string::npos);
}

}  // TEST_SUITE
