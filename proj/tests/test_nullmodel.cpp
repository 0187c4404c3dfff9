#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "recomb/common.hpp"
#include "recomb/corpus.hpp"
#include "recomb/nullmodel.hpp"
#include "recomb/pairs.hpp"
#include "recomb/synth.hpp"

using namespace recomb;

namespace {

struct RefSpec {
    std::string journal;
    int year;
};

Corpus corpus_from_specs(const std::vector<std::pair<int, std::vector<RefSpec>>>& articles) {
    std::string text;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        text += R"({"id":"a)" + std::to_string(i) + R"(","year":)" +
                std::to_string(articles[i].first) +
                R"(,"journal":"V","field":"F","countries":["US"],"n_authors":1,"refs":[)";
        for (std::size_t r = 0; r < articles[i].second.size(); ++r) {
            if (r) text += ",";
            text += R"({"journal":")" + articles[i].second[r].journal + R"(","year":)" +
                    std::to_string(articles[i].second[r].year) + "}";
        }
        text += "]}\n";
    }
    return parse_corpus_text(text);
}

// Brute-force null oracle: enumerates the full product of per-stratum slot
// permutations (each stratum's n! orderings equally likely) and accumulates
// exact per-pair moments. Independent of the library's exact_null path.
struct BruteNull {
    std::map<std::uint64_t, double> mean;
    std::map<std::uint64_t, double> sd;
};

BruteNull brute_force_null(const Corpus& corpus) {
    const auto strata = build_strata(corpus);
    std::vector<std::vector<std::vector<std::uint32_t>>> per_stratum_assignments;
    for (const auto& stratum : strata) {
        std::vector<std::size_t> perm(stratum.journals.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::vector<std::uint32_t>> assignments;
        do {
            std::vector<std::uint32_t> journals(perm.size());
            for (std::size_t i = 0; i < perm.size(); ++i) {
                journals[i] = stratum.journals[perm[i]];
            }
            assignments.push_back(std::move(journals));
        } while (std::next_permutation(perm.begin(), perm.end()));
        per_stratum_assignments.push_back(std::move(assignments));
    }

    std::map<std::uint64_t, double> sum;
    std::map<std::uint64_t, double> sumsq;
    double total = 0;

    std::vector<std::size_t> choice(strata.size(), 0);
    std::vector<std::uint32_t> assignment(corpus.n_slots());
    while (true) {
        for (std::size_t s = 0; s < strata.size(); ++s) {
            const auto& journals = per_stratum_assignments[s][choice[s]];
            for (std::size_t i = 0; i < strata[s].slots.size(); ++i) {
                assignment[strata[s].slots[i]] = journals[i];
            }
        }
        std::map<std::uint64_t, double> counts;
        for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
            for (std::size_t i = corpus.refs_begin(a); i < corpus.refs_end(a); ++i) {
                for (std::size_t j = i + 1; j < corpus.refs_end(a); ++j) {
                    ++counts[pack_pair(assignment[i], assignment[j])];
                }
            }
        }
        total += 1;
        for (const auto& [key, count] : counts) {
            sum[key] += count;
            sumsq[key] += count * count;
        }
        // advance the mixed-radix counter over strata permutations
        std::size_t s = 0;
        while (s < strata.size()) {
            if (++choice[s] < per_stratum_assignments[s].size()) break;
            choice[s] = 0;
            ++s;
        }
        if (s == strata.size()) break;
        if (strata.empty()) break;
    }

    BruteNull out;
    for (const auto& [key, total_count] : sum) {
        const double mu = total_count / total;
        const double var = sumsq[key] / total - mu * mu;
        out.mean[key] = mu;
        out.sd[key] = var <= 0 ? 0.0 : std::sqrt(var);
    }
    return out;
}

}  // namespace

TEST_SUITE("nullmodel") {

TEST_CASE("single-year refs form one stratum") {
    const Corpus c = corpus_from_specs(
        {{2005, {{"A", 2003}, {"B", 2003}}}, {2005, {{"C", 2003}, {"D", 2003}}}});
    const auto strata = build_strata(c);
    REQUIRE(strata.size() == 1);
    CHECK(strata[0].slots.size() == 4);
}

TEST_CASE("distinct cited years split strata") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2001}, {"B", 2003}}}});
    const auto strata = build_strata(c);
    CHECK(strata.size() == 2);
}

TEST_CASE("strata partition all reference slots") {
    SynthParams params;
    params.n_articles = 40;
    params.n_journals = 20;
    params.refs_mean = 6.0;
    params.citing_year_min = 2003;
    params.citing_year_max = 2005;
    params.seed = 17;
    const Corpus c = generate(params);
    const auto strata = build_strata(c);
    std::size_t total = 0;
    std::vector<bool> seen(c.n_slots(), false);
    for (const auto& s : strata) {
        total += s.slots.size();
        for (const std::uint32_t slot : s.slots) {
            CHECK_FALSE(seen[slot]);
            seen[slot] = true;
        }
    }
    CHECK(total == c.n_slots());
}

TEST_CASE("one-slot stratum keeps its observed journal") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2001}, {"B", 2003}}}});
    const auto strata = build_strata(c);
    std::vector<std::uint32_t> assignment(c.n_slots());
    shuffle_realization(strata, 99, 0, assignment);
    CHECK(assignment[0] == c.ref_journal[0]);
    CHECK(assignment[1] == c.ref_journal[1]);
}

TEST_CASE("shuffle preserves per-stratum journal multisets and article counts") {
    SynthParams params;
    params.n_articles = 30;
    params.n_journals = 12;
    params.refs_mean = 5.0;
    params.citing_year_min = 2004;
    params.citing_year_max = 2005;
    params.seed = 3;
    const Corpus c = generate(params);
    const auto strata = build_strata(c);
    std::vector<std::uint32_t> assignment(c.n_slots());
    for (std::uint32_t r = 0; r < 50; ++r) {
        shuffle_realization(strata, 7, r, assignment);
        for (const auto& s : strata) {
            std::vector<std::uint32_t> shuffled;
            for (const std::uint32_t slot : s.slots) shuffled.push_back(assignment[slot]);
            std::vector<std::uint32_t> original = s.journals;
            std::sort(shuffled.begin(), shuffled.end());
            std::sort(original.begin(), original.end());
            CHECK(shuffled == original);
        }
    }
}

TEST_CASE("R below 2 is rejected") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2003}, {"B", 2003}}}});
    const PairCounts counts = count_pairs(c);
    CHECK_THROWS_AS(null_distribution(c, counts, 1, 0), std::invalid_argument);
}

TEST_CASE("degenerate strata give mean equal to observed and zero sd") {
    // Every stratum holds copies of a single journal: shuffling is identity
    // on pair counts.
    const Corpus c = corpus_from_specs(
        {{2005, {{"A", 2003}, {"A", 2003}, {"B", 2002}, {"B", 2002}}}});
    const PairCounts counts = count_pairs(c);
    const NullStats nulls = null_distribution(c, counts, 10, 5);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        CHECK(nulls.mean[p] == doctest::Approx(counts.counts[p]));
        CHECK(nulls.sd[p] == 0.0);
    }
}

TEST_CASE("null stats are identical for any worker count") {
    SynthParams params;
    params.n_articles = 60;
    params.n_journals = 25;
    params.refs_mean = 6.0;
    params.seed = 21;
    const Corpus c = generate(params);
    const PairCounts counts = count_pairs(c);
    const NullStats one = null_distribution(c, counts, 8, 42, 1);
    const NullStats four = null_distribution(c, counts, 8, 42, 4);
    CHECK(one.realization_counts == four.realization_counts);
    CHECK(one.mean == four.mean);
    CHECK(one.sd == four.sd);
}

TEST_CASE("every permutation of a 3-slot stratum is equally likely") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2003}, {"B", 2003}, {"C", 2003}}}});
    const auto strata = build_strata(c);
    REQUIRE(strata.size() == 1);
    const int n_draws = 6000;
    std::map<std::vector<std::uint32_t>, int> frequency;
    std::vector<std::uint32_t> assignment(c.n_slots());
    for (int r = 0; r < n_draws; ++r) {
        shuffle_realization(strata, 777, static_cast<std::uint32_t>(r), assignment);
        frequency[assignment] += 1;
    }
    REQUIRE(frequency.size() == 6);
    const double expected = n_draws / 6.0;
    const double se = std::sqrt(n_draws * (1.0 / 6.0) * (5.0 / 6.0));
    for (const auto& [perm, count] : frequency) {
        CHECK(std::abs(count - expected) <= 3.0 * se);
    }
}

TEST_CASE("exact null: two single-ref articles have no pairs at all") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2003}}}, {2005, {{"B", 2003}}}});
    const PairCounts counts = count_pairs(c);
    CHECK(counts.n_pairs() == 0);
    const ExactNull exact = exact_null(c, counts);
    CHECK(exact.n_pairs == 0);
}

TEST_CASE("exact null: a forced pair has mean 1 and sd 0") {
    const Corpus c = corpus_from_specs({{2005, {{"A", 2003}, {"B", 2003}}}});
    const PairCounts counts = count_pairs(c);
    REQUIRE(counts.n_pairs() == 1);
    const ExactNull exact = exact_null(c, counts);
    CHECK(exact.mean[0] == doctest::Approx(1.0));
    CHECK(exact.sd[0] == doctest::Approx(0.0));
}

TEST_CASE("exact null matches 24-permutation enumeration on [A,B],[C,D]") {
    const Corpus c = corpus_from_specs(
        {{2005, {{"A", 2003}, {"B", 2003}}}, {2005, {{"C", 2003}, {"D", 2003}}}});
    const PairCounts counts = count_pairs(c);
    const ExactNull exact = exact_null(c, counts);
    const BruteNull brute = brute_force_null(c);

    // P((A,B) co-cited) = 1/3 across the 24 equally likely permutations.
    const std::uint64_t ab = pack_pair(c.journal_index("A"), c.journal_index("B"));
    CHECK(brute.mean.at(ab) == doctest::Approx(1.0 / 3.0));

    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        CHECK(exact.mean[p] == doctest::Approx(brute.mean.at(counts.keys[p])).epsilon(1e-12));
        CHECK(exact.sd[p] == doctest::Approx(brute.sd.at(counts.keys[p])).epsilon(1e-9));
    }
}

TEST_CASE("exact null matches brute force on random multi-stratum micro-corpora") {
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        SynthParams params;
        params.n_articles = 5;
        params.n_journals = 8;
        params.n_communities = 2;
        params.refs_mean = 2.4;
        params.refs_min = 1;
        params.cited_lag_max = 2;
        params.seed = seed;
        const Corpus c = generate(params);
        const auto strata = build_strata(c);
        bool feasible = true;
        for (const auto& s : strata) feasible = feasible && s.slots.size() <= 6;
        if (!feasible) continue;
        const PairCounts counts = count_pairs(c);
        const ExactNull exact = exact_null(c, counts);
        const BruteNull brute = brute_force_null(c);
        for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
            CHECK(exact.mean[p] ==
                  doctest::Approx(brute.mean.at(counts.keys[p])).epsilon(1e-10));
            CHECK(exact.sd[p] == doctest::Approx(brute.sd.at(counts.keys[p])).epsilon(1e-8));
        }
    }
}

TEST_CASE("monte carlo means converge to the exact null as R grows") {
    const Corpus c = corpus_from_specs({{2005,
                                         {{"A", 2003}, {"B", 2003}, {"C", 2002}}},
                                        {2005, {{"B", 2003}, {"C", 2003}}},
                                        {2005, {{"A", 2002}, {"C", 2002}}}});
    const PairCounts counts = count_pairs(c);
    const ExactNull exact = exact_null(c, counts);
    auto rms_error = [&](std::uint32_t R) {
        const NullStats nulls = null_distribution(c, counts, R, 4242);
        double err = 0;
        for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
            err += (nulls.mean[p] - exact.mean[p]) * (nulls.mean[p] - exact.mean[p]);
        }
        return std::sqrt(err / static_cast<double>(counts.n_pairs()));
    };
    const double coarse = rms_error(100);
    const double fine = rms_error(1600);
    // 16x realizations should shrink rms error by about 4; allow slack 2.
    CHECK(fine < coarse / 2.0);
}

TEST_CASE("oversized strata are rejected with the bound in the message") {
    std::vector<RefSpec> refs;
    for (int i = 0; i < 9; ++i) refs.push_back({"J" + std::to_string(i), 2003});
    const Corpus c = corpus_from_specs({{2005, refs}});
    const PairCounts counts = count_pairs(c);
    CHECK_THROWS_WITH_AS(exact_null(c, counts, 8), doctest::Contains("enumeration bound"),
                         std::runtime_error);
}

}  // TEST_SUITE
