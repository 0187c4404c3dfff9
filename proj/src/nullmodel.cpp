#include "recomb/nullmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "recomb/common.hpp"
#include "recomb/csv.hpp"

namespace recomb {

std::vector<ShuffleStratum> build_strata(const Corpus& corpus) {
    std::map<std::pair<int, int>, std::size_t> key_to_stratum;
    std::vector<ShuffleStratum> strata;
    for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
        const int citing = corpus.articles[a].year;
        for (std::size_t s = corpus.refs_begin(a); s < corpus.refs_end(a); ++s) {
            const int cited = corpus.ref_year[s];
            auto [it, inserted] =
                key_to_stratum.try_emplace({citing, cited}, strata.size());
            if (inserted) {
                strata.push_back(ShuffleStratum{citing, cited, {}, {}});
            }
            auto& stratum = strata[it->second];
            stratum.slots.push_back(static_cast<std::uint32_t>(s));
            stratum.journals.push_back(corpus.ref_journal[s]);
        }
    }
    // Deterministic order: sort by key. Slot lists are already in file order.
    std::vector<ShuffleStratum> sorted;
    sorted.reserve(strata.size());
    for (const auto& [key, idx] : key_to_stratum) sorted.push_back(std::move(strata[idx]));
    return sorted;
}

void shuffle_realization(std::span<const ShuffleStratum> strata, std::uint64_t seed,
                         std::uint32_t realization, std::span<std::uint32_t> assignment) {
    std::vector<std::uint32_t> buffer;
    for (const auto& stratum : strata) {
        buffer.assign(stratum.journals.begin(), stratum.journals.end());
        // Stream keyed on (stratum key, realization): the permutation depends
        // only on these plus the seed, never on scheduling.
        rng::Stream stream(seed,
                           {static_cast<std::uint64_t>(static_cast<std::int64_t>(stratum.citing_year)),
                            static_cast<std::uint64_t>(static_cast<std::int64_t>(stratum.cited_year)),
                            static_cast<std::uint64_t>(realization)});
        stream.shuffle(std::span<std::uint32_t>(buffer));
        for (std::size_t i = 0; i < stratum.slots.size(); ++i) {
            assignment[stratum.slots[i]] = buffer[i];
        }
    }
}

namespace {

// Applies fn(pair_key) to every pair occurrence of one article under the
// given slot->journal assignment. Multiset mode streams occurrences directly;
// dedup mode collapses within the article first.
template <class Fn>
void for_each_article_pair(std::span<const std::uint32_t> journals, const PairOptions& options,
                           std::vector<std::uint64_t>& scratch, Fn&& fn) {
    const std::size_t k = journals.size();
    if (k < 2) return;
    if (options.mode == PairMode::multiset) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                if (options.self == SelfPairs::exclude && journals[i] == journals[j]) continue;
                fn(pack_pair(journals[i], journals[j]));
            }
        }
        return;
    }
    scratch.clear();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            if (options.self == SelfPairs::exclude && journals[i] == journals[j]) continue;
            scratch.push_back(pack_pair(journals[i], journals[j]));
        }
    }
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    for (const std::uint64_t key : scratch) fn(key);
}

}  // namespace

NullStats null_distribution(const Corpus& corpus, const PairCounts& counts,
                            std::uint32_t R, std::uint64_t seed, int workers) {
    if (R < 2) throw std::invalid_argument("null_distribution: R must be >= 2 (sd undefined)");

    const auto strata = build_strata(corpus);
    const std::size_t n_pairs = counts.n_pairs();
    const std::size_t n_slots = corpus.n_slots();
    const std::size_t n_articles = corpus.articles.size();

    NullStats stats;
    stats.R = R;
    stats.seed = seed;
    stats.n_pairs = n_pairs;
    stats.realization_counts.assign(static_cast<std::size_t>(R) * n_pairs, 0);

    // Realizations are independent tasks; each writes only its own slice.
    parallel_tasks(R, workers, [&](std::size_t r) {
        std::vector<std::uint32_t> assignment(n_slots);
        shuffle_realization(strata, seed, static_cast<std::uint32_t>(r),
                            std::span<std::uint32_t>(assignment));
        std::uint32_t* slice = stats.realization_counts.data() + r * n_pairs;
        std::vector<std::uint64_t> scratch;
        for (std::size_t a = 0; a < n_articles; ++a) {
            const std::span<const std::uint32_t> journals(
                assignment.data() + corpus.refs_begin(a), corpus.refs_count(a));
            for_each_article_pair(journals, counts.options, scratch, [&](std::uint64_t key) {
                // Pairs never observed in the real corpus are not tracked.
                if (const std::uint32_t* idx = counts.find(key)) ++slice[*idx];
            });
        }
    });

    stats.mean.resize(n_pairs);
    stats.sd.resize(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        unsigned __int128 s1 = 0;
        unsigned __int128 s2 = 0;
        for (std::uint32_t r = 0; r < R; ++r) {
            const std::uint64_t c = stats.count(r, p);
            s1 += c;
            s2 += static_cast<unsigned __int128>(c) * c;
        }
        // Population convention: divide by R. var = (R*S2 - S1^2) / R^2, all
        // integer until the final division, so mean/sd are exact functions of
        // the counts.
        const auto var_num = static_cast<double>(R * s2 - s1 * s1);
        stats.mean[p] = static_cast<double>(s1) / R;
        stats.sd[p] = std::sqrt(var_num) / R;
    }
    return stats;
}

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct StratumView {
    std::map<std::uint32_t, std::uint32_t> multiset;  // journal -> count
    std::size_t size = 0;
};

// P(specific distinct slots of one stratum draw the given journal sequence),
// i.e. ordered sampling without replacement from the stratum multiset.
Rational ordered_draw_prob(const StratumView& stratum,
                           std::span<const std::uint32_t> journals) {
    BigInt num = 1;
    BigInt den = 1;
    std::map<std::uint32_t, std::uint32_t> used;
    for (std::size_t t = 0; t < journals.size(); ++t) {
        const std::uint32_t j = journals[t];
        auto it = stratum.multiset.find(j);
        const std::uint32_t have = it == stratum.multiset.end() ? 0 : it->second;
        const std::uint32_t already = used[j];
        if (have <= already) return Rational(0);
        num *= (have - already);
        den *= static_cast<std::uint32_t>(stratum.size - t);
        ++used[j];
    }
    return Rational(num, den);
}

// A requirement is a set of (slot, journal) assignments; slots are globally
// indexed, each slot belongs to one stratum. Probability factorizes over
// strata because permutations are independent across them.
class RequirementProb {
public:
    RequirementProb(std::span<const StratumView> strata,
                    std::span<const std::uint32_t> slot_stratum)
        : strata_(strata), slot_stratum_(slot_stratum) {}

    // entries: (slot, journal), conflicts yield probability 0.
    Rational operator()(std::span<const std::pair<std::uint32_t, std::uint32_t>> entries) const {
        // Dedup identical entries, reject conflicting ones.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> cleaned(entries.begin(),
                                                                     entries.end());
        std::sort(cleaned.begin(), cleaned.end());
        cleaned.erase(std::unique(cleaned.begin(), cleaned.end()), cleaned.end());
        for (std::size_t i = 1; i < cleaned.size(); ++i) {
            if (cleaned[i].first == cleaned[i - 1].first) return Rational(0);
        }
        // Group by stratum.
        Rational prob = 1;
        std::size_t i = 0;
        while (i < cleaned.size()) {
            const std::uint32_t stratum = slot_stratum_[cleaned[i].first];
            std::vector<std::uint32_t> journals;
            std::size_t j = i;
            while (j < cleaned.size() && slot_stratum_[cleaned[j].first] == stratum) {
                journals.push_back(cleaned[j].second);
                ++j;
            }
            prob *= ordered_draw_prob(strata_[stratum], journals);
            if (prob == 0) return prob;
            i = j;
        }
        return prob;
    }

private:
    std::span<const StratumView> strata_;
    std::span<const std::uint32_t> slot_stratum_;
};

}  // namespace

ExactNull exact_null(const Corpus& corpus, const PairCounts& counts,
                     std::size_t max_stratum_slots, std::size_t max_slot_pairs) {
    const auto strata_raw = build_strata(corpus);
    for (const auto& s : strata_raw) {
        if (s.slots.size() > max_stratum_slots) {
            throw std::runtime_error(
                "exact_null: stratum (" + std::to_string(s.citing_year) + "," +
                std::to_string(s.cited_year) + ") has " + std::to_string(s.slots.size()) +
                " slots, over the enumeration bound of " + std::to_string(max_stratum_slots));
        }
    }

    std::vector<StratumView> strata(strata_raw.size());
    std::vector<std::uint32_t> slot_stratum(corpus.n_slots());
    for (std::size_t i = 0; i < strata_raw.size(); ++i) {
        strata[i].size = strata_raw[i].slots.size();
        for (std::size_t k = 0; k < strata_raw[i].slots.size(); ++k) {
            slot_stratum[strata_raw[i].slots[k]] = static_cast<std::uint32_t>(i);
            ++strata[i].multiset[strata_raw[i].journals[k]];
        }
    }

    // All slot pairs (with their article's pair options applied lazily below).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> slot_pairs;
    for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
        for (std::size_t s = corpus.refs_begin(a); s < corpus.refs_end(a); ++s) {
            for (std::size_t t = s + 1; t < corpus.refs_end(a); ++t) {
                slot_pairs.emplace_back(static_cast<std::uint32_t>(s),
                                        static_cast<std::uint32_t>(t));
            }
        }
    }
    if (slot_pairs.size() > max_slot_pairs) {
        throw std::runtime_error("exact_null: " + std::to_string(slot_pairs.size()) +
                                 " slot pairs exceed the work budget of " +
                                 std::to_string(max_slot_pairs) +
                                 "; use the Monte Carlo null for corpora this size");
    }
    if (counts.options.mode != PairMode::multiset || counts.options.self != SelfPairs::include) {
        throw std::runtime_error(
            "exact_null supports the default multiset/include-self pair options");
    }

    const RequirementProb prob(strata, slot_stratum);
    ExactNull out;
    out.n_pairs = counts.n_pairs();
    out.mean.resize(out.n_pairs);
    out.sd.resize(out.n_pairs);

    using Entry = std::pair<std::uint32_t, std::uint32_t>;
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        const std::uint32_t u = pair_lo(counts.keys[p]);
        const std::uint32_t v = pair_hi(counts.keys[p]);

        // Ordered events per slot pair: (s<-u, t<-v) and, for u != v, the swap.
        // X_pair = sum of disjoint event indicators.
        struct Event {
            Entry e0;
            Entry e1;
        };
        std::vector<Event> events;
        std::vector<Rational> event_prob;
        for (const auto& [s, t] : slot_pairs) {
            const Event forward{Entry{s, u}, Entry{t, v}};
            events.push_back(forward);
            if (u != v) {
                events.push_back(Event{Entry{s, v}, Entry{t, u}});
            }
        }
        event_prob.reserve(events.size());
        Rational mean = 0;
        for (const auto& ev : events) {
            const std::array<Entry, 2> req{ev.e0, ev.e1};
            Rational pr = prob(std::span<const Entry>(req.data(), req.size()));
            mean += pr;
            event_prob.push_back(std::move(pr));
        }

        // Second moment: sum over ordered event pairs of joint probabilities.
        Rational second = 0;
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (event_prob[i] == 0) continue;
            for (std::size_t j = 0; j < events.size(); ++j) {
                if (event_prob[j] == 0) continue;
                if (i == j) {
                    second += event_prob[i];
                    continue;
                }
                const std::array<Entry, 4> req{events[i].e0, events[i].e1, events[j].e0,
                                               events[j].e1};
                second += prob(std::span<const Entry>(req.data(), req.size()));
            }
        }
        const Rational variance = second - mean * mean;
        out.mean[p] = mean.convert_to<double>();
        const double var_d = variance.convert_to<double>();
        out.sd[p] = var_d <= 0 ? 0.0 : std::sqrt(var_d);
    }
    return out;
}

std::string nullstats_to_csv(const Corpus& corpus, const PairCounts& counts,
                             const NullStats& nulls) {
    std::vector<std::size_t> order(counts.n_pairs());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto row_names = [&](std::size_t i) {
        const std::string& x = corpus.journal_name(pair_lo(counts.keys[i]));
        const std::string& y = corpus.journal_name(pair_hi(counts.keys[i]));
        return x <= y ? std::pair<const std::string&, const std::string&>(x, y)
                      : std::pair<const std::string&, const std::string&>(y, x);
    };
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return row_names(l) < row_names(r); });
    std::ostringstream out;
    out << "journal_a,journal_b,obs,null_mean,null_sd,R,seed\n";
    for (std::size_t i : order) {
        const auto [a, b] = row_names(i);
        out << a << "," << b << "," << counts.counts[i] << "," << format_double(nulls.mean[i])
            << "," << format_double(nulls.sd[i]) << "," << nulls.R << "," << nulls.seed << "\n";
    }
    return std::move(out).str();
}

}  // namespace recomb
