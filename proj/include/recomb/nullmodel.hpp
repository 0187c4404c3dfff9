#pragma once

// Randomized realizations of the citation structure. Reference slots are
// partitioned into (citing year, cited year) strata; each realization permutes
// the journals within every stratum, which preserves per-article reference
// counts, per-stratum journal multisets, and the total pair mass exactly.
//
// Determinism contract: a realization's permutation is a pure function of
// (seed, stratum key, realization index), so NullStats is bitwise identical
// for any worker count or scheduling order.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recomb/corpus.hpp"
#include "recomb/pairs.hpp"

namespace recomb {

struct ShuffleStratum {
    int citing_year = 0;
    int cited_year = 0;
    std::vector<std::uint32_t> slots;     // global slot positions (CSR index)
    std::vector<std::uint32_t> journals;  // dense journal ids, parallel to slots
};

// Strata sorted by (citing_year, cited_year); together they cover every slot
// exactly once.
std::vector<ShuffleStratum> build_strata(const Corpus& corpus);

// Writes the realization's journal for every slot into `assignment`
// (size = corpus.n_slots()).
void shuffle_realization(std::span<const ShuffleStratum> strata, std::uint64_t seed,
                         std::uint32_t realization, std::span<std::uint32_t> assignment);

struct NullStats {
    std::uint32_t R = 0;
    std::uint64_t seed = 0;
    // realization_counts[r * n_pairs + p] = count of observed pair p in
    // realization r (0 when the pair never appeared there).
    std::vector<std::uint32_t> realization_counts;
    std::vector<double> mean;  // population mean over the R realizations
    std::vector<double> sd;    // population sd (divide by R)
    std::size_t n_pairs = 0;

    std::uint32_t count(std::uint32_t realization, std::size_t pair) const {
        return realization_counts[static_cast<std::size_t>(realization) * n_pairs + pair];
    }
};

// Monte Carlo null over R >= 2 realizations; statistics cover exactly the
// pairs observed in the real corpus (keyed by PairCounts dense ids).
NullStats null_distribution(const Corpus& corpus, const PairCounts& counts,
                            std::uint32_t R, std::uint64_t seed, int workers = 1);

struct ExactNull {
    std::vector<double> mean;  // exact rationals rounded at output
    std::vector<double> sd;
    std::size_t n_pairs = 0;
};

// Exact per-pair mean and sd over the full product of per-stratum
// permutations, computed by first/second moments of slot-pair indicators in
// exact rational arithmetic. Strata over max_stratum_slots are an error, as is
// a corpus whose slot-pair covariance sum exceeds the work budget.
ExactNull exact_null(const Corpus& corpus, const PairCounts& counts,
                     std::size_t max_stratum_slots = 8,
                     std::size_t max_slot_pairs = 4000);

// journal_a,journal_b,obs,null_mean,null_sd,R,seed
std::string nullstats_to_csv(const Corpus& corpus, const PairCounts& counts,
                             const NullStats& nulls);

}  // namespace recomb
