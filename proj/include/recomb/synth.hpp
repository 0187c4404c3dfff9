#pragma once

// Synthetic corpora with known ground truth. Journals live in communities
// with Zipf-like popularity; reference draws stay inside the article's home
// community with probability `alpha`, shifted by the country count through
// `beta` (and optionally by team size through `author_coupling`). A positive
// beta makes multi-country articles draw more frequent within-community
// pairs: median pair z rises, the novel tail thins out.

#include <cstdint>
#include <string>
#include <vector>

#include "recomb/corpus.hpp"

namespace recomb {

struct SynthParams {
    std::size_t n_articles = 1000;
    std::uint32_t n_journals = 500;
    std::uint32_t n_fields = 10;
    std::uint32_t n_communities = 10;
    double popularity_exponent = 1.0;  // 0 = uniform within community
    double alpha = 0.5;                // base within-community affinity
    double beta = 0.0;                 // affinity shift per extra country
    double author_coupling = 0.0;      // affinity shift per extra author

    std::vector<double> country_pmf = {0.75, 0.18, 0.05, 0.015, 0.005};  // count = index+1
    double authors_extra_mean = 2.5;  // authors = countries + Poisson(mean)
    // Reference counts ~ negative binomial via a Poisson-Gamma mixture:
    // dispersion r gives variance mean + mean^2/r; r <= 0 means plain Poisson.
    double refs_mean = 22.0;
    double refs_dispersion = 2.0;
    int refs_min = 0;

    int citing_year_min = 2005;
    int citing_year_max = 2005;
    double cited_lag_p = 0.25;  // lag = 1 + geometric(p), truncated
    int cited_lag_max = 8;

    bool emit_citations = true;
    double cite_base = 2.0;
    double cite_countries = 4.0;
    double cite_authors = 0.15;
    double cite_refs = 0.5;
    double cite_noise_sd = 5.0;

    std::uint64_t seed = 42;
};

struct PlantedTruth {
    // Expected coefficient signs (-1, 0, +1).
    int countries_on_novelty = 0;
    int countries_on_conventionality = 0;
    int authors_on_novelty = 0;
    int authors_on_conventionality = 0;
    // Category whose multinomial coefficient on countries should dominate
    // (0 when beta = 0).
    int dominant_category = 0;
};

// Deterministic for a fixed seed: article i is a pure function of
// (seed, i), so generation parallelizes without changing the output.
Corpus generate(const SynthParams& params, int workers = 1);

PlantedTruth planted_truth(const SynthParams& params);

std::string synth_params_to_json(const SynthParams& params);

}  // namespace recomb
